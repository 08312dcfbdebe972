# coding:utf-8
import numpy as np
import pytest

from app.cli.gradcheck_suite import CASES, TOLERANCE, GradCase, run_suite
from core.tensor import functional as F
from core.tensor.tensor import Function, Tensor


class LeakyAdjoint(Function):
    """ leaky relu whose adjoint forgets the negative slope """

    def forward(self, x):
        self.x = x
        return np.where(x > 0, x, 0.2 * x)

    def backward(self, grad):
        return grad * (self.x > 0),


def leaky_case(rng):
    x = Tensor(rng.uniform(-2.0, -0.5, size=5), requires_grad=True)
    return (lambda t: F.sum_(LeakyAdjoint.apply(t))), x


class TestSuite:

    def test_case_names_are_unique(self):
        names = [c.name for c in CASES]
        assert len(names) == len(set(names))

    def test_covers_layers_geometry_and_full_graph(self):
        names = {c.name for c in CASES}
        for expected in ("conv3d.input", "conv2d.weight", "trilinear_resample", "adain", "spectral_normalize",
                         "identity_loss", "generator+losses.z", "generator+losses.constant"):
            assert expected in names

    def test_op_subset_passes(self):
        subset = [c for c in CASES if c.name in ("mul", "div", "softplus", "std", "conv2d.input",
                                                   "upsample_nearest", "instance_norm", "map_style")]
        results = run_suite(subset, instances=2, seed=1)
        assert len(results) == 8
        assert all(r.passed for r in results), [(r.name, r.error) for r in results if not r.passed]

    def test_wrong_adjoint_fails(self):
        result, = run_suite([GradCase("leaky", leaky_case)], instances=1)
        assert not result.passed and result.error > TOLERANCE and not result.message

    def test_contract_error_is_reported(self):
        def scalar(rng):
            return (lambda t: t), Tensor(rng.uniform(size=3), requires_grad=True)

        result, = run_suite([GradCase("vector", scalar)], instances=1)
        assert not result.passed and "scalar" in result.message


@pytest.mark.slow
class TestFullSuite:

    def test_everything_passes(self):
        results = run_suite(instances=3)
        assert all(r.passed for r in results), [(r.name, r.error, r.message) for r in results if not r.passed]
