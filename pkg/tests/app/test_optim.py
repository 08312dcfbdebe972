# coding:utf-8
import numpy as np
import pytest

from app.train.optim import Adam, adam_step
from core.common.exception_handler import ContractError
from core.nn.layers import ParameterStore


def store(rng):
    params = ParameterStore("p")
    params.normal("a", (3, 2), rng, std=1.0)
    params.normal("b", (4,), rng, std=1.0)
    return params


class TestAdamStep:

    def test_first_step_moves_by_lr_against_the_sign(self, rng):
        p, g = rng.normal(size=5), rng.uniform(0.5, 2.0, size=5) * rng.choice([-1.0, 1.0], size=5)
        new, _, _ = adam_step(p, g, np.zeros(5), np.zeros(5), 1e-3, 0.5, 0.999, 1e-8, 1)
        assert np.allclose(new, p - 1e-3 * np.sign(g), atol=1e-10)

    def test_two_steps_by_hand(self):
        lr, b1, b2, eps = 0.1, 0.5, 0.9, 1e-8
        p, m, v = np.array([1.0]), np.zeros(1), np.zeros(1)
        p, m, v = adam_step(p, np.array([2.0]), m, v, lr, b1, b2, eps, 1)
        first = 1.0 - 0.1 * 2.0 / (2.0 + eps)
        assert abs(p[0] - first) <= 1e-12

        p, m, v = adam_step(p, np.array([1.0]), m, v, lr, b1, b2, eps, 2)
        # m = 0.5 * 2 * 0.5 + 0.5 * 1, v = 0.9 * 0.4 + 0.1 * 1
        assert m[0] == pytest.approx(1.0, abs=1e-12)
        assert v[0] == pytest.approx(0.46, abs=1e-12)

        m_hat, v_hat = 1.0 / (1 - 0.25), 0.46 / (1 - 0.81)
        assert abs(p[0] - (first - 0.1 * m_hat / (np.sqrt(v_hat) + eps))) <= 1e-10

    def test_step_counter_starts_at_one(self):
        with pytest.raises(ContractError):
            adam_step(np.zeros(1), np.zeros(1), np.zeros(1), np.zeros(1), 0.1, 0.5, 0.9, 1e-8, 0)


class TestAdam:

    def test_zero_gradients_leave_parameters(self, rng):
        params = store(rng)
        before = params.state_dict()
        Adam(params).step()
        assert all(np.array_equal(p.data, before[k]) for k, p in params.items())

    def test_non_finite_gradient_skips_the_step(self, rng):
        params = store(rng)
        before = params.state_dict()
        opt = Adam(params)
        params["a"].grad = np.ones((3, 2), dtype=np.float32)
        params["b"].grad = np.array([0.0, np.nan, 0.0, 0.0], dtype=np.float32)

        assert opt.step() is False
        assert opt.t == 0 and opt.skipped == 1
        assert all(np.array_equal(p.data, before[k]) for k, p in params.items())

    def test_state_round_trip(self, float64, rng):
        params = store(rng)
        opt = Adam(params, lr=0.01)
        for _ in range(3):
            for p in params:
                p.grad = rng.normal(size=p.shape)
            opt.step()

        twin = store(np.random.default_rng(0))
        twin.load_state_dict(params.state_dict())
        restored = Adam(twin, lr=0.01)
        restored.load_state_dict(opt.state_dict("opt"), "opt")
        assert restored.t == 3

        grads = {k: rng.normal(size=p.shape) for k, p in params.items()}
        for target in (params, twin):
            for k, p in target.items():
                p.grad = grads[k]
        opt.step()
        restored.step()
        assert all(np.array_equal(p.data, twin[k[2:]].data) for k, p in params.items())
