# coding:utf-8
import math

import numpy as np
import pytest
from scipy.special import expit

from app.model.losses import (LossReport, LossWeights, gan_loss_d, gan_loss_g, identity_loss, style_loss_d,
                              style_loss_g, style_losses_g, total_loss_g)
from core.common.exception_handler import ContractError, ShapeError
from core.tensor.tensor import Tensor


LOG2 = math.log(2.0)


def zeros(n=4):
    return Tensor(np.zeros(n))


class TestGan:

    def test_undecided_discriminator(self):
        assert gan_loss_d(zeros(), zeros()).item() == pytest.approx(2 * LOG2)
        assert gan_loss_g(zeros()).item() == pytest.approx(LOG2)

    def test_matches_naive_logistic_form(self, float64, rng):
        real, fake = rng.uniform(-20, 20, size=64), rng.uniform(-20, 20, size=64)
        naive_d = -np.log(expit(real)).mean() - np.log(1.0 - expit(fake)).mean()
        naive_g = -np.log(expit(fake)).mean()
        assert gan_loss_d(Tensor(real), Tensor(fake)).item() == pytest.approx(naive_d, abs=1e-6)
        assert gan_loss_g(Tensor(fake)).item() == pytest.approx(naive_g, abs=1e-6)

    def test_finite_for_extreme_logits(self):
        big = Tensor(np.array([1e4, -1e4]))
        assert np.isfinite(gan_loss_d(big, big).item())
        assert gan_loss_g(Tensor(np.array([-1e4]))).item() == pytest.approx(1e4)


class TestIdentity:

    def test_squared_distance(self):
        assert identity_loss(Tensor(np.zeros((1, 128))), Tensor(np.ones((1, 128)))).item() == pytest.approx(128.0)

    def test_batch_mean(self):
        z = Tensor(np.zeros((2, 2)))
        z_hat = Tensor(np.array([[1.0, 1.0], [0.0, 0.0]]))
        assert identity_loss(z, z_hat).item() == pytest.approx(1.0)

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            identity_loss(Tensor(np.zeros((2, 3))), Tensor(np.zeros((2, 4))))


class TestStyle:

    def test_sums_levels(self):
        total = style_loss_g([zeros(), zeros(), zeros()])
        assert total.shape == () and total.item() == pytest.approx(3 * LOG2)
        assert [t.item() for t in style_losses_g([zeros(), zeros(), zeros()])] == pytest.approx([LOG2] * 3)
        assert style_loss_d([zeros()] * 3, [zeros()] * 3).item() == pytest.approx(6 * LOG2)

    def test_levels_add_up_to_the_total(self, rng):
        logits = [Tensor(rng.normal(size=4)) for _ in range(3)]
        levels = style_losses_g(logits)
        assert sum(t.item() for t in levels) == pytest.approx(style_loss_g(logits).item(), abs=1e-6)
        assert style_loss_g(logits[:1]).item() == pytest.approx(gan_loss_g(logits[0]).item())

    def test_level_count_mismatch(self):
        with pytest.raises(ContractError):
            style_loss_d([zeros()] * 3, [zeros()] * 2)
        with pytest.raises(ContractError):
            style_loss_g([])


class TestTotal:

    def test_weighted_sum(self):
        gan, identity, style = Tensor(1.5), Tensor(2.0), Tensor(4.0)
        total = total_loss_g(gan, identity, style, LossWeights(0.5, 0.25))
        assert total.item() == pytest.approx(1.5 + 1.0 + 1.0)

    def test_zero_weights_leave_gan_loss(self):
        gan = Tensor(0.7)
        assert total_loss_g(gan, Tensor(3.0), Tensor(5.0), LossWeights(0.0, 0.0)).item() == pytest.approx(0.7)

    def test_negative_weight(self):
        with pytest.raises(ContractError):
            LossWeights(lambda_identity=-1.0)


class TestLossReport:

    def report(self, **kwargs):
        values = dict(g_gan=0.7, g_identity=0.3, g_style_levels=(0.1, 0.2, 0.4), d_gan=1.2, d_style=2.5,
                      d_identity=0.6, weights=LossWeights(2.0, 0.5))
        values.update(kwargs)
        return LossReport(**values)

    def test_totals(self):
        report = self.report()
        assert report.g_style == pytest.approx(0.7)
        assert report.g_total == pytest.approx(0.7 + 2.0 * 0.3 + 0.5 * 0.7)
        assert report.d_total == pytest.approx(1.2 + 0.5 * 2.5 + 2.0 * 0.6)
        assert self.report(identity_updates_discriminator=False).d_total == pytest.approx(1.2 + 0.5 * 2.5)

    def test_row_follows_columns(self):
        row = self.report().row()
        assert list(row) == LossReport.columns(3)
        assert row["g_style_2"] == 0.4
