# coding:utf-8
import numpy as np
import pytest
from scipy.linalg import svdvals

from core.common.exception_handler import ContractError, ShapeError
from core.nn.layers import (MappingNetwork, ParameterStore, SpectralNorm, StyleParams, adain, instance_norm,
                            instance_stats, map_style, spectral_normalize)
from core.tensor.functional import STD_EPS
from core.tensor.tensor import Tensor


def stats_oracle(x):
    axes = tuple(range(1, x.ndim - 1))
    mu = x.mean(axis=axes)
    centered = x - np.expand_dims(mu, axes)
    return mu, np.sqrt((centered ** 2).mean(axis=axes) + STD_EPS)


class TestInstanceStats:

    def test_constant_channel(self, float64):
        mu, sigma = instance_stats(Tensor(np.full((1, 3, 3, 2), 4.0)))
        assert np.allclose(mu.numpy(), 4.0)
        assert np.allclose(sigma.numpy(), np.sqrt(1e-5))

    def test_plus_minus_one(self, float64):
        mu, sigma = instance_stats(Tensor(np.array([[[1.0], [-1.0]]])))
        assert mu.item() == pytest.approx(0.0)
        assert sigma.item() == pytest.approx(np.sqrt(1 + 1e-5))

    def test_two_pass_oracle(self, float64, rng):
        x = rng.normal(2.0, 3.0, size=(2, 4, 5, 3, 4))
        mu, sigma = instance_stats(Tensor(x))
        mu0, sigma0 = stats_oracle(x)
        assert np.allclose(mu.numpy(), mu0, atol=1e-6)
        assert np.allclose(sigma.numpy(), sigma0, atol=1e-6)

    def test_needs_spatial_elements(self):
        with pytest.raises(ShapeError):
            instance_stats(Tensor(np.zeros((2, 1, 3))))


class TestInstanceNorm:

    def test_output_statistics(self, float64, rng):
        mu, sigma = stats_oracle(instance_norm(Tensor(rng.normal(1.0, 2.0, size=(2, 6, 6, 3)))).numpy())
        assert np.abs(mu).max() <= 1e-6
        assert np.abs(sigma - 1.0).max() <= 1e-3

    def test_affine_invariance(self, float64, rng):
        x = rng.normal(0.0, 3.0, size=(2, 5, 5, 3))
        a, b = 2.0, -1.5
        assert np.allclose(instance_norm(Tensor(a * x + b)).numpy(), instance_norm(Tensor(x)).numpy(), atol=1e-5)

    def test_constant_input(self, float64):
        assert not instance_norm(Tensor(np.full((1, 4, 4, 2), 3.0))).numpy().any()


class TestAdain:

    def test_unit_style_keeps_normalized_input(self, float64, rng):
        x = rng.normal(size=(2, 6, 6, 3))
        mu, sigma = stats_oracle(x)
        x = (x - mu[:, None, None, :]) / np.sqrt(sigma[:, None, None, :] ** 2 - STD_EPS)
        style = StyleParams(Tensor(np.ones((2, 3))), Tensor(np.zeros((2, 3))))
        assert np.allclose(adain(Tensor(x), style).numpy(), x, atol=1e-3)

    def test_zero_gamma_gives_beta(self, float64, rng):
        beta = rng.normal(size=(2, 3))
        style = StyleParams(Tensor(np.zeros((2, 3))), Tensor(beta))
        out = adain(Tensor(rng.normal(size=(2, 4, 4, 3))), style).numpy()
        assert np.allclose(out, beta[:, None, None, :])

    def test_output_statistics(self, float64, rng):
        gamma = rng.uniform(0.5, 2.0, size=(2, 3)) * rng.choice([-1.0, 1.0], size=(2, 3))
        beta = rng.normal(size=(2, 3))
        out = adain(Tensor(rng.normal(0.5, 1.5, size=(2, 5, 5, 5, 3))), StyleParams(Tensor(gamma), Tensor(beta)))
        mu, sigma = stats_oracle(out.numpy())
        assert np.allclose(mu, beta, atol=1e-5)
        assert np.allclose(sigma, np.abs(gamma), atol=1e-3)

    def test_width_mismatch(self):
        style = StyleParams(Tensor(np.ones((1, 2))), Tensor(np.zeros((1, 2))))
        with pytest.raises(ShapeError):
            adain(Tensor(np.ones((1, 4, 4, 3))), style)


class TestMapping:

    def net(self, rng):
        net = MappingNetwork(ParameterStore("m"), 5, rng, hidden=8)
        net.add_site("s", 3)
        return net

    def test_zero_weights_give_identity_modulation(self, rng):
        net = self.net(rng)
        for name, p in net.store.items():
            if name.endswith("/w"):
                p.data[...] = 0.0

        style = map_style(Tensor(rng.uniform(-1, 1, size=(2, 5))), net, "s")
        assert np.array_equal(style.gamma.numpy(), np.ones((2, 3)))
        assert np.array_equal(style.beta.numpy(), np.zeros((2, 3)))

    def test_deterministic_and_latent_dependent(self, rng):
        net = self.net(rng)
        z = Tensor(rng.uniform(-1, 1, size=(1, 5)))
        first, again = map_style(z, net, "s"), net(z, "s")
        assert np.array_equal(first.gamma.numpy(), again.gamma.numpy())

        other = map_style(Tensor(rng.uniform(-1, 1, size=(1, 5))), net, "s")
        assert not np.array_equal(first.gamma.numpy(), other.gamma.numpy())

    def test_unknown_site(self, rng):
        with pytest.raises(ContractError, match="unknown style site"):
            map_style(Tensor(np.zeros((1, 5))), self.net(rng), "nope")


class TestSpectralNorm:

    def test_diagonal(self, float64, rng):
        w = Tensor(np.diag([3.0, 1.0]))
        out = spectral_normalize(w, SpectralNorm(w.shape, rng), iterations=50)
        assert np.allclose(out.numpy(), np.diag([1.0, 1.0 / 3.0]), atol=1e-6)

    def test_matches_svd(self, rng):
        for _ in range(20):
            w = rng.normal(size=(64, 64))
            sigma = SpectralNorm(w.shape, rng).power_iteration(w, 50)
            assert sigma == pytest.approx(svdvals(w)[0], rel=0.01)

    def test_close_top_singular_values(self, rng):
        left, _ = np.linalg.qr(rng.normal(size=(64, 64)))
        right, _ = np.linalg.qr(rng.normal(size=(64, 64)))
        s = np.linspace(15.0, 1.0, 64)
        s[1] = 14.9
        w = (left * s) @ right.T
        sigma = SpectralNorm(w.shape, rng).power_iteration(w, 50)
        assert sigma == pytest.approx(15.0, rel=0.01)

    def test_restored_vectors_are_kept(self, rng):
        w = rng.normal(size=(5, 4))
        sn = SpectralNorm(w.shape, rng)
        sn.power_iteration(w)
        stored = sn.state()

        restored = SpectralNorm(w.shape, np.random.default_rng(99))
        restored.load(stored)
        expected = float(stored["u"] @ SpectralNorm.matrix(w) @ stored["v"])
        assert restored.power_iteration(w, 0) == pytest.approx(expected)
        assert np.array_equal(restored.u, stored["u"])

    def test_orthogonal_unchanged(self, float64, rng):
        q, _ = np.linalg.qr(rng.normal(size=(6, 6)))
        out = spectral_normalize(Tensor(q), SpectralNorm(q.shape, rng), iterations=5)
        assert np.allclose(out.numpy(), q, atol=1e-3)

    def test_scale_invariant(self, float64):
        w = np.random.default_rng(5).normal(size=(3, 3, 2, 4))
        a = spectral_normalize(Tensor(w), SpectralNorm(w.shape, np.random.default_rng(0)), iterations=100)
        b = spectral_normalize(Tensor(7.0 * w), SpectralNorm(w.shape, np.random.default_rng(0)), iterations=100)
        assert np.allclose(a.numpy(), b.numpy(), atol=1e-5)

    def test_zero_weight(self, float64, rng):
        out = spectral_normalize(Tensor(np.zeros((3, 3, 2, 2))), SpectralNorm((3, 3, 2, 2), rng))
        assert np.isfinite(out.numpy()).all() and not out.numpy().any()

    def test_update_flag(self, rng):
        w = Tensor(rng.normal(size=(3, 4)))
        sn = SpectralNorm(w.shape, rng)
        u = sn.u.copy()
        spectral_normalize(w, sn, update=False)
        assert np.array_equal(sn.u, u)

        spectral_normalize(w, sn)
        assert not np.array_equal(sn.u, u)


class TestParameterStore:

    def test_duplicate_name(self, rng):
        store = ParameterStore("g")
        store.normal("w", (2, 2), rng)
        with pytest.raises(ContractError):
            store.zeros("w", (2, 2))

    def test_state_round_trip(self, rng):
        store = ParameterStore("g")
        store.normal("a/w", (2, 3), rng)
        state = store.state_dict()
        store["a/w"].data[...] = 0.0
        store.load_state_dict(state)
        assert np.array_equal(store["a/w"].numpy(), state["g/a/w"])

        with pytest.raises(ShapeError):
            store.load_state_dict({"g/a/w": np.zeros((3, 2))})
