# coding:utf-8
import numpy as np
import pytest

from app.model.generator import Generator, GeneratorConfig
from app.train.sampling import sample_latent
from core.common.exception_handler import ContractError, NonFiniteError, ShapeError
from core.nn.geometry import Pose
from core.tensor import functional as F
from core.tensor.tensor import Tensor, no_grad

from tests.conftest import TINY


def latents(rng, n=2, d=4):
    return sample_latent(rng, d, n)


class TestConfig:

    def test_widths_follow_divisor(self, tiny_generator_config):
        assert tiny_generator_config.widths3d == (8, 4, 1)
        assert tiny_generator_config.widths2d == (4,)
        assert GeneratorConfig(resolution=128).widths2d == (256, 64, 32)

    def test_unsupported_resolution(self):
        with pytest.raises(ContractError):
            GeneratorConfig(resolution=48)


class TestGenerate:

    def test_shape_and_range(self, tiny_generator, rng):
        z = latents(rng)
        with no_grad():
            out = tiny_generator(z, z, Pose(30.0, 10.0, 1.05)).numpy()
        assert out.shape == (2, 32, 32, 3)
        assert np.isfinite(out).all() and np.abs(out).max() <= 1.0

    def test_deterministic(self, tiny_generator, rng):
        z = latents(rng)
        pose = [Pose(10.0), Pose(-25.0, 5.0)]
        with no_grad():
            assert np.array_equal(tiny_generator(z, z, pose).numpy(), tiny_generator(z, z, pose).numpy())

    def test_pose_changes_image(self, tiny_generator, rng):
        z = latents(rng, 1)
        with no_grad():
            front = tiny_generator(z, z, Pose(0.0)).numpy()
            back = tiny_generator(z, z, Pose(180.0)).numpy()
        assert not np.array_equal(front, back)

    def test_second_code_only_styles_the_image(self, tiny_generator, rng):
        z1, z2a, z2b = latents(rng, 1), latents(rng, 1), latents(rng, 1)
        pose = Pose(15.0)
        with no_grad():
            volume = tiny_generator.volume(z1, pose)
            shared = volume.numpy().copy()
            a = tiny_generator.render(volume, z2a).numpy()
            b = tiny_generator.render(volume, z2b).numpy()

            # the whole image, z2 included, comes from that one z2-free volume
            assert np.array_equal(a, tiny_generator(z1, z2a, pose).numpy())
            assert np.array_equal(b, tiny_generator(z1, z2b, pose).numpy())
        assert np.array_equal(volume.numpy(), shared)
        assert not np.array_equal(a, b)

    def test_per_block_codes(self, tiny_generator, rng):
        z = latents(rng)
        with no_grad():
            shared = tiny_generator(z, z, Pose()).numpy()
            listed = tiny_generator([z, z], [z], Pose()).numpy()
        assert np.array_equal(shared, listed)

        with pytest.raises(ShapeError):
            tiny_generator([z], z, Pose())

    def test_latent_width_checked(self, tiny_generator):
        with pytest.raises(ShapeError):
            tiny_generator(Tensor(np.zeros((1, 5))), Tensor(np.zeros((1, 5))), Pose())

    def test_non_finite_constant(self, tiny_generator, rng):
        tiny_generator.constant.data[...] = np.nan
        z = latents(rng, 1)
        with pytest.raises(NonFiniteError):
            tiny_generator(z, z, Pose())


class TestTraining:

    def test_no_rotation_ignores_pose_while_training(self, rng):
        gen = Generator(GeneratorConfig(**TINY, no_rotation=True), np.random.default_rng(7))
        z = latents(rng, 1)
        with no_grad():
            still = gen.volume(z, Pose(0.0), training=True).numpy()
            turned = gen.volume(z, Pose(90.0), training=True).numpy()
            shown = gen.volume(z, Pose(90.0)).numpy()
            images = [gen(z, z, Pose(a, e), training=True).numpy() for a, e in ((0.0, 0.0), (120.0, -15.0))]
        assert np.array_equal(still, turned)
        assert not np.array_equal(still, shown)
        assert np.array_equal(*images)

    def test_every_parameter_gets_a_gradient(self, tiny_generator, rng):
        z = latents(rng)
        out = tiny_generator(z, z, Pose(20.0, 5.0, 1.05))
        r = Tensor(rng.normal(size=out.shape).astype(out.dtype))
        F.sum_(out * r).backward()
        for name, p in tiny_generator.params.items():
            assert p.grad is not None and np.abs(p.grad).max() > 0, name


class TestTraditional:

    def generator(self):
        return Generator(GeneratorConfig(**TINY, traditional_z=True), np.random.default_rng(7))

    def test_has_input_layer_instead_of_constant(self):
        names = self.generator().params.names()
        assert "g/constant" not in names
        assert "g/input/w" in names
        assert not any("style" in n for n in names)

    def test_zero_code_gives_flat_image(self):
        z = Tensor(np.zeros((1, 4)))
        with no_grad():
            out = self.generator().generate_traditional(z, Pose(30.0)).numpy()
        assert out.shape == (1, 32, 32, 3)
        assert np.ptp(out) == 0

    def test_only_for_traditional_generators(self, tiny_generator):
        with pytest.raises(ContractError):
            tiny_generator.generate_traditional(Tensor(np.zeros((1, 4))), Pose())


class TestStages:

    def test_render_sweep(self, tiny_generator, rng):
        z = latents(rng, 1)
        frames = tiny_generator.render_sweep(z, z, [Pose(a) for a in (0.0, 45.0, 90.0)])
        assert len(frames) == 3 and all(f.shape == (1, 32, 32, 3) for f in frames)

        with pytest.raises(ContractError):
            tiny_generator.render_sweep(z, z, [])

    def test_projection_folds_depth_into_channels(self, tiny_generator, rng):
        volume = Tensor(rng.normal(size=(1, 16, 16, 16, 1)).astype(np.float32))
        w = tiny_generator.projection.weight.data
        w[...] = 0.0
        w[0, 0, 0, 0] = 1.0
        with no_grad():
            out = tiny_generator.project(volume).numpy()

        front = volume.numpy()[..., 0, 0]
        assert out.shape == (1, 16, 16, tiny_generator.config.projected)
        assert np.allclose(out[..., 0], np.where(front > 0, front, 0.2 * front), atol=1e-6)
        assert not out[..., 1:].any()

    def test_projection_needs_a_volume(self, tiny_generator):
        with pytest.raises(ShapeError):
            tiny_generator.project(Tensor(np.zeros((1, 4, 4, 4))))
