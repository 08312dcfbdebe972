# coding:utf-8
import numpy as np
import pytest

from app.common.config import TrainConfig
from app.model.discriminator import Discriminator
from app.model.generator import Generator, GeneratorConfig
from core.tensor.tensor import precision


TINY = dict(resolution=32, latent_dim=4, channel_divisor=64)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def float64():
    """ run the test with 64-bit tensors """
    with precision(np.float64):
        yield


@pytest.fixture
def tiny_generator_config():
    return GeneratorConfig(**TINY)


@pytest.fixture
def tiny_generator(tiny_generator_config):
    return Generator(tiny_generator_config, np.random.default_rng(7))


@pytest.fixture
def tiny_discriminator():
    return Discriminator(32, 4, np.random.default_rng(8), channel_divisor=64)


def tiny_train_config(out, **overrides) -> TrainConfig:
    """ a run small enough for a unit test: 32x32, few channels, a handful of images """
    values = dict(TINY, batch_size=2, steps=3, seed=3, out=str(out), synthetic_items=8,
                  log_every=1, sample_every=0, checkpoint_every=0)
    values.update(overrides)
    return TrainConfig(**values)


@pytest.fixture
def tiny_config(tmp_path):
    return tiny_train_config(tmp_path / "run")
