# coding:utf-8
"""
Gradient checks of every differentiable op, layer and loss, plus the full
generator -> discriminator -> loss graph, all in 64-bit.

Each case builds `(f, x)` from a generator: `f` is scalar-valued and `x` is
the leaf tensor whose tape gradient is compared with central differences.
Ops are checked through `sum(op(x) * r)` with a random `r`, so every
element of the adjoint matters.
"""
import logging
from dataclasses import dataclass
from typing import Callable, List, Sequence, Tuple

import numpy as np

from core.common.exception_handler import HoloError
from core.nn.geometry import Pose, build_grid, trilinear_resample
from core.nn.layers import (MappingNetwork, ParameterStore, SpectralNorm, StyleParams, adain, dense,
                            instance_norm, instance_stats, map_style, spectral_normalize)
from core.tensor import functional as F
from core.tensor.gradcheck import grad_check
from core.tensor.tensor import Tensor, precision

from ..model.discriminator import Discriminator
from ..model.generator import Generator, GeneratorConfig
from ..model.losses import (LossWeights, gan_loss_d, gan_loss_g, identity_loss, style_loss_g, total_loss_g)


logger = logging.getLogger(__name__)

TOLERANCE = 1e-4
STEP = 1e-5

Builder = Callable[[np.random.Generator], Tuple[Callable[[Tensor], Tensor], Tensor]]


@dataclass
class GradCase:
    name: str
    build: Builder
    max_elements: int = None


@dataclass
class GradResult:
    name: str
    error: float
    instances: int
    message: str = ""

    @property
    def passed(self):
        return not self.message and self.error <= TOLERANCE


CASES = []  # type: List[GradCase]


def case(name: str, max_elements: int = None):
    def register(build: Builder):
        CASES.append(GradCase(name, build, max_elements))
        return build

    return register


def _leaf(rng, shape, low=-1.0, high=1.0) -> Tensor:
    return Tensor(rng.uniform(low, high, size=shape), requires_grad=True)


def _const(rng, shape, low=-1.0, high=1.0) -> Tensor:
    return Tensor(rng.uniform(low, high, size=shape))


def _projected(op, rng):
    """ f(x) = sum(op(x) * r) for a fixed random r """
    state = {}

    def f(x):
        y = op(x)
        if "r" not in state:
            state["r"] = _const(rng, y.shape)
        return F.sum_(y * state["r"])

    return f


# ---------------------------------------------------------------- tensor ops

@case("add")
def _add(rng):
    b = _const(rng, (3, 4))
    return _projected(lambda x: x + b, rng), _leaf(rng, (3, 4))


@case("sub")
def _sub(rng):
    b = _const(rng, (3, 4))
    return _projected(lambda x: b - x, rng), _leaf(rng, (3, 4))


@case("mul")
def _mul(rng):
    b = _const(rng, (3, 4))
    return _projected(lambda x: x * b, rng), _leaf(rng, (3, 4))


@case("div")
def _div(rng):
    b = _const(rng, (3, 4), 0.5, 1.5)
    return _projected(lambda x: b / x, rng), _leaf(rng, (3, 4), 0.5, 1.5)


@case("scalar_mul")
def _scalarMul(rng):
    return _projected(lambda x: F.scalar_mul(x, -1.7), rng), _leaf(rng, (5,))


@case("leaky_relu")
def _leakyRelu(rng):
    x = _leaf(rng, (4, 5))
    x.data[np.abs(x.data) < 1e-2] += 0.05
    return _projected(F.leaky_relu, rng), x


@case("tanh")
def _tanh(rng):
    return _projected(F.tanh, rng), _leaf(rng, (4, 5), -2, 2)


@case("softplus")
def _softplus(rng):
    return _projected(F.softplus, rng), _leaf(rng, (4, 5), -5, 5)


@case("reshape")
def _reshape(rng):
    return _projected(lambda x: F.reshape(x, (6, -1)), rng), _leaf(rng, (2, 3, 4))


@case("concat")
def _concat(rng):
    b = _const(rng, (2, 2, 3))
    return _projected(lambda x: F.concat([b, x], axis=1), rng), _leaf(rng, (2, 3, 3))


@case("expand")
def _expand(rng):
    return _projected(lambda x: F.expand(x, (3, 4, 5)), rng), _leaf(rng, (3, 1, 5))


@case("slice")
def _slice(rng):
    return _projected(lambda x: x[1:, ::2], rng), _leaf(rng, (4, 6))


@case("matmul")
def _matmul(rng):
    b = _const(rng, (3, 2))
    return _projected(lambda x: F.matmul(x, b), rng), _leaf(rng, (4, 3))


@case("sum")
def _sum(rng):
    return _projected(lambda x: F.sum_(x, axis=(0, 2)), rng), _leaf(rng, (2, 4, 3))


@case("mean")
def _mean(rng):
    return _projected(lambda x: F.mean(x, axis=1, keepdims=True), rng), _leaf(rng, (2, 4, 3))


@case("std")
def _std(rng):
    return _projected(lambda x: F.std(x, axis=(1, 2)), rng), _leaf(rng, (2, 3, 3, 3))


@case("conv2d.input")
def _conv2dInput(rng):
    w, b = _const(rng, (3, 3, 2, 3)), _const(rng, (3,))
    return _projected(lambda x: F.conv2d(x, w, b, stride=2, pad=1), rng), _leaf(rng, (2, 5, 5, 2))


@case("conv2d.weight")
def _conv2dWeight(rng):
    x, b = _const(rng, (2, 5, 5, 2)), _const(rng, (3,))
    return _projected(lambda w: F.conv2d(x, w, b, pad=1), rng), _leaf(rng, (3, 3, 2, 3))


@case("conv2d.bias")
def _conv2dBias(rng):
    x, w = _const(rng, (2, 4, 4, 2)), _const(rng, (3, 3, 2, 3))
    return _projected(lambda b: F.conv2d(x, w, b, pad=1), rng), _leaf(rng, (3,))


@case("conv3d.input")
def _conv3dInput(rng):
    w, b = _const(rng, (3, 3, 3, 2, 2)), _const(rng, (2,))
    return _projected(lambda x: F.conv3d(x, w, b, pad=1), rng), _leaf(rng, (1, 4, 4, 4, 2))


@case("conv3d.weight")
def _conv3dWeight(rng):
    x, b = _const(rng, (1, 4, 4, 4, 2)), _const(rng, (2,))
    return _projected(lambda w: F.conv3d(x, w, b, pad=1), rng), _leaf(rng, (3, 3, 3, 2, 2))


@case("upsample_nearest")
def _upsample(rng):
    return _projected(lambda x: F.upsample_nearest(x, 2, (1, 2, 3)), rng), _leaf(rng, (1, 2, 2, 2, 3))


# ---------------------------------------------------------------- geometry

@case("trilinear_resample")
def _resample(rng):
    grid = rng.uniform(0.0, 3.0, size=(4, 4, 4, 3))
    return _projected(lambda v: trilinear_resample(v, grid), rng), _leaf(rng, (2, 4, 4, 4, 2))


@case("rigid_transform")
def _rigid(rng):
    grid = build_grid((4, 4, 4), Pose(float(rng.uniform(-90, 90)), float(rng.uniform(-30, 30)), 1.1))
    return _projected(lambda v: trilinear_resample(v, grid), rng), _leaf(rng, (1, 4, 4, 4, 3))


# ---------------------------------------------------------------- layers

@case("instance_stats")
def _stats(rng):
    def op(x):
        mu, sigma = instance_stats(x)
        return F.concat([mu, sigma], axis=1)

    return _projected(op, rng), _leaf(rng, (2, 3, 3, 2))


@case("instance_norm")
def _instanceNorm(rng):
    return _projected(instance_norm, rng), _leaf(rng, (2, 3, 3, 2))


@case("adain")
def _adain(rng):
    gamma, beta = _const(rng, (2, 2), 0.5, 1.5), _const(rng, (2, 2))
    return _projected(lambda x: adain(x, StyleParams(gamma, beta)), rng), _leaf(rng, (2, 3, 3, 2))


@case("map_style")
def _mapStyle(rng):
    net = MappingNetwork(ParameterStore("m"), 4, rng, hidden=6)
    net.add_site("s", 3)

    def op(z):
        style = map_style(z, net, "s")
        return F.concat([style.gamma, style.beta], axis=1)

    return _projected(op, rng), _leaf(rng, (2, 4))


@case("dense")
def _dense(rng):
    w, b = _const(rng, (4, 3)), _const(rng, (3,))
    return _projected(lambda x: dense(x, w, b), rng), _leaf(rng, (2, 4))


@case("spectral_normalize")
def _spectral(rng):
    w = _leaf(rng, (3, 3, 2, 4))
    state = SpectralNorm(w.shape, rng)
    state.power_iteration(w.data, 5)
    return _projected(lambda x: spectral_normalize(x, state, update=False), rng), w


# ---------------------------------------------------------------- losses

@case("gan_loss_d")
def _ganD(rng):
    real = _const(rng, (4,), -3, 3)
    return (lambda x: gan_loss_d(real, x)), _leaf(rng, (4,), -3, 3)


@case("gan_loss_g")
def _ganG(rng):
    return gan_loss_g, _leaf(rng, (4,), -3, 3)


@case("identity_loss")
def _identity(rng):
    z = _const(rng, (3, 5))
    return (lambda x: identity_loss(z, x)), _leaf(rng, (3, 5))


@case("style_loss_g")
def _styleG(rng):
    others = [_const(rng, (3,), -2, 2) for _ in range(2)]
    return (lambda x: style_loss_g([x] + others)), _leaf(rng, (3,), -2, 2)


# ---------------------------------------------------------------- networks

def _tinyModels(rng):
    gen = Generator(GeneratorConfig(resolution=32, latent_dim=4, channel_divisor=64), rng)
    disc = Discriminator(32, 4, rng, channel_divisor=64)
    for sn, conv in zip(disc.norms, disc.convs):
        sn.power_iteration(conv.weight.data, 3)
    return gen, disc


def _generatorLoss(gen, disc, z, pose):
    out = disc(gen(z, z, pose), update=False)
    style = style_loss_g(out.style_logits)
    return total_loss_g(gan_loss_g(out.logit), identity_loss(z, out.z_hat), style, LossWeights())


@case("discriminator.logit", max_elements=12)
def _discriminator(rng):
    _, disc = _tinyModels(rng)
    return (lambda x: F.sum_(disc(x, update=False).logit)), _leaf(rng, (2, 32, 32, 3))


@case("generator+losses.z", max_elements=8)
def _endToEndLatent(rng):
    gen, disc = _tinyModels(rng)
    pose = Pose(float(rng.uniform(-40, 40)), float(rng.uniform(-15, 15)), 1.05)
    return (lambda z: _generatorLoss(gen, disc, z, pose)), _leaf(rng, (2, 4))


@case("generator+losses.constant", max_elements=8)
def _endToEndConstant(rng):
    gen, disc = _tinyModels(rng)
    z = _const(rng, (2, 4))
    pose = Pose(float(rng.uniform(-40, 40)), float(rng.uniform(-15, 15)), 0.95)
    return (lambda c: _generatorLoss(gen, disc, z, pose)), gen.constant


# ---------------------------------------------------------------- runner

def run_case(c: GradCase, instances: int, rng: np.random.Generator) -> GradResult:
    worst = 0.0
    try:
        for _ in range(instances):
            f, x = c.build(rng)
            worst = max(worst, grad_check(f, x, STEP, c.max_elements, rng))
    except HoloError as e:
        return GradResult(c.name, worst, instances, str(e))

    return GradResult(c.name, worst, instances)


def run_suite(cases: Sequence[GradCase] = None, instances: int = 3, seed: int = 0) -> List[GradResult]:
    """ check every case on `instances` random instances in 64-bit """
    cases = CASES if cases is None else cases
    rng = np.random.default_rng(seed)
    results = []
    with precision(np.float64):
        for c in cases:
            result = run_case(c, instances, rng)
            if result.passed:
                logger.info("%-28s ok    %.2e", c.name, result.error)
            else:
                logger.error("%-28s FAIL  %.2e %s", c.name, result.error, result.message)
            results.append(result)

    return results
