# coding:utf-8
"""
The 3D-aware generator.

    constant 4^3 -> styled 3D blocks (z1) -> rigid transform (pose)
    -> perspective morph -> projection unit -> styled 2D blocks (z2)
    -> RGB -> tanh
"""
import logging
import math
from dataclasses import dataclass
from typing import List, Sequence, Tuple, Union

import numpy as np

from core.common.exception_handler import ContractError, NonFiniteError, ShapeError
from core.nn.geometry import Pose, rigid_transform
from core.nn.layers import (Conv, Dense, MappingNetwork, ParameterStore, adain, instance_norm, map_style)
from core.tensor import functional as F
from core.tensor.tensor import Tensor, no_grad


logger = logging.getLogger(__name__)

BASE = 4
VOLUME = 16
WIDTHS_3D = (512, 256, 64)
PROJECTED = 512
WIDTHS_2D = (256, 64, 32)
RESOLUTIONS = (32, 64, 128)

Latent = Union[Tensor, Sequence[Tensor]]
PoseArg = Union[Pose, Sequence[Pose]]


@dataclass(frozen=True)
class GeneratorConfig:
    resolution: int = 64
    latent_dim: int = 128
    channel_divisor: int = 1
    no_rotation: bool = False
    traditional_z: bool = False

    def __post_init__(self):
        if self.resolution not in RESOLUTIONS:
            raise ContractError(f"resolution must be one of {RESOLUTIONS}, got {self.resolution}")
        if self.latent_dim < 1 or self.channel_divisor < 1:
            raise ContractError("latent_dim and channel_divisor must be >= 1")

    @classmethod
    def fromTrainConfig(cls, cfg) -> "GeneratorConfig":
        return cls(cfg.resolution, cfg.latentDim, cfg.channelDivisor, cfg.noRotation, cfg.traditionalZ)

    def width(self, channels: int) -> int:
        return max(1, channels // self.channel_divisor)

    @property
    def widths3d(self) -> Tuple[int, ...]:
        return tuple(self.width(c) for c in WIDTHS_3D)

    @property
    def projected(self) -> int:
        return self.width(PROJECTED)

    @property
    def widths2d(self) -> Tuple[int, ...]:
        blocks = int(math.log2(self.resolution // VOLUME))
        return tuple(self.width(c) for c in WIDTHS_2D[:blocks])


def _checkFinite(name: str, t: Tensor) -> Tensor:
    if not np.isfinite(t.data).all():
        bad = np.argwhere(~np.isfinite(t.data))[0]
        raise NonFiniteError(name, tuple(int(i) for i in bad))

    return t


class Generator:
    """ Generator parameters and forward pass

    Parameters
    ----------
    config: GeneratorConfig
        architecture options

    rng: np.random.Generator
        initializes the parameters
    """

    def __init__(self, config: GeneratorConfig, rng: np.random.Generator):
        self.config = config
        self.params = ParameterStore("g")
        self.mapping = MappingNetwork(self.params, config.latent_dim, rng)
        c0, c1, c2 = config.widths3d

        if config.traditional_z:
            self.inputLayer = Dense(self.params, "input", config.latent_dim, BASE ** 3 * c0, rng)
            self.constant = None
        else:
            self.inputLayer = None
            self.constant = self.params.normal("constant", (1, BASE, BASE, BASE, c0), rng)

        self.blocks3d = []
        for i, (cin, cout) in enumerate([(c0, c1), (c1, c2)]):
            self.blocks3d.append(Conv(self.params, f"block3d_{i}", 3, cin, cout, rng, rank=3, bias=False))
            if not config.traditional_z:
                self.mapping.add_site(f"style3d_{i}", cout)

        self.morph = [Conv(self.params, f"morph_{i}", 3, c2, c2, rng, rank=3) for i in range(2)]
        self.projection = Conv(self.params, "project", 1, VOLUME * c2, config.projected, rng, rank=2)

        self.blocks2d = []
        cin = config.projected
        for i, cout in enumerate(config.widths2d):
            self.blocks2d.append(Conv(self.params, f"block2d_{i}", 3, cin, cout, rng, bias=False))
            if not config.traditional_z:
                self.mapping.add_site(f"style2d_{i}", cout)
            cin = cout

        self.toRgb = Conv(self.params, "to_rgb", 3, cin, 3, rng)

    # ------------------------------------------------------------ latents

    def _codes(self, z: Latent, count: int, name: str) -> List[Tensor]:
        codes = [z] * count if isinstance(z, Tensor) else list(z)
        if len(codes) != count:
            raise ShapeError(f"{name}: expected one code or {count} per-block codes, got {len(codes)}")
        for c in codes:
            if c.ndim != 2 or c.shape[1] != self.config.latent_dim:
                raise ShapeError(f"{name}: latent codes must be [N, {self.config.latent_dim}], got {c.shape}")

        return codes

    def _styled(self, x: Tensor, z: Tensor, site: str) -> Tensor:
        if self.config.traditional_z:
            return instance_norm(x)

        return adain(x, map_style(z, self.mapping, site))

    # ------------------------------------------------------------ stages

    def volume(self, z1: Latent, pose: PoseArg, training=False) -> Tensor:
        """ 3D features after the rigid-body transform, `[N, 16, 16, 16, C]` """
        codes = self._codes(z1, len(self.blocks3d), "z1")
        n = codes[0].shape[0]

        if self.config.traditional_z:
            x = F.reshape(self.inputLayer(codes[0]), (n, BASE, BASE, BASE, -1))
        else:
            x = F.expand(self.constant, (n,) + self.constant.shape[1:])

        for i, (conv, z) in enumerate(zip(self.blocks3d, codes)):
            x = F.upsample_nearest(x, 2, (1, 2, 3))
            x = F.leaky_relu(self._styled(conv(x), z, f"style3d_{i}"))
            _checkFinite(f"block3d_{i}", x)

        if self.config.no_rotation and training:
            return x

        return _checkFinite("rigid_transform", rigid_transform(x, pose))

    def project(self, volume: Tensor) -> Tensor:
        """ fold depth into channels, then a per-pixel linear map and leakyReLU """
        if volume.ndim != 5:
            raise ShapeError(f"project: expected [N, H, W, D, C], got {volume.shape}")

        n, h, w, d, c = volume.shape
        return F.leaky_relu(self.projection(F.reshape(volume, (n, h, w, d * c))))

    def render(self, volume: Tensor, z2: Latent) -> Tensor:
        """ perspective morph, projection and 2D blocks of a transformed volume """
        codes = self._codes(z2, len(self.blocks2d), "z2")
        x = volume
        for i, conv in enumerate(self.morph):
            x = _checkFinite(f"morph_{i}", F.leaky_relu(conv(x)))

        x = _checkFinite("project", self.project(x))
        for i, (conv, z) in enumerate(zip(self.blocks2d, codes)):
            x = F.upsample_nearest(x, 2, (1, 2))
            x = F.leaky_relu(self._styled(conv(x), z, f"style2d_{i}"))
            _checkFinite(f"block2d_{i}", x)

        return _checkFinite("to_rgb", F.tanh(self.toRgb(x)))

    # ------------------------------------------------------------ public

    def generate(self, z1: Latent, z2: Latent, pose: PoseArg, training=False) -> Tensor:
        """ images `[N, R, R, 3]` in [-1, 1]

        `z1` drives the 3D blocks and `z2` the 2D blocks; either may be a list
        with one code per block. `pose` is one pose or one per instance. With
        `traditional_z` the input tensor is mapped from `z1` and `z2` is unused.
        """
        return self.render(self.volume(z1, pose, training), z2)

    __call__ = generate

    def generate_traditional(self, z: Tensor, pose: PoseArg, training=False) -> Tensor:
        if not self.config.traditional_z:
            raise ContractError("generate_traditional needs a generator built with traditional_z")

        return self.generate(z, z, pose, training)

    def render_sweep(self, z1: Latent, z2: Latent, poses: Sequence[Pose]) -> List[np.ndarray]:
        """ one image batch per pose with fixed latents, evaluation mode """
        if not poses:
            raise ContractError("render_sweep: empty pose list")

        with no_grad():
            return [self.generate(z1, z2, p).numpy() for p in poses]
