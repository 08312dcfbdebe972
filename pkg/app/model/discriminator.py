# coding:utf-8
import logging
from dataclasses import dataclass, field
from typing import List

import numpy as np
from scipy.linalg import svdvals

from core.common.exception_handler import ShapeError
from core.nn.layers import (Conv, Dense, ParameterStore, SpectralNorm, instance_norm, instance_stats,
                            spectral_normalize)
from core.tensor import functional as F
from core.tensor.tensor import Tensor, no_grad


logger = logging.getLogger(__name__)

TRUNK_WIDTHS = (64, 128, 256, 512)
KERNEL = 5
STYLE_LEVELS = (1, 2, 3)


@dataclass
class DiscriminatorOutput:
    logit: Tensor                   # [N]
    style_logits: List[Tensor]      # one [N] tensor per style level
    z_hat: Tensor                   # [N, d]
    features: List[Tensor] = field(default_factory=list)  # trunk activations after instance norm


class Discriminator:
    """ Spectrally normalized stride-2 trunk with style heads and an encoder head

    Layer 0 has no instance norm. At every later layer the pre-norm
    per-channel mean and std feed a small classifier (the style head), then
    the trunk normalizes and continues. The real/fake head and the latent
    encoder share the flattened trunk output.
    """

    def __init__(self, resolution: int, latent_dim: int, rng: np.random.Generator, channel_divisor: int = 1):
        self.resolution = resolution
        self.latent_dim = latent_dim
        self.params = ParameterStore("d")
        widths = [max(1, c // channel_divisor) for c in TRUNK_WIDTHS]

        self.convs, self.norms = [], []
        cin = 3
        for i, cout in enumerate(widths):
            conv = Conv(self.params, f"conv{i}", KERNEL, cin, cout, rng, stride=2, bias=False)
            self.convs.append(conv)
            self.norms.append(SpectralNorm(conv.weight.shape, rng))
            cin = cout

        self.styleHeads = {}
        for level in STYLE_LEVELS:
            c = widths[level]
            self.styleHeads[level] = (Dense(self.params, f"style{level}/0", 2 * c, c, rng),
                                      Dense(self.params, f"style{level}/1", c, 1, rng))

        side = resolution // 2 ** len(widths)
        flat = side * side * widths[-1]
        self.head = Dense(self.params, "logit", flat, 1, rng)
        self.encoder = Dense(self.params, "encode", flat, latent_dim, rng)

    def discriminate(self, x: Tensor, update: bool = True) -> DiscriminatorOutput:
        """ logit, style logits and latent reconstruction of `[N, R, R, 3]` images

        `update` advances each spectral-norm power iteration once before use.
        """
        if x.shape[1:] != (self.resolution, self.resolution, 3):
            raise ShapeError(f"discriminator expects [N, {self.resolution}, {self.resolution}, 3], got {x.shape}")

        n = x.shape[0]
        h = x
        styleLogits, features = [], []
        for i, (conv, sn) in enumerate(zip(self.convs, self.norms)):
            h = conv(h, spectral_normalize(conv.weight, sn, update))
            if i in self.styleHeads:
                mu, sigma = instance_stats(h)
                first, second = self.styleHeads[i]
                s = second(F.leaky_relu(first(F.concat([mu, sigma], axis=1))))
                styleLogits.append(F.reshape(s, (n,)))
                h = instance_norm(h)
                features.append(h)

            h = F.leaky_relu(h)

        flat = F.reshape(h, (n, -1))
        logit = F.reshape(self.head(flat), (n,))
        zHat = F.tanh(self.encoder(flat))
        return DiscriminatorOutput(logit, styleLogits, zHat, features)

    __call__ = discriminate

    def encode(self, x: Tensor) -> Tensor:
        """ latent reconstruction only, spectral-norm state untouched """
        return self.discriminate(x, update=False).z_hat

    def spectral_norms(self) -> List[float]:
        """ exact largest singular value of every normalized trunk weight """
        norms = []
        with no_grad():
            for conv, sn in zip(self.convs, self.norms):
                w = sn.normalize(conv.weight).numpy()
                norms.append(float(svdvals(SpectralNorm.matrix(w))[0]))

        logger.debug("spectral norms: %s", ", ".join(f"{s:.4f}" for s in norms))
        return norms

    def spectral_state(self):
        return {f"d/conv{i}/sn": sn.state() for i, sn in enumerate(self.norms)}

    def load_spectral_state(self, state):
        for i, sn in enumerate(self.norms):
            sn.load(state[f"d/conv{i}/sn"])
