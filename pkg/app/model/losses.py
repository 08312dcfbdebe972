# coding:utf-8
"""
GAN, identity and style objectives.

Logistic terms use -log(sigmoid(x)) = softplus(-x) and
-log(1 - sigmoid(x)) = softplus(x), which stay finite for any logit.
"""
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

from core.common.exception_handler import ContractError, ShapeError
from core.tensor import functional as F
from core.tensor.tensor import Tensor


@dataclass(frozen=True)
class LossWeights:
    lambda_identity: float = 1.0
    lambda_style: float = 1.0

    def __post_init__(self):
        if self.lambda_identity < 0 or self.lambda_style < 0:
            raise ContractError(f"loss weights must be >= 0, got {self}")


def gan_loss_d(logit_real: Tensor, logit_fake: Tensor) -> Tensor:
    """ -mean(log D(x)) - mean(log(1 - D(G(z)))) """
    return F.mean(F.softplus(-logit_real)) + F.mean(F.softplus(logit_fake))


def gan_loss_g(logit_fake: Tensor) -> Tensor:
    """ non-saturating generator loss -mean(log D(G(z))) """
    return F.mean(F.softplus(-logit_fake))


def identity_loss(z: Tensor, z_hat: Tensor) -> Tensor:
    """ batch mean of ||z - z_hat||^2 """
    if z.shape != z_hat.shape:
        raise ShapeError(f"identity_loss: latent {z.shape} and reconstruction {z_hat.shape} differ")

    diff = z - z_hat
    return F.mean(F.sum_(diff * diff, axis=-1))


def sum_terms(terms: Sequence[Tensor]) -> Tensor:
    total = terms[0]
    for t in terms[1:]:
        total = total + t
    return total


def style_losses_g(style_logits_fake: Sequence[Tensor]) -> List[Tensor]:
    """ the generator GAN loss on each style logit, one term per level """
    if not style_logits_fake:
        raise ContractError("style_loss_g: no style levels")

    return [gan_loss_g(l) for l in style_logits_fake]


def style_loss_g(style_logits_fake: Sequence[Tensor]) -> Tensor:
    """ sum over levels of the generator GAN loss on each style logit """
    return sum_terms(style_losses_g(style_logits_fake))


def style_loss_d(style_logits_real: Sequence[Tensor], style_logits_fake: Sequence[Tensor]) -> Tensor:
    if len(style_logits_real) != len(style_logits_fake) or not style_logits_real:
        raise ContractError("style_loss_d: real and fake level counts differ or are zero")

    return sum_terms([gan_loss_d(r, f) for r, f in zip(style_logits_real, style_logits_fake)])


def total_loss_g(gan: Tensor, identity: Tensor, style: Tensor, weights: LossWeights) -> Tensor:
    """ gan + lambda_identity * identity + lambda_style * style """
    return gan + F.scalar_mul(identity, weights.lambda_identity) + F.scalar_mul(style, weights.lambda_style)


@dataclass
class LossReport:
    """ Scalar losses of one training step

    `g_total` and `d_total` are recomputed in float64 from the components, so
    the weighted-sum identity holds for the logged values themselves.
    """

    g_gan: float
    g_identity: float
    g_style_levels: Tuple[float, ...]
    d_gan: float
    d_style: float
    d_identity: float
    weights: LossWeights = field(default_factory=LossWeights)
    identity_updates_discriminator: bool = True

    @property
    def g_style(self) -> float:
        return float(sum(self.g_style_levels))

    @property
    def g_total(self) -> float:
        w = self.weights
        return self.g_gan + w.lambda_identity * self.g_identity + w.lambda_style * self.g_style

    @property
    def d_total(self) -> float:
        w = self.weights
        total = self.d_gan + w.lambda_style * self.d_style
        if self.identity_updates_discriminator:
            total += w.lambda_identity * self.d_identity
        return total

    @staticmethod
    def columns(levels: int) -> List[str]:
        return (["g_total", "g_gan", "g_identity", "g_style", "d_total", "d_gan", "d_style", "d_identity"]
                + [f"g_style_{i}" for i in range(levels)])

    def row(self) -> Dict[str, float]:
        values = OrderedDict([
            ("g_total", self.g_total), ("g_gan", self.g_gan), ("g_identity", self.g_identity),
            ("g_style", self.g_style), ("d_total", self.d_total), ("d_gan", self.d_gan),
            ("d_style", self.d_style), ("d_identity", self.d_identity),
        ])
        for i, v in enumerate(self.g_style_levels):
            values[f"g_style_{i}"] = v
        return values
