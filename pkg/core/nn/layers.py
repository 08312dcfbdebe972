# coding:utf-8
"""
Parameter storage, dense/conv helpers and the normalization layers:
instance statistics, AdaIN, instance norm and spectral normalization.

AdaIN naming: `gamma` is the per-channel multiplier and `beta` the offset,
out = gamma * (x - mu) / sigma + beta.
"""
import logging
from collections import OrderedDict
from dataclasses import dataclass
from typing import Dict, Iterator, List, Sequence, Tuple

import numpy as np
from scipy import linalg

from ..common.exception_handler import ContractError, ShapeError
from ..tensor import functional as F
from ..tensor.tensor import Tensor, get_default_dtype


logger = logging.getLogger(__name__)

INIT_STD = 0.02
MAPPING_HIDDEN = 128
SIGMA_FLOOR = 1e-12


class ParameterStore:
    """ Ordered `name -> Tensor` collection of learnable parameters """

    def __init__(self, prefix: str = ""):
        self.prefix = prefix
        self._params = OrderedDict()  # type: Dict[str, Tensor]

    def _key(self, name):
        return f"{self.prefix}/{name}" if self.prefix else name

    def add(self, name: str, value: np.ndarray) -> Tensor:
        key = self._key(name)
        if key in self._params:
            raise ContractError(f"parameter `{key}` declared twice")

        param = Tensor(np.array(value, dtype=get_default_dtype()), requires_grad=True, name=key)
        self._params[key] = param
        return param

    def normal(self, name: str, shape: Sequence[int], rng: np.random.Generator, std=INIT_STD) -> Tensor:
        return self.add(name, rng.normal(0.0, std, size=tuple(shape)))

    def zeros(self, name: str, shape: Sequence[int]) -> Tensor:
        return self.add(name, np.zeros(tuple(shape)))

    def __getitem__(self, name: str) -> Tensor:
        key = self._key(name)
        if key not in self._params:
            raise ContractError(f"unknown parameter `{key}`")

        return self._params[key]

    def __contains__(self, name: str):
        return self._key(name) in self._params

    def __iter__(self) -> Iterator[Tensor]:
        return iter(self._params.values())

    def __len__(self):
        return len(self._params)

    def items(self):
        return self._params.items()

    def names(self) -> List[str]:
        return list(self._params)

    def zero_grad(self):
        for p in self._params.values():
            p.zero_grad()

    def state_dict(self) -> Dict[str, np.ndarray]:
        return OrderedDict((k, p.data.copy()) for k, p in self._params.items())

    def load_state_dict(self, state: Dict[str, np.ndarray]):
        """ replace values in place; every stored name must be present with its shape """
        for key, param in self._params.items():
            if key not in state:
                raise ContractError(f"missing parameter `{key}`")

            value = np.asarray(state[key])
            if value.shape != param.shape:
                raise ShapeError(f"parameter `{key}`: stored shape {value.shape} != {param.shape}")

            param.data = value.astype(param.dtype, copy=True)
            param.zero_grad()


class Dense:
    """ `x @ W + b` over `[N, in]` """

    def __init__(self, store: ParameterStore, name: str, fan_in: int, fan_out: int,
                 rng: np.random.Generator, bias=None):
        self.weight = store.normal(f"{name}/w", (fan_in, fan_out), rng)
        self.bias = store.add(f"{name}/b", np.zeros(fan_out) if bias is None else bias)

    def __call__(self, x: Tensor) -> Tensor:
        return dense(x, self.weight, self.bias)


class Conv:
    """ channels-last convolution with a `[*k, Cin, Cout]` kernel """

    def __init__(self, store: ParameterStore, name: str, kernel: int, cin: int, cout: int,
                 rng: np.random.Generator, rank: int = 2, stride=1, bias=True):
        self.rank, self.stride, self.pad = rank, stride, kernel // 2
        self.weight = store.normal(f"{name}/w", (kernel,) * rank + (cin, cout), rng)
        self.bias = store.zeros(f"{name}/b", (cout,)) if bias else None

    def __call__(self, x: Tensor, weight: Tensor = None) -> Tensor:
        weight = self.weight if weight is None else weight
        bias = self.bias if self.bias is not None else Tensor(np.zeros(weight.shape[-1], dtype=x.dtype))
        conv = F.conv3d if self.rank == 3 else F.conv2d
        return conv(x, weight, bias, stride=self.stride, pad=self.pad)


def dense(x: Tensor, weight: Tensor, bias: Tensor) -> Tensor:
    if x.ndim != 2:
        raise ShapeError(f"dense: expected [N, features], got {x.shape}")

    out = F.matmul(x, weight)
    return out + F.expand(F.reshape(bias, (1, -1)), out.shape)


def per_channel(t: Tensor, like: Tensor) -> Tensor:
    """ broadcast `[N, C]` over the spatial axes of `like` """
    shape = (t.shape[0],) + (1,) * (like.ndim - 2) + (t.shape[1],)
    return F.expand(F.reshape(t, shape), like.shape)


# -------------------------------------------------------------- normalization

def instance_stats(x: Tensor) -> Tuple[Tensor, Tensor]:
    """ per-instance per-channel mean and eps-stabilized std over the spatial axes """
    if x.ndim < 3:
        raise ShapeError(f"instance_stats: need [N, *spatial, C], got {x.shape}")
    if int(np.prod(x.shape[1:-1])) < 2:
        raise ShapeError(f"instance_stats: need at least 2 spatial elements, got {x.shape}")

    axes = tuple(range(1, x.ndim - 1))
    return F.mean(x, axes), F.std(x, axes)


def instance_norm(x: Tensor) -> Tensor:
    mu, sigma = instance_stats(x)
    return (x - per_channel(mu, x)) / per_channel(sigma, x)


@dataclass
class StyleParams:
    gamma: Tensor   # [N, C] multiplier
    beta: Tensor    # [N, C] offset

    @property
    def width(self):
        return self.gamma.shape[-1]


def adain(x: Tensor, style: StyleParams) -> Tensor:
    if style.gamma.shape != (x.shape[0], x.shape[-1]) or style.beta.shape != style.gamma.shape:
        raise ShapeError(f"adain: style widths {style.gamma.shape}/{style.beta.shape} "
                         f"do not match input {x.shape} (batch, channels)")

    return per_channel(style.gamma, x) * instance_norm(x) + per_channel(style.beta, x)


class MappingNetwork:
    """ One two-layer perceptron per AdaIN site mapping z to (gamma, beta)

    The output bias starts at 1 for gamma and 0 for beta, so an untrained
    network is close to the identity modulation.
    """

    def __init__(self, store: ParameterStore, latent_dim: int, rng: np.random.Generator,
                 hidden: int = MAPPING_HIDDEN):
        self.store = store
        self.latent_dim = latent_dim
        self.hidden = hidden
        self.rng = rng
        self.sites = OrderedDict()  # type: Dict[str, Tuple[Dense, Dense, int]]

    def add_site(self, site: str, channels: int):
        if site in self.sites:
            raise ContractError(f"style site `{site}` declared twice")

        first = Dense(self.store, f"{site}/map0", self.latent_dim, self.hidden, self.rng)
        second = Dense(self.store, f"{site}/map1", self.hidden, 2 * channels, self.rng,
                       bias=np.concatenate([np.ones(channels), np.zeros(channels)]))
        self.sites[site] = (first, second, channels)

    def __call__(self, z: Tensor, site: str) -> StyleParams:
        return map_style(z, self, site)


def map_style(z: Tensor, net: MappingNetwork, site: str) -> StyleParams:
    if site not in net.sites:
        raise ContractError(f"unknown style site `{site}`, known: {list(net.sites)}")
    if z.ndim != 2 or z.shape[1] != net.latent_dim:
        raise ShapeError(f"map_style: expected z of shape [N, {net.latent_dim}], got {z.shape}")

    first, second, c = net.sites[site]
    out = second(F.leaky_relu(first(z)))
    return StyleParams(out[:, :c], out[:, c:])


# ---------------------------------------------------------- spectral norm

def _unit(v: np.ndarray) -> np.ndarray:
    return v / (np.linalg.norm(v) + SIGMA_FLOOR)


class SpectralNorm:
    """ Persistent power-iteration state for one weight

    The weight `[*k, Cin, Cout]` is viewed as the matrix `(Cout, k*k*Cin)`.
    The first update starts the vectors from the top singular pair of the
    weight it sees, later updates run plain power iteration from there.
    A restored state keeps its stored vectors.
    """

    def __init__(self, weight_shape: Sequence[int], rng: np.random.Generator):
        rows = weight_shape[-1]
        cols = int(np.prod(weight_shape[:-1]))
        self.u = _unit(rng.normal(size=rows))
        self.v = _unit(rng.normal(size=cols))
        self.sigma = 1.0
        self.started = False

    @staticmethod
    def matrix(weight: np.ndarray) -> np.ndarray:
        return weight.reshape(-1, weight.shape[-1]).T.astype(np.float64)

    def _align(self, w: np.ndarray):
        left, _, right = linalg.svd(w, full_matrices=False)
        self.u, self.v = left[:, 0].copy(), right[0].copy()
        self.started = True

    def power_iteration(self, weight: np.ndarray, iterations: int = 1) -> float:
        w = self.matrix(weight)
        if not self.started:
            self._align(w)

        for _ in range(iterations):
            self.v = _unit(w.T @ self.u)
            self.u = _unit(w @ self.v)

        self.sigma = max(float(self.u @ w @ self.v), SIGMA_FLOOR)
        return self.sigma

    def normalize(self, weight: Tensor) -> Tensor:
        """ weight / sigma with u and v held constant """
        outer = np.outer(self.u, self.v).T.reshape(weight.shape).astype(weight.dtype)
        sigma = F.sum_(weight * Tensor(outer, dtype=weight.dtype))
        if sigma.item() < SIGMA_FLOOR:
            sigma = Tensor(SIGMA_FLOOR, dtype=weight.dtype)

        return weight / sigma

    def state(self) -> Dict[str, np.ndarray]:
        return {"u": self.u.copy(), "v": self.v.copy()}

    def load(self, state: Dict[str, np.ndarray]):
        if state["u"].shape != self.u.shape or state["v"].shape != self.v.shape:
            raise ShapeError("spectral norm state does not match its weight")

        self.u = np.array(state["u"], dtype=np.float64)
        self.v = np.array(state["v"], dtype=np.float64)
        self.started = True


def spectral_normalize(weight: Tensor, state: SpectralNorm, update: bool = True, iterations: int = 1) -> Tensor:
    """ divide `weight` by its power-iteration estimate of the largest singular value

    With `update`, the persistent vectors advance `iterations` steps first.
    """
    if weight.ndim < 2:
        raise ShapeError(f"spectral_normalize: weight needs at least 2 dims, got {weight.shape}")
    if update:
        state.power_iteration(weight.data, iterations)

    return state.normalize(weight)
