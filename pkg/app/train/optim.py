# coding:utf-8
import logging
from typing import Dict, Tuple

import numpy as np

from core.common.exception_handler import ContractError, ShapeError
from core.nn.layers import ParameterStore


logger = logging.getLogger(__name__)


def adam_step(param: np.ndarray, grad: np.ndarray, m: np.ndarray, v: np.ndarray, lr: float,
              beta1: float, beta2: float, eps: float, t: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """ one bias-corrected Adam update, returns new (param, m, v) """
    if t < 1:
        raise ContractError(f"adam_step: t must be >= 1, got {t}")
    if not (param.shape == grad.shape == m.shape == v.shape):
        raise ShapeError(f"adam_step: shapes {param.shape}, {grad.shape}, {m.shape}, {v.shape} differ")

    m = beta1 * m + (1.0 - beta1) * grad
    v = beta2 * v + (1.0 - beta2) * grad * grad
    mHat = m / (1.0 - beta1 ** t)
    vHat = v / (1.0 - beta2 ** t)
    return param - lr * mHat / (np.sqrt(vHat) + eps), m, v


class Adam:
    """ Adam over every tensor of a parameter store

    A step whose gradients contain NaN or infinity is skipped entirely and
    the step counter does not advance.
    """

    def __init__(self, params: ParameterStore, lr=2e-4, beta1=0.5, beta2=0.999, eps=1e-8):
        self.params = params
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.t = 0
        self.m = {k: np.zeros_like(p.data) for k, p in params.items()}
        self.v = {k: np.zeros_like(p.data) for k, p in params.items()}
        self.skipped = 0

    def step(self) -> bool:
        """ apply the accumulated gradients, returns False when the step was skipped """
        grads = {}
        for name, p in self.params.items():
            g = np.zeros_like(p.data) if p.grad is None else p.grad
            if not np.isfinite(g).all():
                self.skipped += 1
                logger.warning("non-finite gradient in `%s`, skipping step %d", name, self.t + 1)
                return False

            grads[name] = g

        self.t += 1
        for name, p in self.params.items():
            p.data, self.m[name], self.v[name] = adam_step(
                p.data, grads[name], self.m[name], self.v[name], self.lr, self.beta1, self.beta2, self.eps, self.t)

        return True

    def state_dict(self, prefix: str) -> Dict[str, np.ndarray]:
        state = {f"{prefix}/t": np.array([self.t], dtype=np.int64)}
        for name in self.m:
            state[f"{prefix}/m/{name}"] = self.m[name]
            state[f"{prefix}/v/{name}"] = self.v[name]
        return state

    def load_state_dict(self, state: Dict[str, np.ndarray], prefix: str):
        self.t = int(state[f"{prefix}/t"][0])
        for name in self.m:
            for moments, kind in ((self.m, "m"), (self.v, "v")):
                value = state[f"{prefix}/{kind}/{name}"]
                if value.shape != moments[name].shape:
                    raise ShapeError(f"optimizer state `{prefix}/{kind}/{name}` has shape {value.shape}")
                moments[name] = value.astype(moments[name].dtype, copy=True)
