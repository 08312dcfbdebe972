# coding:utf-8
import logging
from typing import Callable, Optional

import numpy as np

from ..common.exception_handler import ContractError, NonFiniteError
from .tensor import Tensor, no_grad


logger = logging.getLogger(__name__)


def numerical_gradient(f: Callable[[Tensor], Tensor], x: Tensor, h: float = 1e-5, indices=None) -> np.ndarray:
    """ central differences of scalar `f` w.r.t. the elements of `x`

    Only the flat `indices` are perturbed (all elements when `None`); other
    entries of the returned array are zero.
    """
    grad = np.zeros(x.size, dtype=np.float64)
    if not (x.data.flags.c_contiguous and x.data.flags.writeable):
        x.data = np.array(x.data)
    flat = x.data.reshape(-1)
    indices = range(x.size) if indices is None else indices
    with no_grad():
        for i in indices:
            orig = flat[i]
            flat[i] = orig + h
            f_plus = f(x).item()
            flat[i] = orig - h
            f_minus = f(x).item()
            flat[i] = orig

            if not (np.isfinite(f_plus) and np.isfinite(f_minus)):
                raise NonFiniteError("grad_check", np.unravel_index(i, x.shape))

            grad[i] = (f_plus - f_minus) / (2.0 * h)

    return grad.reshape(x.shape)


def grad_check(f: Callable[[Tensor], Tensor], x: Tensor, h: float = 1e-5,
               max_elements: Optional[int] = None, rng: np.random.Generator = None) -> float:
    """ compare the tape gradient of `f` at `x` with central differences

    Parameters
    ----------
    f: callable
        scalar-valued function of one tensor, evaluated in 64-bit

    x: Tensor
        point of evaluation, must be a float64 leaf with `requires_grad`

    h: float
        finite-difference step

    max_elements: int
        check only this many randomly chosen elements of `x`

    rng: np.random.Generator
        generator used to choose the elements

    Returns
    -------
    error: float
        max over checked elements of |a - n| / max(1, |a| + |n|)
    """
    if x.dtype != np.float64:
        raise ContractError(f"grad_check needs a float64 input, got {x.dtype}")
    if not x.requires_grad or not x.is_leaf:
        raise ContractError("grad_check needs a leaf tensor with requires_grad=True")

    x.zero_grad()
    out = f(x)
    if out.size != 1:
        raise ContractError(f"grad_check needs a scalar function, got shape {out.shape}")
    if not np.isfinite(out.data).all():
        raise NonFiniteError("grad_check", ())

    out.backward()
    analytic = np.zeros(x.shape) if x.grad is None else x.grad.astype(np.float64)
    x.zero_grad()

    indices = None
    if max_elements is not None and max_elements < x.size:
        rng = rng or np.random.default_rng(0)
        indices = np.sort(rng.choice(x.size, size=max_elements, replace=False))

    numeric = numerical_gradient(f, x, h, indices)
    if indices is not None:
        analytic = analytic.reshape(-1)[indices]
        numeric = numeric.reshape(-1)[indices]

    if not np.isfinite(analytic).all():
        bad = int(np.flatnonzero(~np.isfinite(analytic.reshape(-1)))[0])
        raise NonFiniteError("grad_check", bad, "non-finite analytic gradient")

    err = np.abs(analytic - numeric) / np.maximum(1.0, np.abs(analytic) + np.abs(numeric))
    worst = float(err.max()) if err.size else 0.0
    logger.debug("grad_check: %d elements, max relative error %.3e", err.size, worst)
    return worst
