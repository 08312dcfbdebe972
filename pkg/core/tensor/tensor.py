# coding:utf-8
"""
Dense channels-last tensors with a reverse-mode differentiation tape.

Every differentiable operation is a `Function` subclass (see `functional`)
with a hand-written adjoint. Calling `Function.apply` on tensors records the
function as the creator of its output; `Tensor.backward` replays the records
in reverse topological order.
"""
import logging
from contextlib import contextmanager
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..common.exception_handler import ContractError


logger = logging.getLogger(__name__)

FLOAT_TYPES = (np.float32, np.float64)

_grad_enabled = True
_default_dtype = np.float32


def get_default_dtype():
    return _default_dtype


def set_default_dtype(dtype):
    """ set the float type used for tensors built from python data """
    global _default_dtype
    dtype = np.dtype(dtype).type
    if dtype not in FLOAT_TYPES:
        raise ContractError(f"unsupported dtype {dtype}, use float32 or float64")

    _default_dtype = dtype


@contextmanager
def precision(dtype):
    """ temporarily switch the default dtype, e.g. `with precision(np.float64)` """
    old = _default_dtype
    set_default_dtype(dtype)
    try:
        yield
    finally:
        set_default_dtype(old)


@contextmanager
def no_grad():
    """ disable tape recording inside the block """
    global _grad_enabled
    old = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = old


def is_grad_enabled():
    return _grad_enabled


class Function:
    """ Base class of differentiable operations

    Subclasses implement `forward` on numpy arrays and `backward`, which maps
    the gradient w.r.t. the output to one gradient (or `None`) per input.
    Anything needed by `backward` is saved on `self` during `forward`.
    """

    def __init__(self, *tensors: "Tensor"):
        self.inputs = tensors

    def forward(self, *arrays: np.ndarray, **kwargs) -> np.ndarray:
        raise NotImplementedError

    def backward(self, grad: np.ndarray) -> Tuple[Optional[np.ndarray], ...]:
        raise NotImplementedError

    @classmethod
    def apply(cls, *tensors: "Tensor", **kwargs) -> "Tensor":
        func = cls(*tensors)
        out = func.forward(*(t.data for t in tensors), **kwargs)
        requires_grad = _grad_enabled and any(t.requires_grad for t in tensors)
        return Tensor(out, requires_grad=requires_grad, creator=func if requires_grad else None)

    @property
    def name(self):
        return self.__class__.__name__


class Tensor:
    """ n-dimensional float array with optional gradient tracking """

    __array_priority__ = 100

    def __init__(self, data, requires_grad=False, creator: Function = None, name: str = None, dtype=None):
        if dtype is None:
            if isinstance(data, np.ndarray) and data.dtype.type in FLOAT_TYPES:
                dtype = data.dtype
            else:
                dtype = _default_dtype

        self.data = np.asarray(data, dtype=dtype)
        self.requires_grad = requires_grad
        self.creator = creator
        self.name = name
        self.grad = None  # type: Optional[np.ndarray]

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def is_leaf(self):
        return self.creator is None

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        if self.data.size != 1:
            raise ContractError(f"item() needs a single element, got shape {self.shape}")

        return float(self.data.reshape(()))

    def detach(self) -> "Tensor":
        return Tensor(self.data, requires_grad=False, dtype=self.dtype)

    def zero_grad(self):
        self.grad = None

    def __repr__(self):
        tag = f" name={self.name}" if self.name else ""
        return f"Tensor(shape={self.shape}, dtype={self.dtype.name}{tag}, requires_grad={self.requires_grad})"

    def __len__(self):
        return self.shape[0]

    # arithmetic is routed through the closed op set in `functional`
    def __add__(self, other):
        from . import functional as F
        return F.add(self, other)

    def __radd__(self, other):
        from . import functional as F
        return F.add(other, self)

    def __sub__(self, other):
        from . import functional as F
        return F.sub(self, other)

    def __rsub__(self, other):
        from . import functional as F
        return F.sub(other, self)

    def __mul__(self, other):
        from . import functional as F
        return F.mul(self, other)

    def __rmul__(self, other):
        from . import functional as F
        return F.mul(other, self)

    def __truediv__(self, other):
        from . import functional as F
        return F.div(self, other)

    def __neg__(self):
        from . import functional as F
        return F.scalar_mul(self, -1.0)

    def __matmul__(self, other):
        from . import functional as F
        return F.matmul(self, other)

    def __getitem__(self, key):
        from . import functional as F
        return F.slice_(self, key)

    def reshape(self, *shape):
        from . import functional as F
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return F.reshape(self, shape)

    def sum(self, axis=None, keepdims=False):
        from . import functional as F
        return F.sum_(self, axis, keepdims)

    def mean(self, axis=None, keepdims=False):
        from . import functional as F
        return F.mean(self, axis, keepdims)

    def backward(self):
        """ accumulate dSelf/dLeaf into every `requires_grad` leaf """
        if self.size != 1:
            raise ContractError(f"backward() needs a scalar loss, got shape {self.shape}")
        if not self.requires_grad:
            raise ContractError("backward() on a tensor that does not require grad")

        Tape.record(self).run(np.ones_like(self.data))


class Tape:
    """ Operation records of one graph in topological order """

    def __init__(self, output: Tensor, records: List[Tensor]):
        self.output = output
        self.records = records

    def __len__(self):
        return len(self.records)

    @classmethod
    def record(cls, output: Tensor) -> "Tape":
        """ collect every non-leaf tensor reachable from `output` """
        order, visited = [], set()
        stack = [(output, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in visited or node.creator is None:
                continue

            visited.add(id(node))
            stack.append((node, True))
            for parent in node.creator.inputs:
                if parent.requires_grad and parent.creator is not None and id(parent) not in visited:
                    stack.append((parent, False))

        if not order:
            raise ContractError("empty tape: output has no recorded operations")

        return cls(output, order)

    def run(self, seed: np.ndarray):
        """ propagate `seed` from the output back to the leaves """
        grads = {id(self.output): seed}  # type: Dict[int, np.ndarray]
        for node in reversed(self.records):
            grad = grads.pop(id(node), None)
            if grad is None:
                continue

            func = node.creator
            for parent, g in zip(func.inputs, func.backward(grad)):
                if g is None or not parent.requires_grad:
                    continue

                if g.shape != parent.shape:
                    raise ContractError(
                        f"{func.name} adjoint produced shape {g.shape} for input of shape {parent.shape}")

                if parent.creator is None:
                    parent.grad = g.astype(parent.dtype, copy=True) if parent.grad is None else parent.grad + g
                else:
                    key = id(parent)
                    grads[key] = g if key not in grads else grads[key] + g


def tensor(data, requires_grad=False, name=None, dtype=None) -> Tensor:
    return Tensor(data, requires_grad=requires_grad, name=name, dtype=dtype)


def as_tensor(value: Union[Tensor, float, Sequence, np.ndarray], dtype=None) -> Tensor:
    if isinstance(value, Tensor):
        return value

    return Tensor(value, dtype=dtype)
