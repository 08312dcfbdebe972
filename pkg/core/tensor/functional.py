# coding:utf-8
"""
The closed op set. Each op is a `Function` with a hand-derived adjoint and a
thin wrapper that validates shapes before recording it on the tape.

Elementwise binary ops accept identical shapes or a 0-d operand only; use
`expand` to broadcast size-1 axes explicitly.
"""
import itertools
from typing import Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import expit

from ..common.exception_handler import ShapeError, ContractError
from .tensor import Function, Tensor, as_tensor


LEAKY_SLOPE = 0.2
STD_EPS = 1e-5

Axes = Optional[Union[int, Sequence[int]]]


def _axes(axis: Axes, ndim: int) -> Tuple[int, ...]:
    if axis is None:
        return tuple(range(ndim))
    if isinstance(axis, int):
        axis = (axis,)

    return tuple(sorted(a % ndim for a in axis))


def _reduce_to(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    """ sum a broadcast gradient back to a 0-d operand """
    if grad.shape == shape:
        return grad

    return np.asarray(grad.sum()).reshape(shape)


def _check_binary(op: str, a: Tensor, b: Tensor):
    if a.shape != b.shape and a.ndim != 0 and b.ndim != 0:
        axes = [i for i, (m, n) in enumerate(itertools.zip_longest(a.shape, b.shape)) if m != n]
        raise ShapeError(f"{op}: shapes {a.shape} and {b.shape} differ on axes {axes}")


def _pair(a, b, op):
    a = as_tensor(a, dtype=b.dtype if isinstance(b, Tensor) else None)
    b = as_tensor(b, dtype=a.dtype)
    _check_binary(op, a, b)
    return a, b


# ---------------------------------------------------------------- elementwise

class Add(Function):

    def forward(self, a, b):
        self.shapes = a.shape, b.shape
        return a + b

    def backward(self, grad):
        return _reduce_to(grad, self.shapes[0]), _reduce_to(grad, self.shapes[1])


class Sub(Function):

    def forward(self, a, b):
        self.shapes = a.shape, b.shape
        return a - b

    def backward(self, grad):
        return _reduce_to(grad, self.shapes[0]), _reduce_to(-grad, self.shapes[1])


class Mul(Function):

    def forward(self, a, b):
        self.a, self.b = a, b
        return a * b

    def backward(self, grad):
        return _reduce_to(grad * self.b, self.a.shape), _reduce_to(grad * self.a, self.b.shape)


class Div(Function):

    def forward(self, a, b):
        self.a, self.b = a, b
        return a / b

    def backward(self, grad):
        ga = grad / self.b
        gb = -grad * self.a / (self.b * self.b)
        return _reduce_to(ga, self.a.shape), _reduce_to(gb, self.b.shape)


class ScalarMul(Function):

    def forward(self, x, c=1.0):
        self.c = c
        return x * x.dtype.type(c)

    def backward(self, grad):
        return grad * grad.dtype.type(self.c),


class LeakyReLU(Function):

    def forward(self, x, slope=LEAKY_SLOPE):
        self.mask = x > 0
        self.slope = x.dtype.type(slope)
        return np.where(self.mask, x, x * self.slope)

    def backward(self, grad):
        return np.where(self.mask, grad, grad * self.slope),


class Tanh(Function):

    def forward(self, x):
        self.y = np.tanh(x)
        return self.y

    def backward(self, grad):
        return grad * (1 - self.y * self.y),


class Softplus(Function):
    """ log(1 + exp(x)), stable for any finite x """

    def forward(self, x):
        self.x = x
        return np.logaddexp(x.dtype.type(0), x)

    def backward(self, grad):
        return grad * expit(self.x).astype(grad.dtype),


# ------------------------------------------------------------------- structure

class Reshape(Function):

    def forward(self, x, shape=()):
        self.in_shape = x.shape
        return x.reshape(shape)

    def backward(self, grad):
        return grad.reshape(self.in_shape),


class Concat(Function):

    def forward(self, *arrays, axis=0):
        self.axis = axis
        self.sizes = [a.shape[axis] for a in arrays]
        return np.concatenate(arrays, axis=axis)

    def backward(self, grad):
        cuts = np.cumsum(self.sizes)[:-1]
        return tuple(np.split(grad, cuts, axis=self.axis))


class Expand(Function):
    """ broadcast size-1 axes to `shape`, adjoint sums them back """

    def forward(self, x, shape=()):
        self.in_shape = x.shape
        return np.ascontiguousarray(np.broadcast_to(x, shape))

    def backward(self, grad):
        axes = tuple(i for i, (m, n) in enumerate(zip(self.in_shape, grad.shape)) if m == 1 and n != 1)
        return grad.sum(axis=axes, keepdims=True).reshape(self.in_shape),


class Slice(Function):

    def forward(self, x, key=()):
        self.in_shape, self.key = x.shape, key
        return np.array(x[key])

    def backward(self, grad):
        g = np.zeros(self.in_shape, dtype=grad.dtype)
        np.add.at(g, self.key, grad)
        return g,


class MatMul(Function):

    def forward(self, a, b):
        self.a, self.b = a, b
        return a @ b

    def backward(self, grad):
        return grad @ self.b.T, self.a.T @ grad


# ------------------------------------------------------------------ reductions

class Sum(Function):

    def forward(self, x, axis=None, keepdims=False):
        self.in_shape = x.shape
        self.axes = _axes(axis, x.ndim)
        self.keepdims = keepdims
        return np.asarray(x.sum(axis=self.axes, keepdims=keepdims))

    def backward(self, grad):
        if not self.keepdims:
            grad = np.expand_dims(grad, self.axes)
        return np.broadcast_to(grad, self.in_shape).copy(),


class Mean(Sum):

    def forward(self, x, axis=None, keepdims=False):
        out = super().forward(x, axis, keepdims)
        self.count = int(np.prod([x.shape[a] for a in self.axes]))
        return out / x.dtype.type(self.count)

    def backward(self, grad):
        g, = super().backward(grad)
        return g / g.dtype.type(self.count),


class Std(Function):
    """ sqrt(population variance + eps) over `axis` """

    def forward(self, x, axis=None, keepdims=False, eps=STD_EPS):
        self.axes = _axes(axis, x.ndim)
        self.keepdims = keepdims
        self.count = int(np.prod([x.shape[a] for a in self.axes]))
        self.centered = x - x.mean(axis=self.axes, keepdims=True)
        var = (self.centered * self.centered).mean(axis=self.axes, keepdims=True)
        self.std = np.sqrt(var + x.dtype.type(eps))
        return self.std if keepdims else np.squeeze(self.std, axis=self.axes)

    def backward(self, grad):
        if not self.keepdims:
            grad = np.expand_dims(grad, self.axes)
        # the mean term vanishes because the centered values sum to zero
        return grad * self.centered / (self.count * self.std),


# ------------------------------------------------------------- spatial kernels

class Conv(Function):
    """ channels-last cross-correlation over 1-3 spatial axes

    input `[N, *spatial, Cin]`, weight `[*k, Cin, Cout]`, bias `[Cout]`
    """

    def forward(self, x, w, b, stride=1, pad=0):
        nsp = x.ndim - 2
        self.stride, self.pad, self.nsp = stride, pad, nsp
        self.kernel = w.shape[:nsp]
        widths = [(0, 0)] + [(pad, pad)] * nsp + [(0, 0)]
        self.xp = np.pad(x, widths) if pad else x
        self.w = w
        self.in_shape = x.shape
        self.out_sp = tuple((self.xp.shape[1 + i] - self.kernel[i]) // stride + 1 for i in range(nsp))

        out = np.zeros((x.shape[0],) + self.out_sp + (w.shape[-1],), dtype=x.dtype)
        for off in np.ndindex(*self.kernel):
            out += self.xp[self._window(off)] @ w[off]

        return out + b

    def _window(self, off):
        s = self.stride
        return (slice(None),) + tuple(
            slice(o, o + s * (n - 1) + 1, s) for o, n in zip(off, self.out_sp)) + (slice(None),)

    def backward(self, grad):
        cin, cout = self.w.shape[-2:]
        gxp = np.zeros_like(self.xp)
        gw = np.zeros_like(self.w)
        g2 = grad.reshape(-1, cout)
        for off in np.ndindex(*self.kernel):
            window = self._window(off)
            gw[off] = self.xp[window].reshape(-1, cin).T @ g2
            gxp[window] += grad @ self.w[off].T

        p = self.pad
        gx = gxp
        if p:
            gx = gxp[(slice(None),) + tuple(slice(p, p + n) for n in self.in_shape[1:-1]) + (slice(None),)]
        gb = g2.sum(axis=0)
        return gx, gw, gb


class UpsampleNearest(Function):

    def forward(self, x, factor=2, axes=()):
        self.factor, self.axes, self.in_shape = factor, axes, x.shape
        for a in axes:
            x = np.repeat(x, factor, axis=a)
        return x

    def backward(self, grad):
        f = self.factor
        for a in reversed(self.axes):
            shape = grad.shape[:a] + (grad.shape[a] // f, f) + grad.shape[a + 1:]
            grad = grad.reshape(shape).sum(axis=a + 1)
        return grad,


# ------------------------------------------------------------------- wrappers

def add(a, b) -> Tensor:
    a, b = _pair(a, b, "add")
    return Add.apply(a, b)


def sub(a, b) -> Tensor:
    a, b = _pair(a, b, "sub")
    return Sub.apply(a, b)


def mul(a, b) -> Tensor:
    if not isinstance(a, Tensor) and np.ndim(a) == 0:
        return scalar_mul(b, float(a))
    if not isinstance(b, Tensor) and np.ndim(b) == 0:
        return scalar_mul(a, float(b))

    a, b = _pair(a, b, "mul")
    return Mul.apply(a, b)


def div(a, b) -> Tensor:
    if not isinstance(b, Tensor) and np.ndim(b) == 0:
        return scalar_mul(a, 1.0 / float(b))

    a, b = _pair(a, b, "div")
    return Div.apply(a, b)


def scalar_mul(x: Tensor, c: float) -> Tensor:
    return ScalarMul.apply(as_tensor(x), c=float(c))


def leaky_relu(x: Tensor, slope: float = LEAKY_SLOPE) -> Tensor:
    return LeakyReLU.apply(x, slope=slope)


def tanh(x: Tensor) -> Tensor:
    return Tanh.apply(x)


def softplus(x: Tensor) -> Tensor:
    return Softplus.apply(x)


def reshape(x: Tensor, shape) -> Tensor:
    shape = tuple(int(s) for s in shape)
    if -1 in shape:
        known = int(np.prod([s for s in shape if s != -1]))
        shape = tuple(x.size // known if s == -1 else s for s in shape)
    if int(np.prod(shape)) != x.size:
        raise ShapeError(f"reshape: cannot view {x.shape} as {shape}")

    return Reshape.apply(x, shape=shape)


def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    if not tensors:
        raise ContractError("concat: nothing to concatenate")

    ref = tensors[0]
    axis = axis % ref.ndim
    for t in tensors[1:]:
        if t.ndim != ref.ndim or any(m != n for i, (m, n) in enumerate(zip(t.shape, ref.shape)) if i != axis):
            raise ShapeError(f"concat: {t.shape} does not match {ref.shape} off axis {axis}")

    return Concat.apply(*tensors, axis=axis)


def expand(x: Tensor, shape) -> Tensor:
    shape = tuple(shape)
    if len(shape) != x.ndim or any(m != n and m != 1 for m, n in zip(x.shape, shape)):
        raise ShapeError(f"expand: cannot broadcast {x.shape} to {shape}")

    return Expand.apply(x, shape=shape)


def slice_(x: Tensor, key) -> Tensor:
    return Slice.apply(x, key=key)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul: cannot multiply {a.shape} by {b.shape}")

    return MatMul.apply(a, b)


def sum_(x: Tensor, axis: Axes = None, keepdims=False) -> Tensor:
    return Sum.apply(x, axis=axis, keepdims=keepdims)


def mean(x: Tensor, axis: Axes = None, keepdims=False) -> Tensor:
    return Mean.apply(x, axis=axis, keepdims=keepdims)


def std(x: Tensor, axis: Axes = None, keepdims=False, eps: float = STD_EPS) -> Tensor:
    return Std.apply(x, axis=axis, keepdims=keepdims, eps=eps)


def _conv(x: Tensor, weight: Tensor, bias: Tensor, stride: int, pad: int, nsp: int) -> Tensor:
    if x.ndim != nsp + 2 or weight.ndim != nsp + 2:
        raise ShapeError(f"conv{nsp}d: expected input rank {nsp + 2} and weight rank {nsp + 2}, "
                         f"got {x.shape} and {weight.shape}")
    if x.shape[-1] != weight.shape[-2]:
        raise ShapeError(f"conv{nsp}d: input channels (axis {x.ndim - 1}) = {x.shape[-1]} but "
                         f"weight expects {weight.shape[-2]} (axis {weight.ndim - 2})")
    if bias.shape != (weight.shape[-1],):
        raise ShapeError(f"conv{nsp}d: bias shape {bias.shape} != ({weight.shape[-1]},)")
    if stride < 1 or pad < 0:
        raise ContractError(f"conv{nsp}d: stride must be >= 1 and pad >= 0")

    bad = [1 + i for i in range(nsp) if x.shape[1 + i] + 2 * pad < weight.shape[i]]
    if bad:
        raise ShapeError(f"conv{nsp}d: kernel {weight.shape[:nsp]} larger than padded input on axes {bad}")

    return Conv.apply(x, weight, bias, stride=stride, pad=pad)


def conv3d(x: Tensor, weight: Tensor, bias: Tensor, stride: int = 1, pad: int = 0) -> Tensor:
    """ `[N, H, W, D, Cin] * [k, k, k, Cin, Cout] -> [N, H', W', D', Cout]` """
    return _conv(x, weight, bias, stride, pad, 3)


def conv2d(x: Tensor, weight: Tensor, bias: Tensor, stride: int = 1, pad: int = 0) -> Tensor:
    """ `[N, H, W, Cin] * [k, k, Cin, Cout] -> [N, H', W', Cout]` """
    return _conv(x, weight, bias, stride, pad, 2)


def upsample_nearest(x: Tensor, factor: int, dims: Sequence[int]) -> Tensor:
    if factor < 1:
        raise ContractError(f"upsample_nearest: factor must be >= 1, got {factor}")

    dims = tuple(sorted(d % x.ndim for d in dims))
    if factor == 1:
        return UpsampleNearest.apply(x, factor=1, axes=())

    return UpsampleNearest.apply(x, factor=factor, axes=dims)
