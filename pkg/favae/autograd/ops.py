"""
Differentiable operations.

Each op is a `Function` subclass with a functional wrapper. Binary
element-wise ops accept operands of identical shape or a 0-d scalar;
anything else must be broadcast explicitly with `expand`.
"""
from typing import Any, Literal

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from favae.autograd.tensor import Function, Tensor
from favae.core.errors import ContractError, DimensionError

Operand = Tensor | float | int


def _lift(x: Operand, like: "Tensor | None" = None) -> Tensor:
    if isinstance(x, Tensor):
        return x
    dtype = like.dtype if like is not None else None
    return Tensor(x, dtype=dtype)


def _pair(a: Operand, b: Operand) -> tuple[Tensor, Tensor]:
    if isinstance(a, Tensor):
        return a, _lift(b, a)
    tb = _lift(b)
    return _lift(a, tb), tb


def _check_binary(a: np.ndarray, b: np.ndarray, op: str) -> None:
    if a.shape != b.shape and a.ndim != 0 and b.ndim != 0:
        raise DimensionError(f"{op}: shapes {a.shape} and {b.shape} are not broadcastable")


def _reduce_to(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    if g.shape == shape:
        return g
    return np.asarray(g.sum(), dtype=g.dtype).reshape(shape)


########### Element-wise ###########


class Add(Function):
    def forward(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        _check_binary(a, b, "add")
        self.shapes = (a.shape, b.shape)
        return a + b

    def backward(self, grad: np.ndarray) -> tuple[np.ndarray | None, ...]:
        return _reduce_to(grad, self.shapes[0]), _reduce_to(grad, self.shapes[1])


class Sub(Function):
    def forward(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        _check_binary(a, b, "sub")
        self.shapes = (a.shape, b.shape)
        return a - b

    def backward(self, grad: np.ndarray) -> tuple[np.ndarray | None, ...]:
        return _reduce_to(grad, self.shapes[0]), _reduce_to(-grad, self.shapes[1])


class Mul(Function):
    def forward(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        _check_binary(a, b, "mul")
        self.a, self.b = a, b
        return a * b

    def backward(self, grad: np.ndarray) -> tuple[np.ndarray | None, ...]:
        return (
            _reduce_to(grad * self.b, self.a.shape),
            _reduce_to(grad * self.a, self.b.shape),
        )


class Div(Function):
    def forward(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        _check_binary(a, b, "div")
        self.a, self.b = a, b
        return a / b

    def backward(self, grad: np.ndarray) -> tuple[np.ndarray | None, ...]:
        ga = grad / self.b
        gb = -grad * self.a / (self.b * self.b)
        return _reduce_to(ga, self.a.shape), _reduce_to(gb, self.b.shape)


class Neg(Function):
    def forward(self, a: np.ndarray) -> np.ndarray:
        return -a

    def backward(self, grad: np.ndarray) -> tuple[np.ndarray | None, ...]:
        return (-grad,)


class Relu(Function):
    def forward(self, a: np.ndarray) -> np.ndarray:
        self.mask = a > 0
        return np.where(self.mask, a, 0).astype(a.dtype)

    def backward(self, grad: np.ndarray) -> tuple[np.ndarray | None, ...]:
        return (grad * self.mask,)


def _sigmoid(a: np.ndarray) -> np.ndarray:
    # split on sign so exp never overflows
    out = np.empty_like(a)
    pos = a >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-a[pos]))
    ea = np.exp(a[~pos])
    out[~pos] = ea / (1.0 + ea)
    return out


class Sigmoid(Function):
    def forward(self, a: np.ndarray) -> np.ndarray:
        self.s = _sigmoid(a)
        return self.s

    def backward(self, grad: np.ndarray) -> tuple[np.ndarray | None, ...]:
        return (grad * self.s * (1 - self.s),)


class Swish(Function):
    def forward(self, a: np.ndarray) -> np.ndarray:
        self.a = a
        self.s = _sigmoid(a)
        return a * self.s

    def backward(self, grad: np.ndarray) -> tuple[np.ndarray | None, ...]:
        s = self.s
        return (grad * (s + self.a * s * (1 - s)),)


class Gelu(Function):
    """tanh approximation."""

    _c = np.sqrt(2.0 / np.pi)

    def forward(self, a: np.ndarray) -> np.ndarray:
        self.a = a
        self.t = np.tanh(self._c * (a + 0.044715 * a**3))
        return 0.5 * a * (1 + self.t)

    def backward(self, grad: np.ndarray) -> tuple[np.ndarray | None, ...]:
        a, t = self.a, self.t
        dt = (1 - t * t) * self._c * (1 + 3 * 0.044715 * a * a)
        return (grad * (0.5 * (1 + t) + 0.5 * a * dt),)


class Exp(Function):
    def forward(self, a: np.ndarray) -> np.ndarray:
        self.out = np.exp(a)
        return self.out

    def backward(self, grad: np.ndarray) -> tuple[np.ndarray | None, ...]:
        return (grad * self.out,)


class Log(Function):
    def forward(self, a: np.ndarray) -> np.ndarray:
        if np.any(a <= 0):
            raise ContractError("log of a non-positive value")
        self.a = a
        return np.log(a)

    def backward(self, grad: np.ndarray) -> tuple[np.ndarray | None, ...]:
        return (grad / self.a,)


class Sqrt(Function):
    def forward(self, a: np.ndarray) -> np.ndarray:
        if np.any(a < 0):
            raise ContractError("sqrt of a negative value")
        self.out = np.sqrt(a)
        return self.out

    def backward(self, grad: np.ndarray) -> tuple[np.ndarray | None, ...]:
        return (grad / (2 * self.out),)


class Softplus(Function):
    def forward(self, a: np.ndarray) -> np.ndarray:
        self.a = a
        return np.logaddexp(0, a).astype(a.dtype)

    def backward(self, grad: np.ndarray) -> tuple[np.ndarray | None, ...]:
        return (grad * _sigmoid(self.a),)


class Abs(Function):
    def forward(self, a: np.ndarray) -> np.ndarray:
        self.sign = np.sign(a)
        return np.abs(a)

    def backward(self, grad: np.ndarray) -> tuple[np.ndarray | None, ...]:
        return (grad * self.sign,)


class Square(Function):
    def forward(self, a: np.ndarray) -> np.ndarray:
        self.a = a
        return a * a

    def backward(self, grad: np.ndarray) -> tuple[np.ndarray | None, ...]:
        return (2 * grad * self.a,)


class Modulus(Function):
    """sqrt(re² + im²), with a zero subgradient where the modulus vanishes."""

    def forward(self, re: np.ndarray, im: np.ndarray) -> np.ndarray:
        _check_binary(re, im, "modulus")
        if re.shape != im.shape:
            raise DimensionError("modulus needs real and imaginary parts of equal shape")
        self.re, self.im = re, im
        self.out = np.sqrt(re * re + im * im)
        return self.out

    def backward(self, grad: np.ndarray) -> tuple[np.ndarray | None, ...]:
        safe = np.where(self.out > 0, self.out, 1)
        scale = np.where(self.out > 0, grad / safe, 0)
        return scale * self.re, scale * self.im


########### Reductions and movement ###########


class Sum(Function):
    def forward(
        self, a: np.ndarray, axis: int | tuple[int, ...] | None = None, keepdims: bool = False
    ) -> np.ndarray:
        self.shape, self.axis, self.keepdims = a.shape, axis, keepdims
        return np.asarray(a.sum(axis=axis, keepdims=keepdims), dtype=a.dtype)

    def backward(self, grad: np.ndarray) -> tuple[np.ndarray | None, ...]:
        if self.axis is not None and not self.keepdims:
            grad = np.expand_dims(grad, self.axis)
        return (np.broadcast_to(grad, self.shape).copy(),)


class Mean(Function):
    def forward(
        self, a: np.ndarray, axis: int | tuple[int, ...] | None = None, keepdims: bool = False
    ) -> np.ndarray:
        self.shape, self.axis, self.keepdims = a.shape, axis, keepdims
        out = np.asarray(a.mean(axis=axis, keepdims=keepdims), dtype=a.dtype)
        self.count = a.size // max(out.size, 1)
        return out

    def backward(self, grad: np.ndarray) -> tuple[np.ndarray | None, ...]:
        if self.axis is not None and not self.keepdims:
            grad = np.expand_dims(grad, self.axis)
        return (np.broadcast_to(grad / self.count, self.shape).copy(),)


class Reshape(Function):
    def forward(self, a: np.ndarray, shape: tuple[int, ...] = ()) -> np.ndarray:
        self.shape = a.shape
        try:
            return a.reshape(shape)
        except ValueError as e:
            raise DimensionError(str(e))

    def backward(self, grad: np.ndarray) -> tuple[np.ndarray | None, ...]:
        return (grad.reshape(self.shape),)


class Permute(Function):
    def forward(self, a: np.ndarray, dims: tuple[int, ...] = ()) -> np.ndarray:
        if sorted(dims) != list(range(a.ndim)):
            raise DimensionError(f"permute: {dims} is not a permutation of {a.ndim} axes")
        self.inverse = tuple(np.argsort(dims))
        return np.ascontiguousarray(a.transpose(dims))

    def backward(self, grad: np.ndarray) -> tuple[np.ndarray | None, ...]:
        return (np.ascontiguousarray(grad.transpose(self.inverse)),)


class Expand(Function):
    """Explicit numpy-style broadcast; the backward rule sums the copies."""

    def forward(self, a: np.ndarray, shape: tuple[int, ...] = ()) -> np.ndarray:
        self.shape = a.shape
        try:
            return np.broadcast_to(a, shape).copy()
        except ValueError as e:
            raise DimensionError(str(e))

    def backward(self, grad: np.ndarray) -> tuple[np.ndarray | None, ...]:
        lead = grad.ndim - len(self.shape)
        g = grad.sum(axis=tuple(range(lead))) if lead else grad
        axes = tuple(i for i, n in enumerate(self.shape) if n == 1 and g.shape[i] != 1)
        if axes:
            g = g.sum(axis=axes, keepdims=True)
        return (g.reshape(self.shape),)


class GetItem(Function):
    def forward(self, a: np.ndarray, idx: Any = None) -> np.ndarray:
        self.shape, self.idx, self.dtype = a.shape, idx, a.dtype
        return np.array(a[idx])

    def backward(self, grad: np.ndarray) -> tuple[np.ndarray | None, ...]:
        out = np.zeros(self.shape, dtype=self.dtype)
        np.add.at(out, self.idx, grad)
        return (out,)


class Concat(Function):
    def forward(self, *arrays: np.ndarray, axis: int = 0) -> np.ndarray:
        self.axis = axis
        self.splits = np.cumsum([a.shape[axis] for a in arrays])[:-1]
        try:
            return np.concatenate(arrays, axis=axis)
        except ValueError as e:
            raise DimensionError(str(e))

    def backward(self, grad: np.ndarray) -> tuple[np.ndarray | None, ...]:
        return tuple(np.split(grad, self.splits, axis=self.axis))


########### Linear algebra ###########


class MatMul(Function):
    """Matrix product over the last two axes.

    Leading batch axes must match exactly, or `b` is a single 2-D matrix
    shared across the batch.
    """

    def forward(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        if a.ndim < 2 or b.ndim < 2 or a.shape[-1] != b.shape[-2]:
            raise DimensionError(f"matmul: cannot multiply {a.shape} by {b.shape}")
        if b.ndim != 2 and a.shape[:-2] != b.shape[:-2]:
            raise DimensionError(f"matmul: batch axes differ, {a.shape} vs {b.shape}")
        self.a, self.b = a, b
        return np.matmul(a, b)

    def backward(self, grad: np.ndarray) -> tuple[np.ndarray | None, ...]:
        a, b = self.a, self.b
        ga = np.matmul(grad, np.swapaxes(b, -1, -2))
        if b.ndim == 2:
            gb = a.reshape(-1, a.shape[-1]).T @ grad.reshape(-1, grad.shape[-1])
        else:
            gb = np.matmul(np.swapaxes(a, -1, -2), grad)
        return ga, gb


class Bilinear(Function):
    """left @ x @ right over the last two axes with constant matrices."""

    def forward(
        self, x: np.ndarray, left: np.ndarray | None = None, right: np.ndarray | None = None
    ) -> np.ndarray:
        assert left is not None and right is not None
        if x.ndim < 2 or left.shape[1] != x.shape[-2] or right.shape[0] != x.shape[-1]:
            raise DimensionError(
                f"bilinear: {left.shape} @ {x.shape} @ {right.shape} is undefined"
            )
        self.left, self.right = left, right
        return np.matmul(np.matmul(left, x), right)

    def backward(self, grad: np.ndarray) -> tuple[np.ndarray | None, ...]:
        return (np.matmul(np.matmul(self.left.T, grad), self.right.T),)


class Conv2d(Function):
    def forward(
        self, x: np.ndarray, w: np.ndarray, stride: int = 1, padding: int = 0
    ) -> np.ndarray:
        if x.ndim != 4 or w.ndim != 4:
            raise DimensionError(f"conv2d expects 4-D input and weight, got {x.shape}, {w.shape}")
        _, c, h, wd = x.shape
        o, cw, k, k2 = w.shape
        if c != cw:
            raise DimensionError(f"conv2d: input has {c} channels, weight expects {cw}")
        if k != k2:
            raise DimensionError("conv2d: only square kernels are supported")
        if stride < 1 or padding < 0:
            raise ContractError("conv2d: stride must be positive and padding non-negative")
        if k > h + 2 * padding or k > wd + 2 * padding:
            raise DimensionError(f"conv2d: kernel {k} exceeds padded input {h}x{wd}+{padding}")
        xp = np.pad(x, ((0, 0), (0, 0), (padding, padding), (padding, padding))) if padding else x
        win = sliding_window_view(xp, (k, k), axis=(2, 3))[:, :, ::stride, ::stride]
        self.x_shape, self.xp_shape = x.shape, xp.shape
        self.win, self.w, self.stride, self.padding = win, w, stride, padding
        return np.einsum("bchwij,ocij->bohw", win, w, optimize=True)

    def backward(self, grad: np.ndarray) -> tuple[np.ndarray | None, ...]:
        s, p, w = self.stride, self.padding, self.w
        k = w.shape[2]
        ho, wo = grad.shape[2], grad.shape[3]
        gw = np.einsum("bchwij,bohw->ocij", self.win, grad, optimize=True)
        gxp = np.zeros(self.xp_shape, dtype=grad.dtype)
        for i in range(k):
            for j in range(k):
                gxp[:, :, i : i + s * ho : s, j : j + s * wo : s] += np.einsum(
                    "bohw,oc->bchw", grad, w[:, :, i, j], optimize=True
                )
        h, wd = self.x_shape[2], self.x_shape[3]
        return gxp[:, :, p : p + h, p : p + wd], gw


class PadReflect(Function):
    """Reflect padding of the last two axes (edge sample not repeated)."""

    def forward(self, x: np.ndarray, pad: int = 0) -> np.ndarray:
        self.shape = x.shape
        m, n = x.shape[-2], x.shape[-1]
        self.rows = np.pad(np.arange(m), pad, mode="reflect") if m > 1 else np.zeros(m + 2 * pad, int)
        self.cols = np.pad(np.arange(n), pad, mode="reflect") if n > 1 else np.zeros(n + 2 * pad, int)
        return x[..., self.rows[:, None], self.cols[None, :]]

    def backward(self, grad: np.ndarray) -> tuple[np.ndarray | None, ...]:
        m, n = self.shape[-2], self.shape[-1]
        lead = int(np.prod(self.shape[:-2], dtype=np.int64))
        index = (self.rows[:, None] * n + self.cols[None, :]).ravel()
        acc = np.zeros((m * n, lead), dtype=grad.dtype)
        np.add.at(acc, index, grad.reshape(lead, -1).T)
        return (acc.T.reshape(self.shape),)


class Upsample2x(Function):
    """Nearest-neighbour upsampling by two on the last two axes."""

    def forward(self, x: np.ndarray) -> np.ndarray:
        return x.repeat(2, axis=-2).repeat(2, axis=-1)

    def backward(self, grad: np.ndarray) -> tuple[np.ndarray | None, ...]:
        *lead, h, w = grad.shape
        g = grad.reshape(*lead, h // 2, 2, w // 2, 2)
        return (g.sum(axis=(-3, -1)),)


class Normalize(Function):
    """(x - mean) / sqrt(var + eps) over `axes`, the statistics of group norm
    and layer norm."""

    def forward(self, x: np.ndarray, axes: tuple[int, ...] = (-1,), eps: float = 1e-6) -> np.ndarray:
        self.axes = axes
        mu = x.mean(axis=axes, keepdims=True)
        var = ((x - mu) ** 2).mean(axis=axes, keepdims=True)
        self.inv = 1.0 / np.sqrt(var + eps)
        self.xhat = (x - mu) * self.inv
        return self.xhat

    def backward(self, grad: np.ndarray) -> tuple[np.ndarray | None, ...]:
        gm = grad.mean(axis=self.axes, keepdims=True)
        gxm = (grad * self.xhat).mean(axis=self.axes, keepdims=True)
        return ((grad - gm - self.xhat * gxm) * self.inv,)


class L2Normalize(Function):
    def forward(self, x: np.ndarray, eps: float = 1e-12) -> np.ndarray:
        self.norm = np.maximum(np.sqrt((x * x).sum(axis=-1, keepdims=True)), eps)
        self.y = x / self.norm
        return self.y

    def backward(self, grad: np.ndarray) -> tuple[np.ndarray | None, ...]:
        dot = (grad * self.y).sum(axis=-1, keepdims=True)
        return ((grad - self.y * dot) / self.norm,)


########### Attention and classification ###########


class Softmax(Function):
    """Softmax over the last axis; `mask` (broadcastable, True = keep) removes
    entries before normalising."""

    def forward(self, x: np.ndarray, mask: np.ndarray | None = None) -> np.ndarray:
        if mask is not None:
            mask = np.broadcast_to(mask, x.shape)
            if not np.all(mask.any(axis=-1)):
                raise ContractError("softmax mask removes every entry of a row")
            x = np.where(mask, x, -np.inf)
        z = x - x.max(axis=-1, keepdims=True)
        e = np.exp(z)
        self.y = e / e.sum(axis=-1, keepdims=True)
        return self.y

    def backward(self, grad: np.ndarray) -> tuple[np.ndarray | None, ...]:
        y = self.y
        return (y * (grad - (grad * y).sum(axis=-1, keepdims=True)),)


class CrossEntropy(Function):
    """Mean negative log-likelihood of integer targets under softmax(logits)."""

    def forward(self, logits: np.ndarray, targets: np.ndarray | None = None) -> np.ndarray:
        assert targets is not None
        v = logits.shape[-1]
        flat = logits.reshape(-1, v)
        t = np.asarray(targets).reshape(-1)
        if t.shape[0] != flat.shape[0]:
            raise DimensionError(f"cross_entropy: {t.shape[0]} targets for {flat.shape[0]} rows")
        if np.any(t < 0) or np.any(t >= v):
            raise DimensionError(f"cross_entropy: targets outside [0, {v})")
        z = flat - flat.max(axis=-1, keepdims=True)
        logz = np.log(np.exp(z).sum(axis=-1, keepdims=True))
        logp = z - logz
        self.p = np.exp(logp)
        self.t, self.shape = t, logits.shape
        return np.asarray(-logp[np.arange(t.size), t].mean(), dtype=logits.dtype)

    def backward(self, grad: np.ndarray) -> tuple[np.ndarray | None, ...]:
        g = self.p.copy()
        g[np.arange(self.t.size), self.t] -= 1
        return ((g * (grad / self.t.size)).reshape(self.shape),)


class Embedding(Function):
    def forward(self, weight: np.ndarray, indices: np.ndarray | None = None) -> np.ndarray:
        assert indices is not None
        idx = np.asarray(indices)
        if np.any(idx < 0) or np.any(idx >= weight.shape[0]):
            raise DimensionError(f"embedding: index outside [0, {weight.shape[0]})")
        self.shape, self.idx = weight.shape, idx
        return weight[idx]

    def backward(self, grad: np.ndarray) -> tuple[np.ndarray | None, ...]:
        out = np.zeros(self.shape, dtype=grad.dtype)
        np.add.at(out, self.idx.reshape(-1), grad.reshape(-1, self.shape[-1]))
        return (out,)


class StraightThrough(Function):
    """Forward value of `quantized`, gradient passed unchanged to `z`."""

    def forward(self, z: np.ndarray, quantized: np.ndarray) -> np.ndarray:
        if z.shape != quantized.shape:
            raise DimensionError(f"straight-through: {z.shape} vs {quantized.shape}")
        return quantized.copy()

    def backward(self, grad: np.ndarray) -> tuple[np.ndarray | None, ...]:
        return grad, None


########### Functional wrappers ###########


def add(a: Operand, b: Operand) -> Tensor:
    return Add.apply(*_pair(a, b))


def sub(a: Operand, b: Operand) -> Tensor:
    return Sub.apply(*_pair(a, b))


def mul(a: Operand, b: Operand) -> Tensor:
    return Mul.apply(*_pair(a, b))


def div(a: Operand, b: Operand) -> Tensor:
    return Div.apply(*_pair(a, b))


def neg(a: Tensor) -> Tensor:
    return Neg.apply(a)


def relu(a: Tensor) -> Tensor:
    return Relu.apply(a)


def sigmoid(a: Tensor) -> Tensor:
    return Sigmoid.apply(a)


def swish(a: Tensor) -> Tensor:
    return Swish.apply(a)


def gelu(a: Tensor) -> Tensor:
    return Gelu.apply(a)


def exp(a: Tensor) -> Tensor:
    return Exp.apply(a)


def log(a: Tensor) -> Tensor:
    return Log.apply(a)


def sqrt(a: Tensor) -> Tensor:
    return Sqrt.apply(a)


def softplus(a: Tensor) -> Tensor:
    return Softplus.apply(a)


def abs(a: Tensor) -> Tensor:
    return Abs.apply(a)


def square(a: Tensor) -> Tensor:
    return Square.apply(a)


def modulus(re: Tensor, im: Tensor) -> Tensor:
    return Modulus.apply(re, im)


def scale(a: Tensor, factor: float) -> Tensor:
    return Mul.apply(a, _lift(factor, a))


ElementwiseOp = Literal["add", "sub", "mul", "relu", "swish", "scale"]


def elementwise(op: ElementwiseOp, a: Tensor, b: Operand | None = None) -> Tensor:
    """Dispatch by name; unary ops ignore `b`, `scale` takes a python scalar."""
    if op == "add":
        return add(a, 0.0 if b is None else b)
    if op == "sub":
        return sub(a, 0.0 if b is None else b)
    if op == "mul":
        return mul(a, 1.0 if b is None else b)
    if op == "relu":
        return relu(a)
    if op == "swish":
        return swish(a)
    if op == "scale":
        if isinstance(b, Tensor):
            raise ContractError("scale takes a python scalar factor")
        return scale(a, 1.0 if b is None else float(b))
    raise ContractError(f"unknown element-wise op {op!r}")


def sum(a: Tensor, axis: int | tuple[int, ...] | None = None, keepdims: bool = False) -> Tensor:
    return Sum.apply(a, axis=axis, keepdims=keepdims)


def mean(a: Tensor, axis: int | tuple[int, ...] | None = None, keepdims: bool = False) -> Tensor:
    return Mean.apply(a, axis=axis, keepdims=keepdims)


def reshape(a: Tensor, shape: tuple[int, ...]) -> Tensor:
    if len(shape) == 1 and isinstance(shape[0], tuple | list):
        shape = tuple(shape[0])
    return Reshape.apply(a, shape=tuple(shape))


def permute(a: Tensor, dims: tuple[int, ...]) -> Tensor:
    if len(dims) == 1 and isinstance(dims[0], tuple | list):
        dims = tuple(dims[0])
    return Permute.apply(a, dims=tuple(dims))


def expand(a: Tensor, shape: tuple[int, ...]) -> Tensor:
    if len(shape) == 1 and isinstance(shape[0], tuple | list):
        shape = tuple(shape[0])
    return Expand.apply(a, shape=tuple(shape))


def getitem(a: Tensor, idx: Any) -> Tensor:
    return GetItem.apply(a, idx=idx)


def concat(tensors: list[Tensor], axis: int = 0) -> Tensor:
    return Concat.apply(*tensors, axis=axis)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    return MatMul.apply(a, b)


def bilinear(x: Tensor, left: np.ndarray, right: np.ndarray) -> Tensor:
    return Bilinear.apply(x, left=left, right=right)


def conv2d(x: Tensor, weight: Tensor, stride: int = 1, padding: int = 0) -> Tensor:
    return Conv2d.apply(x, weight, stride=stride, padding=padding)


def pad_reflect(x: Tensor, pad: int) -> Tensor:
    if pad == 0:
        return x
    return PadReflect.apply(x, pad=pad)


def upsample2x(x: Tensor) -> Tensor:
    return Upsample2x.apply(x)


def normalize(x: Tensor, axes: tuple[int, ...], eps: float = 1e-6) -> Tensor:
    return Normalize.apply(x, axes=axes, eps=eps)


def l2_normalize(x: Tensor, eps: float = 1e-12) -> Tensor:
    return L2Normalize.apply(x, eps=eps)


def softmax(x: Tensor, mask: np.ndarray | None = None) -> Tensor:
    return Softmax.apply(x, mask=mask)


def cross_entropy(logits: Tensor, targets: np.ndarray) -> Tensor:
    return CrossEntropy.apply(logits, targets=targets)


def embedding(weight: Tensor, indices: np.ndarray) -> Tensor:
    return Embedding.apply(weight, indices=indices)


def straight_through(z: Tensor, quantized: np.ndarray) -> Tensor:
    return StraightThrough.apply(z, Tensor(quantized, dtype=z.dtype))
