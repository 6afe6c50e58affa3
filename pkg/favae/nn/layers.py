from typing import Literal

import numpy as np

from favae.autograd import ops
from favae.autograd.tensor import Tensor
from favae.nn.module import Module, Parameter

Init = Literal["kaiming", "zeros", "identity"]


def _channel_view(v: Tensor, x: Tensor, axis: int = 1) -> Tensor:
    shape = [1] * x.ndim
    shape[axis] = v.shape[0]
    return ops.expand(ops.reshape(v, tuple(shape)), x.shape)


class Conv2d(Module):
    def __init__(
        self,
        in_channels: int,
        out_channels: int,
        kernel_size: int = 3,
        stride: int = 1,
        padding: int | None = None,
        bias: bool = True,
        init: Init = "kaiming",
        rng: np.random.Generator | None = None,
        dtype: np.dtype | str = "float64",  # type: ignore[type-arg]
    ):
        rng = rng or np.random.default_rng(0)
        self.stride = stride
        self.padding = kernel_size // 2 if padding is None else padding
        shape = (out_channels, in_channels, kernel_size, kernel_size)
        if init == "zeros":
            w = np.zeros(shape)
        elif init == "identity":
            if in_channels != out_channels:
                raise ValueError("identity init needs in_channels == out_channels")
            w = np.zeros(shape)
            c = kernel_size // 2
            w[np.arange(out_channels), np.arange(in_channels), c, c] = 1.0
        else:
            fan_in = in_channels * kernel_size * kernel_size
            w = rng.normal(0.0, np.sqrt(2.0 / fan_in), size=shape)
        self.weight = Parameter(w, dtype=dtype)
        self.bias = Parameter(np.zeros(out_channels), dtype=dtype) if bias else None

    def forward(self, x: Tensor) -> Tensor:
        y = ops.conv2d(x, self.weight, stride=self.stride, padding=self.padding)
        if self.bias is not None:
            y = y + _channel_view(self.bias, y)
        return y


class GroupNorm(Module):
    """Group normalisation with a single group and a per-channel affine."""

    def __init__(self, channels: int, eps: float = 1e-6, dtype: np.dtype | str = "float64"):  # type: ignore[type-arg]
        self.eps = eps
        self.weight = Parameter(np.ones(channels), dtype=dtype)
        self.bias = Parameter(np.zeros(channels), dtype=dtype)

    def forward(self, x: Tensor) -> Tensor:
        xhat = ops.normalize(x, axes=(1, 2, 3), eps=self.eps)
        return xhat * _channel_view(self.weight, xhat) + _channel_view(self.bias, xhat)


class Linear(Module):
    def __init__(
        self,
        in_features: int,
        out_features: int,
        bias: bool = True,
        rng: np.random.Generator | None = None,
        dtype: np.dtype | str = "float64",  # type: ignore[type-arg]
        std: float | None = None,
    ):
        rng = rng or np.random.default_rng(0)
        std = np.sqrt(1.0 / in_features) if std is None else std
        self.weight = Parameter(rng.normal(0.0, std, size=(in_features, out_features)), dtype=dtype)
        self.bias = Parameter(np.zeros(out_features), dtype=dtype) if bias else None

    def forward(self, x: Tensor) -> Tensor:
        y = ops.matmul(x, self.weight)
        if self.bias is not None:
            y = y + _channel_view(self.bias, y, axis=y.ndim - 1)
        return y


class LayerNorm(Module):
    def __init__(self, features: int, eps: float = 1e-5, dtype: np.dtype | str = "float64"):  # type: ignore[type-arg]
        self.eps = eps
        self.weight = Parameter(np.ones(features), dtype=dtype)
        self.bias = Parameter(np.zeros(features), dtype=dtype)

    def forward(self, x: Tensor) -> Tensor:
        xhat = ops.normalize(x, axes=(-1,), eps=self.eps)
        axis = x.ndim - 1
        return xhat * _channel_view(self.weight, xhat, axis) + _channel_view(self.bias, xhat, axis)


class Embedding(Module):
    def __init__(
        self,
        num_embeddings: int,
        dim: int,
        rng: np.random.Generator | None = None,
        dtype: np.dtype | str = "float64",  # type: ignore[type-arg]
        std: float = 0.02,
    ):
        rng = rng or np.random.default_rng(0)
        self.weight = Parameter(rng.normal(0.0, std, size=(num_embeddings, dim)), dtype=dtype)

    def forward(self, indices: np.ndarray) -> Tensor:
        return ops.embedding(self.weight, indices)
