import numpy as np

from favae.autograd import ops
from favae.autograd.tensor import Tensor
from favae.core.errors import ConfigError, DimensionError
from favae.nn.layers import Conv2d, Linear
from favae.nn.module import Module


class SpatialSelfAttention(Module):
    """Single-head self-attention over the H·W positions of a feature map,
    VQ-GAN AttnBlock style (1x1 projections, residual output)."""

    def __init__(
        self,
        channels: int,
        rng: np.random.Generator | None = None,
        dtype: np.dtype | str = "float64",  # type: ignore[type-arg]
    ):
        rng = rng or np.random.default_rng(0)
        self.q = Conv2d(channels, channels, 1, rng=rng, dtype=dtype)
        self.k = Conv2d(channels, channels, 1, rng=rng, dtype=dtype)
        self.v = Conv2d(channels, channels, 1, rng=rng, dtype=dtype)
        self.proj = Conv2d(channels, channels, 1, rng=rng, dtype=dtype)

    def forward(self, x: Tensor) -> Tensor:
        b, c, h, w = x.shape
        q = ops.permute(ops.reshape(self.q(x), (b, c, h * w)), (0, 2, 1))
        k = ops.reshape(self.k(x), (b, c, h * w))
        v = ops.permute(ops.reshape(self.v(x), (b, c, h * w)), (0, 2, 1))
        attn = ops.softmax(ops.scale(ops.matmul(q, k), float(c) ** -0.5))
        out = ops.reshape(ops.permute(ops.matmul(attn, v), (0, 2, 1)), (b, c, h, w))
        return x + self.proj(out)


class MultiHeadAttention(Module):
    """Scaled dot-product attention of `x` over `context` (itself when None).

    `mask` is a boolean array broadcastable to [B, heads, L, S]; True keeps a
    query/key pair.
    """

    def __init__(
        self,
        width: int,
        heads: int,
        context_width: int | None = None,
        rng: np.random.Generator | None = None,
        dtype: np.dtype | str = "float64",  # type: ignore[type-arg]
    ):
        if width % heads:
            raise ConfigError(f"width {width} is not divisible by {heads} heads")
        rng = rng or np.random.default_rng(0)
        kv = width if context_width is None else context_width
        self.heads = heads
        self.head_dim = width // heads
        self.q = Linear(width, width, rng=rng, dtype=dtype)
        self.k = Linear(kv, width, rng=rng, dtype=dtype)
        self.v = Linear(kv, width, rng=rng, dtype=dtype)
        self.out = Linear(width, width, rng=rng, dtype=dtype)

    def _split(self, t: Tensor) -> Tensor:
        b, n, _ = t.shape
        return ops.permute(ops.reshape(t, (b, n, self.heads, self.head_dim)), (0, 2, 1, 3))

    def forward(
        self, x: Tensor, context: Tensor | None = None, mask: np.ndarray | None = None
    ) -> Tensor:
        ctx = x if context is None else context
        if ctx.shape[0] != x.shape[0]:
            raise DimensionError(f"attention: batch {x.shape[0]} vs context batch {ctx.shape[0]}")
        b, n, width = x.shape
        q = self._split(self.q(x))
        k = ops.permute(self._split(self.k(ctx)), (0, 1, 3, 2))
        v = self._split(self.v(ctx))
        scores = ops.scale(ops.matmul(q, k), self.head_dim**-0.5)
        attn = ops.softmax(scores, mask=mask)
        merged = ops.reshape(ops.permute(ops.matmul(attn, v), (0, 2, 1, 3)), (b, n, width))
        return self.out(merged)


def causal_mask(length: int) -> np.ndarray:
    return np.tril(np.ones((length, length), dtype=bool))
