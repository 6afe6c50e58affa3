"""
Cross-attention autoregressive transformer over codebook indices.

Position i of the input carries the learned start token (i = 0) or the
embedding of s_{i-1}, so the logits at i predict s_i from s_{<i} and the
condition tokens. Every block runs causal self-attention, cross-attention
over the condition embeddings and a feed-forward layer, each pre-normed
and residual.
"""
from dataclasses import dataclass

import numpy as np

from favae.autograd import ops
from favae.autograd.tensor import Tensor
from favae.core.errors import DimensionError
from favae.models import CatSpec
from favae.nn import (
    Embedding,
    LayerNorm,
    Linear,
    Module,
    MultiHeadAttention,
    Parameter,
    causal_mask,
)

PAD = 0


@dataclass
class SequenceBatch:
    """Raster-order code indices [B, L] with condition tokens [B, T];
    `condition_mask` is True on real (non-padding) condition tokens."""

    indices: np.ndarray
    conditions: np.ndarray
    condition_mask: np.ndarray | None = None

    def __post_init__(self) -> None:
        self.indices = np.asarray(self.indices, dtype=np.int64)
        self.conditions = np.asarray(self.conditions, dtype=np.int64)
        if self.indices.ndim != 2 or self.conditions.ndim != 2:
            raise DimensionError("sequence batch needs [B, L] indices and [B, T] conditions")
        if self.indices.shape[0] != self.conditions.shape[0]:
            raise DimensionError(
                f"{self.indices.shape[0]} sequences but {self.conditions.shape[0]} conditions"
            )
        if self.condition_mask is None:
            self.condition_mask = self.conditions != PAD
        self.condition_mask = np.asarray(self.condition_mask, dtype=bool)

    @property
    def targets(self) -> np.ndarray:
        return self.indices

    def __len__(self) -> int:
        return int(self.indices.shape[0])


class CatBlock(Module):
    def __init__(
        self,
        spec: CatSpec,
        rng: np.random.Generator,
        dtype: np.dtype | str = "float64",  # type: ignore[type-arg]
    ):
        w = spec.width
        self.ln1 = LayerNorm(w, dtype=dtype)
        self.self_attn = MultiHeadAttention(w, spec.heads, rng=rng, dtype=dtype)
        self.ln2 = LayerNorm(w, dtype=dtype)
        self.cross_attn = MultiHeadAttention(
            w, spec.heads, context_width=spec.cond_width, rng=rng, dtype=dtype
        )
        self.ln3 = LayerNorm(w, dtype=dtype)
        self.ff1 = Linear(w, spec.ff_width, rng=rng, dtype=dtype)
        self.ff2 = Linear(spec.ff_width, w, rng=rng, dtype=dtype)

    def forward(
        self, x: Tensor, context: Tensor, self_mask: np.ndarray, cross_mask: np.ndarray
    ) -> Tensor:
        x = x + self.self_attn(self.ln1(x), mask=self_mask)
        x = x + self.cross_attn(self.ln2(x), context=context, mask=cross_mask)
        return x + self.ff2(ops.gelu(self.ff1(self.ln3(x))))


class CAT(Module):
    def __init__(
        self,
        spec: CatSpec,
        seed: int = 0,
        dtype: np.dtype | str = "float64",  # type: ignore[type-arg]
    ):
        rng = np.random.default_rng(seed)
        self.spec = spec
        self.tok_emb = Embedding(spec.vocab_size, spec.width, rng=rng, dtype=dtype)
        self.sos = Parameter(rng.normal(0.0, 0.02, size=(spec.width,)), dtype=dtype)
        self.pos_emb = Parameter(
            rng.normal(0.0, 0.02, size=(spec.context_length, spec.width)), dtype=dtype
        )
        self.cond_emb = Embedding(spec.cond_vocab_size, spec.cond_width, rng=rng, dtype=dtype)
        self.blocks = [CatBlock(spec, rng, dtype) for _ in range(spec.layers)]
        self.ln_f = LayerNorm(spec.width, dtype=dtype)
        self.head = Linear(spec.width, spec.vocab_size, rng=rng, dtype=dtype)

    def condition_embeddings(self, conditions: np.ndarray) -> Tensor:
        c = np.asarray(conditions)
        if np.any(c < 0) or np.any(c >= self.spec.cond_vocab_size):
            raise DimensionError(f"condition token outside [0, {self.spec.cond_vocab_size})")
        return self.cond_emb(c)

    def _inputs(self, prefix: np.ndarray) -> Tensor:
        b, n = prefix.shape
        sos = ops.expand(ops.reshape(self.sos, (1, 1, self.spec.width)), (b, 1, self.spec.width))
        if n == 0:
            return sos
        return ops.concat([sos, self.tok_emb(prefix)], axis=1)

    def logits_for(
        self,
        prefix: np.ndarray,
        conditions: np.ndarray,
        condition_mask: np.ndarray | None = None,
        context: Tensor | None = None,
    ) -> Tensor:
        """Logits [B, n + 1, V] for every position after the start token and
        the n prefix tokens.

        `context` replaces the learned condition embeddings with any
        [B, T, cond_width] matrix.
        """
        s = self.spec
        prefix = np.asarray(prefix, dtype=np.int64)
        b, n = prefix.shape
        if n + 1 > s.context_length:
            raise DimensionError(f"sequence of {n + 1} positions exceeds context {s.context_length}")
        if np.any(prefix < 0) or np.any(prefix >= s.vocab_size):
            raise DimensionError(f"code index outside [0, {s.vocab_size})")
        ctx = self.condition_embeddings(conditions) if context is None else context
        if ctx.ndim != 3 or ctx.shape[0] != b or ctx.shape[2] != s.cond_width:
            raise DimensionError(f"condition context {ctx.shape} for a batch of {b}")
        mask = np.asarray(conditions) != PAD if condition_mask is None else condition_mask
        cross_mask = np.asarray(mask, dtype=bool)[:, None, None, :]

        length = n + 1
        pos = ops.expand(
            ops.reshape(self.pos_emb[:length], (1, length, s.width)), (b, length, s.width)
        )
        x = self._inputs(prefix) + pos
        self_mask = causal_mask(length)
        for block in self.blocks:
            x = block(x, ctx, self_mask, cross_mask)
        return self.head(self.ln_f(x))

    def forward(self, batch: SequenceBatch) -> Tensor:
        """Teacher-forced logits [B, L, V] for the whole sequence."""
        return self.logits_for(batch.indices[:, :-1], batch.conditions, batch.condition_mask)

    def step_logits(
        self,
        prefix: np.ndarray,
        conditions: np.ndarray,
        condition_mask: np.ndarray | None = None,
    ) -> Tensor:
        """Logits [B, V] of the token following `prefix`."""
        logits = self.logits_for(prefix, conditions, condition_mask)
        return logits[:, -1, :]


def cat_nll(logits: Tensor, targets: np.ndarray) -> Tensor:
    """Mean token negative log-likelihood under teacher forcing."""
    if logits.shape[:-1] != np.asarray(targets).shape:
        raise DimensionError(f"logits {logits.shape} do not match targets {np.shape(targets)}")
    return ops.cross_entropy(logits, targets)
