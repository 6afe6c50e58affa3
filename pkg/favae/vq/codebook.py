"""
Vector quantisation against a learned codebook.

Entries are learned by exponential moving averages of the encoder outputs
assigned to them (default) or by gradient descent on a codebook loss.
"""
import logging
import struct
from typing import Literal

import numpy as np

from favae.autograd import ops
from favae.autograd.tensor import Tensor
from favae.core.errors import ContractError, DimensionError, FormatError
from favae.nn.module import Module, Parameter

logger = logging.getLogger(__name__)

MAGIC = b"FVQ1"
# magic, size, dim, flags, updates, reseed seed
_HEADER = struct.Struct("<4sIIIQQ")
FLAG_L2 = 1
FLAG_EMA = 2


class Codebook(Module):
    def __init__(
        self,
        size: int,
        dim: int,
        decay: float = 0.99,
        eps: float = 1e-5,
        l2_normalize: bool = True,
        mode: Literal["ema", "gradient"] = "ema",
        dead_code_threshold: int = 256,
        seed: int = 0,
        rng: np.random.Generator | None = None,
        dtype: np.dtype | str = "float64",  # type: ignore[type-arg]
    ):
        if size < 1 or dim < 1:
            raise ContractError(f"codebook needs at least one entry of positive width, got {size}x{dim}")
        rng = rng or np.random.default_rng(seed)
        self.size, self.dim = size, dim
        self.decay, self.eps = decay, eps
        self.l2_normalize = l2_normalize
        self.mode = mode
        self.dead_code_threshold = dead_code_threshold
        self.seed = seed
        self.updates = 0

        init = rng.normal(0.0, 1.0, size=(size, dim))
        if l2_normalize:
            init /= np.linalg.norm(init, axis=1, keepdims=True)
        if mode == "gradient":
            self.entries: Tensor = Parameter(init, dtype=dtype)
        else:
            self.entries = Tensor(init, dtype=dtype)
        self.ema_cluster_size = np.ones(size, dtype=self.entries.dtype)
        self.ema_embed_sum = self.entries.data.copy()
        self.usage_counts = np.zeros(size, dtype=np.int64)
        self.idle_steps = np.zeros(size, dtype=np.int64)

    def project(self, z: Tensor) -> Tensor:
        """The representation used for matching: unit-norm rows when L2
        normalisation is enabled, `z` itself otherwise."""
        return ops.l2_normalize(z) if self.l2_normalize else z

    def _normalized_entries(self) -> np.ndarray:
        e = self.entries.data
        if self.l2_normalize:
            e = e / np.maximum(np.linalg.norm(e, axis=1, keepdims=True), 1e-12)
        return e

    def nearest(self, z: np.ndarray) -> np.ndarray:
        """Index of the closest entry for every row of `z` (last axis n_z);
        equal distances resolve to the lowest index."""
        if z.shape[-1] != self.dim:
            raise DimensionError(f"codebook width is {self.dim}, got vectors of width {z.shape[-1]}")
        flat = z.reshape(-1, self.dim).astype(np.float64)
        if self.l2_normalize:
            flat = flat / np.maximum(np.linalg.norm(flat, axis=1, keepdims=True), 1e-12)
        e = self._normalized_entries().astype(np.float64)
        d = (flat**2).sum(axis=1, keepdims=True) + (e**2).sum(axis=1)[None, :] - 2.0 * flat @ e.T
        return np.argmin(d, axis=1).reshape(z.shape[:-1])

    def lookup(self, indices: np.ndarray) -> np.ndarray:
        idx = np.asarray(indices)
        if np.any(idx < 0) or np.any(idx >= self.size):
            raise DimensionError(f"code index outside [0, {self.size})")
        return self._normalized_entries()[idx]

    def quantize(self, z: Tensor) -> tuple[Tensor, np.ndarray]:
        """Snap every n_z vector of `z` to its nearest entry.

        The result carries the entry values forward and passes gradients to
        `z` unchanged.
        """
        indices = self.nearest(z.data)
        q = self.lookup(indices).astype(z.dtype)
        return ops.straight_through(z, q), indices

    def codebook_loss(self, z: Tensor, indices: np.ndarray) -> Tensor:
        """mean((sg(z) - e_k)²), the entry-side term of gradient-mode learning."""
        q = ops.embedding(self.entries, indices)
        return ops.mean(ops.square(q - z.detach()))

    def track_usage(self, indices: np.ndarray) -> np.ndarray:
        counts = np.bincount(np.asarray(indices).reshape(-1), minlength=self.size)
        self.usage_counts += counts
        self.idle_steps = np.where(counts > 0, 0, self.idle_steps + 1)
        return counts

    def ema_update(self, z: Tensor | np.ndarray, indices: np.ndarray) -> None:
        """Move counts and sums toward the current assignment, then reset
        each entry to sum / (count + eps)."""
        data = z.data if isinstance(z, Tensor) else np.asarray(z)
        flat = data.reshape(-1, self.dim).astype(self.ema_embed_sum.dtype)
        idx = np.asarray(indices).reshape(-1)
        if idx.shape[0] != flat.shape[0]:
            raise DimensionError(f"{idx.shape[0]} indices for {flat.shape[0]} vectors")
        # buffers stay in the entry dtype so checkpoints restore them exactly
        counts = self.track_usage(idx).astype(self.ema_cluster_size.dtype)
        sums = np.zeros_like(self.ema_embed_sum)
        np.add.at(sums, idx, flat)

        g = self.decay
        self.ema_cluster_size = g * self.ema_cluster_size + (1.0 - g) * counts
        self.ema_embed_sum = g * self.ema_embed_sum + (1.0 - g) * sums
        live = self.ema_cluster_size > 0
        entries = self.entries.data
        entries[live] = self.ema_embed_sum[live] / (self.ema_cluster_size[live, None] + self.eps)
        self.updates += 1
        self._reseed_dead(flat)
        if self.l2_normalize:
            entries /= np.maximum(np.linalg.norm(entries, axis=1, keepdims=True), 1e-12)

    def _reseed_dead(self, flat: np.ndarray) -> None:
        if self.dead_code_threshold <= 0:
            return
        dead = np.flatnonzero(self.idle_steps >= self.dead_code_threshold)
        if dead.size == 0:
            return
        rng = np.random.default_rng((self.seed, self.updates))
        picks = rng.integers(0, flat.shape[0], size=dead.size)
        logger.warning(f"Reseeding {dead.size} dead codebook entries at update {self.updates}")
        self.entries.data[dead] = flat[picks]
        self.ema_embed_sum[dead] = flat[picks]
        self.ema_cluster_size[dead] = 1.0
        self.idle_steps[dead] = 0

    def to_bytes(self) -> bytes:
        flags = (FLAG_L2 if self.l2_normalize else 0) | (FLAG_EMA if self.mode == "ema" else 0)
        return b"".join(
            [
                _HEADER.pack(MAGIC, self.size, self.dim, flags, self.updates, self.seed),
                self.entries.data.astype("<f4").tobytes(),
                self.ema_cluster_size.astype("<f4").tobytes(),
                self.ema_embed_sum.astype("<f4").tobytes(),
                self.idle_steps.astype("<i8").tobytes(),
            ]
        )

    def load_bytes(self, blob: bytes) -> int:
        """Restore state from `blob`; returns the number of bytes consumed."""
        if len(blob) < _HEADER.size:
            raise FormatError("codebook blob is truncated")
        magic, size, dim, flags, updates, seed = _HEADER.unpack_from(blob)
        if magic != MAGIC:
            raise FormatError(f"bad codebook magic {magic!r}")
        if (size, dim) != (self.size, self.dim):
            raise FormatError(f"codebook blob is {size}x{dim}, expected {self.size}x{self.dim}")
        if bool(flags & FLAG_L2) != self.l2_normalize:
            raise FormatError("codebook blob disagrees on L2 normalisation")
        offset = _HEADER.size
        sections = [(size * dim, "<f4"), (size, "<f4"), (size * dim, "<f4"), (size, "<i8")]
        arrays = []
        for count, fmt in sections:
            width = np.dtype(fmt).itemsize * count
            if offset + width > len(blob):
                raise FormatError("codebook blob is truncated")
            arrays.append(np.frombuffer(blob, dtype=fmt, count=count, offset=offset))
            offset += width
        entries, cluster, embed, idle = arrays
        self.entries.data[...] = entries.reshape(size, dim)
        self.ema_cluster_size = cluster.astype(self.entries.dtype)
        self.ema_embed_sum = embed.reshape(size, dim).astype(self.entries.dtype)
        self.idle_steps = idle.astype(np.int64)
        self.updates = int(updates)
        self.seed = int(seed)
        return offset

    @classmethod
    def from_bytes(cls, blob: bytes, **kwargs: object) -> "Codebook":
        if len(blob) < _HEADER.size:
            raise FormatError("codebook blob is truncated")
        magic, size, dim, flags, _, seed = _HEADER.unpack_from(blob)
        if magic != MAGIC:
            raise FormatError(f"bad codebook magic {magic!r}")
        kwargs.setdefault("l2_normalize", bool(flags & FLAG_L2))
        kwargs.setdefault("mode", "ema" if flags & FLAG_EMA else "gradient")
        kwargs.setdefault("seed", int(seed))
        cb = cls(size, dim, **kwargs)  # type: ignore[arg-type]
        cb.load_bytes(blob)
        return cb


def quantization_loss(z: Tensor, z_q: Tensor | np.ndarray, beta: float = 0.25) -> Tensor:
    """Commitment term beta * mean((z - sg(z_q))²); only `z` gets a gradient."""
    target = z_q.data if isinstance(z_q, Tensor) else np.asarray(z_q)
    if target.shape != z.shape:
        raise DimensionError(f"quantization_loss: shapes {z.shape} and {target.shape} differ")
    return ops.scale(ops.mean(ops.square(z - Tensor(target, dtype=z.dtype))), beta)


def perplexity(indices: np.ndarray, size: int | None = None) -> float:
    """exp(entropy) of the empirical code distribution."""
    idx = np.asarray(indices).reshape(-1)
    if idx.size == 0:
        return 1.0
    counts = np.bincount(idx, minlength=size or 0).astype(np.float64)
    p = counts[counts > 0] / idx.size
    return float(np.exp(-(p * np.log(p)).sum()))
