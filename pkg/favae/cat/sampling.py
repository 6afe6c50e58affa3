import logging

import numpy as np

from favae.autograd.tensor import no_grad
from favae.cat.model import CAT, PAD
from favae.core.errors import ContractError

logger = logging.getLogger(__name__)


def top_k_filter(logits: np.ndarray, k: int) -> np.ndarray:
    """Set every logit below the k-th largest of its row to -inf."""
    k = min(max(k, 1), logits.shape[-1])
    kth = np.sort(logits, axis=-1)[..., -k, None]
    return np.where(logits < kth, -np.inf, logits)


def sample(
    model: CAT,
    conditions: np.ndarray,
    length: int | None = None,
    temperature: float = 1.0,
    top_k: int | None = None,
    greedy: bool = False,
    seed: int = 0,
) -> np.ndarray:
    """
    Left-to-right sampling of code indices [B, length] for condition tokens
    [B, T] (or a single [T] row).

    `greedy` picks the arg-max at every step; otherwise the next token is
    drawn from softmax(logits / temperature), optionally restricted to the
    top_k candidates. A fixed seed fixes the result.
    """
    if temperature <= 0:
        raise ContractError(f"temperature must be positive, got {temperature}")
    cond = np.atleast_2d(np.asarray(conditions, dtype=np.int64))
    length = model.spec.context_length if length is None else length
    rng = np.random.default_rng(seed)
    mask = cond != PAD
    out = np.zeros((cond.shape[0], 0), dtype=np.int64)
    with no_grad():
        for _ in range(length):
            logits = model.step_logits(out, cond, mask).data.astype(np.float64)
            if greedy:
                nxt = logits.argmax(axis=-1)
            else:
                logits = logits / temperature
                if top_k is not None:
                    logits = top_k_filter(logits, top_k)
                z = logits - logits.max(axis=-1, keepdims=True)
                p = np.exp(z)
                p /= p.sum(axis=-1, keepdims=True)
                nxt = np.array([rng.choice(p.shape[-1], p=row) for row in p])
            out = np.concatenate([out, nxt[:, None]], axis=1)
    logger.debug(f"Sampled {out.shape[0]} sequences of length {length}")
    return out
