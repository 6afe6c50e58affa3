"""Central finite-difference verification of backward rules."""
import logging
from collections.abc import Callable, Sequence

import numpy as np

from favae.autograd.tensor import Tape, Tensor, no_grad
from favae.core.config import settings
from favae.core.errors import ContractError

logger = logging.getLogger(__name__)


def _as_list(x: Tensor | Sequence[Tensor]) -> list[Tensor]:
    return [x] if isinstance(x, Tensor) else list(x)


def numerical_gradient(
    f: Callable[..., Tensor], xs: list[Tensor], h: float, unpack: bool
) -> list[np.ndarray]:
    grads = []
    with no_grad():
        for x in xs:
            g = np.zeros_like(x.data)
            for i in range(x.data.size):
                orig = x.data.flat[i]
                x.data.flat[i] = orig + h
                fp = (f(*xs) if unpack else f(xs[0])).item()
                x.data.flat[i] = orig - h
                fm = (f(*xs) if unpack else f(xs[0])).item()
                x.data.flat[i] = orig
                g.flat[i] = (fp - fm) / (2 * h)
            grads.append(g)
    return grads


def analytic_gradient(
    f: Callable[..., Tensor], xs: list[Tensor], unpack: bool
) -> list[np.ndarray]:
    for x in xs:
        if not x.requires_grad or not x.is_leaf:
            raise ContractError("gradcheck inputs must be leaves with requires_grad=True")
        x.zero_grad()
    with Tape() as tape:
        loss = f(*xs) if unpack else f(xs[0])
    tape.backward(loss)
    return [np.array(x.grad) for x in xs]


def gradcheck(
    f: Callable[..., Tensor],
    x: Tensor | Sequence[Tensor],
    h: float | None = None,
) -> float:
    """Max over coordinates of |analytic - central difference| / max(1, |analytic|).

    `x` is a tensor, or a sequence of tensors passed to `f` positionally.
    """
    step = settings.GRADCHECK_STEP if h is None else h
    unpack = not isinstance(x, Tensor)
    xs = _as_list(x)
    analytic = analytic_gradient(f, xs, unpack)
    numeric = numerical_gradient(f, xs, step, unpack)
    worst = 0.0
    for a, n in zip(analytic, numeric, strict=True):
        if a.size == 0:
            continue
        err = np.abs(a - n) / np.maximum(1.0, np.abs(a))
        worst = max(worst, float(err.max()))
    logger.debug(f"gradcheck max relative error {worst:.3e}")
    return worst
