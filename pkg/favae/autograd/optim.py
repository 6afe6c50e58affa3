import logging
from collections.abc import Mapping
from dataclasses import dataclass, field

import numpy as np

from favae.autograd.tensor import Tensor
from favae.core.errors import ContractError

logger = logging.getLogger(__name__)


@dataclass
class AdamState:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)


def adam_step(params: Mapping[str, Tensor], state: AdamState) -> None:
    """Apply one bias-corrected Adam update in place; gradients are left as is."""
    for name, p in params.items():
        if p.grad is None:
            raise ContractError(f"parameter {name} has no gradient")
    state.step += 1
    t = state.step
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1**t
    c2 = 1.0 - b2**t
    for name, p in params.items():
        assert p.grad is not None
        g = p.grad
        m = state.m.get(name)
        v = state.v.get(name)
        if m is None or v is None:
            m = np.zeros_like(p.data)
            v = np.zeros_like(p.data)
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        state.m[name], state.v[name] = m, v
        update = state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
        p.data -= update.astype(p.dtype, copy=False)


class Adam:
    """Adam over a named parameter set, with the usual zero_grad/step pair."""

    def __init__(
        self,
        params: Mapping[str, Tensor],
        lr: float = 1e-3,
        betas: tuple[float, float] = (0.9, 0.999),
        eps: float = 1e-8,
    ):
        self.params = dict(params)
        self.state = AdamState(lr=lr, beta1=betas[0], beta2=betas[1], eps=eps)

    def zero_grad(self) -> None:
        for p in self.params.values():
            p.zero_grad()

    def step(self) -> None:
        adam_step(self.params, self.state)

    def grad_norm(self) -> float:
        total = 0.0
        for p in self.params.values():
            if p.grad is not None:
                total += float(np.sum(p.grad.astype(np.float64) ** 2))
        return float(np.sqrt(total))

    def clip_grad_norm(self, max_norm: float) -> float:
        norm = self.grad_norm()
        if norm > max_norm > 0:
            factor = max_norm / (norm + 1e-12)
            for p in self.params.values():
                if p.grad is not None:
                    p.grad *= factor
        return norm

    def state_arrays(self) -> dict[str, np.ndarray]:
        out: dict[str, np.ndarray] = {"step": np.array([self.state.step], dtype=np.float32)}
        for name in self.params:
            if name in self.state.m:
                out[f"m/{name}"] = self.state.m[name]
                out[f"v/{name}"] = self.state.v[name]
        return out

    def load_state_arrays(self, arrays: Mapping[str, np.ndarray]) -> None:
        if "step" in arrays:
            self.state.step = int(arrays["step"].reshape(-1)[0])
        for name, p in self.params.items():
            if f"m/{name}" in arrays:
                self.state.m[name] = arrays[f"m/{name}"].astype(p.dtype).reshape(p.shape)
                self.state.v[name] = arrays[f"v/{name}"].astype(p.dtype).reshape(p.shape)
