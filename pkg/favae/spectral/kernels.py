import logging

import numpy as np

from favae.autograd import ops
from favae.autograd.tensor import Tensor
from favae.core.errors import ConfigError, DimensionError
from favae.models import SigmaMode
from favae.nn.module import Module, Parameter

logger = logging.getLogger(__name__)

SIGMA_MIN = 0.3


def inverse_softplus(y: float) -> float:
    return float(y + np.log(-np.expm1(-y)))


class GaussianKernel(Module):
    """
    Normalised μ×μ Gaussian low-pass kernel with a learnable width.

    σ is stored as an unconstrained `rho` with σ = softplus(rho) + sigma_min,
    so it stays positive whatever the optimiser does.
    """

    def __init__(
        self,
        size: int = 3,
        sigma: float = 3.0,
        sigma_min: float = SIGMA_MIN,
        dtype: np.dtype | str = "float64",  # type: ignore[type-arg]
        learnable: bool = True,
    ):
        if size < 1 or size % 2 == 0:
            raise ConfigError(f"Gaussian kernel size must be odd and positive, got {size}")
        if sigma <= sigma_min:
            raise ConfigError(f"initial sigma {sigma} must exceed sigma_min {sigma_min}")
        self.size = size
        self.sigma_min = sigma_min
        half = size // 2
        coords = np.arange(-half, half + 1, dtype=np.float64)
        self._sq_radius = (coords[:, None] ** 2 + coords[None, :] ** 2).astype(dtype)
        self.rho = Parameter(np.asarray(inverse_softplus(sigma - sigma_min)), dtype=dtype)
        self.rho.requires_grad = learnable

    @property
    def learnable(self) -> bool:
        return self.rho.requires_grad

    def sigma_tensor(self) -> Tensor:
        return ops.softplus(self.rho) + self.sigma_min

    @property
    def sigma(self) -> float:
        return self.sigma_tensor().item()

    def set_sigma(self, sigma: float) -> None:
        if sigma <= self.sigma_min:
            raise ConfigError(f"sigma {sigma} must exceed sigma_min {self.sigma_min}")
        self.rho.data[...] = inverse_softplus(sigma - self.sigma_min)

    def weights(self) -> Tensor:
        sigma = self.sigma_tensor()
        two_var = ops.scale(ops.square(sigma), 2.0)
        g = ops.exp(ops.div(Tensor(-self._sq_radius), two_var))
        return g / ops.sum(g)

    def forward(self, x: Tensor) -> Tensor:
        return smooth(x, self)


def smooth(x: Tensor, kernel: GaussianKernel) -> Tensor:
    """Depthwise Gaussian smoothing of every [M, N] map in `x` with reflect
    padding, so the output keeps the input shape."""
    if x.ndim < 2:
        raise DimensionError(f"smooth needs at least 2 axes, got shape {x.shape}")
    *lead, m, n = x.shape
    maps = int(np.prod(lead, dtype=np.int64)) if lead else 1
    k = kernel.size
    w = ops.reshape(kernel.weights(), (1, 1, k, k))
    flat = ops.reshape(x, (maps, 1, m, n))
    out = ops.conv2d(ops.pad_reflect(flat, k // 2), w)
    return ops.reshape(out, x.shape)


class SigmaBank(Module):
    """
    The σ parameters of the per-level spectrum losses.

    `shared` holds one kernel per level, applied to both sides of the
    (encoder, complement) pair; `pairwise` holds one kernel for each side.
    """

    def __init__(
        self,
        kernel_sizes: list[int],
        mode: SigmaMode = "shared",
        sigma_init: float = 3.0,
        sigma_min: float = SIGMA_MIN,
        learnable: bool = True,
        dtype: np.dtype | str = "float64",  # type: ignore[type-arg]
    ):
        if mode not in ("shared", "pairwise"):
            raise ConfigError(f"unknown sigma mode {mode!r}")
        self.mode = mode
        per_level = 1 if mode == "shared" else 2
        self.kernels = [
            GaussianKernel(size, sigma_init, sigma_min, dtype=dtype, learnable=learnable)
            for size in kernel_sizes
            for _ in range(per_level)
        ]
        self.levels = len(kernel_sizes)
        self.learnable = learnable

    def __len__(self) -> int:
        return len(self.kernels)

    def pair(self, level: int) -> tuple[GaussianKernel, GaussianKernel]:
        if not 0 <= level < self.levels:
            raise DimensionError(f"sigma bank has {self.levels} levels, asked for {level}")
        if self.mode == "shared":
            k = self.kernels[level]
            return k, k
        return self.kernels[2 * level], self.kernels[2 * level + 1]

    def sigmas(self) -> list[float]:
        return [k.sigma for k in self.kernels]

    def trainable_parameters(self) -> dict[str, Parameter]:
        return self.parameter_dict() if self.learnable else {}
