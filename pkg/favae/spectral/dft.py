"""
Two-dimensional discrete Fourier transform in matrix form.

F(u, v) = sum_x sum_y f(x, y) exp(-i 2pi (ux/M + vy/N)) is evaluated as
real and imaginary parts of L f R with constant cosine/sine matrices, so
its backward rule is a pair of transposed matrix products. Index (0, 0)
holds the DC component.
"""
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from favae.autograd import ops
from favae.autograd.tensor import Tensor
from favae.core.errors import DimensionError


@lru_cache(maxsize=32)
def _basis(n: int, dtype: str) -> tuple[np.ndarray, np.ndarray]:
    k = np.arange(n)
    angle = 2.0 * np.pi * np.outer(k, k) / n
    cos, sin = np.cos(angle).astype(dtype), np.sin(angle).astype(dtype)
    cos.flags.writeable = False
    sin.flags.writeable = False
    return cos, sin


@dataclass(frozen=True)
class Spectrum:
    real: Tensor
    imag: Tensor

    @property
    def shape(self) -> tuple[int, ...]:
        return self.real.shape

    def power(self) -> Tensor:
        """|F|² per frequency."""
        return ops.square(self.real) + ops.square(self.imag)

    def modulus(self) -> Tensor:
        return ops.modulus(self.real, self.imag)

    def to_complex(self) -> np.ndarray:
        return self.real.data + 1j * self.imag.data

    def centered(self) -> np.ndarray:
        """Complex spectrum with DC moved to the middle; for display only."""
        return center_shift(self.to_complex())


def center_shift(a: np.ndarray) -> np.ndarray:
    return np.fft.fftshift(a, axes=(-2, -1))


def dft2(x: Tensor) -> Spectrum:
    """Unnormalised forward DFT over the last two axes of `x`."""
    if x.ndim < 2:
        raise DimensionError(f"dft2 needs at least 2 axes, got shape {x.shape}")
    m, n = x.shape[-2], x.shape[-1]
    if m < 1 or n < 1:
        raise DimensionError(f"dft2 needs non-empty maps, got shape {x.shape}")
    dtype = str(x.dtype)
    cm, sm = _basis(m, dtype)
    cn, sn = _basis(n, dtype)
    real = ops.bilinear(x, cm, cn) - ops.bilinear(x, sm, sn)
    imag = ops.neg(ops.bilinear(x, sm, cn) + ops.bilinear(x, cm, sn))
    return Spectrum(real=real, imag=imag)
