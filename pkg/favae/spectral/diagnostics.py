from typing import Literal

import numpy as np

from favae.autograd.tensor import Tensor, no_grad
from favae.core.errors import DimensionError
from favae.spectral.dft import center_shift, dft2

FreqMapMode = Literal["mean-channel", "single-channel"]
BAND_EDGES = (1.0 / 3.0, 2.0 / 3.0)


def _magnitude(x: Tensor | np.ndarray) -> np.ndarray:
    t = x if isinstance(x, Tensor) else Tensor(np.asarray(x, dtype=np.float64))
    with no_grad():
        return dft2(t).modulus().data


def freq_map(
    x: Tensor | np.ndarray, mode: FreqMapMode = "mean-channel", channel: int = 0
) -> np.ndarray:
    """
    Log-magnitude spectrum of a [C, M, N] map, DC in the centre, scaled to
    [0, 1]. `mean-channel` averages the per-channel magnitudes.
    """
    mag = _magnitude(x)
    if mag.ndim != 3:
        raise DimensionError(f"freq_map expects [C, M, N], got shape {mag.shape}")
    if mode == "mean-channel":
        m = mag.mean(axis=0)
    else:
        if not 0 <= channel < mag.shape[0]:
            raise DimensionError(f"channel {channel} outside [0, {mag.shape[0]})")
        m = mag[channel]
    m = center_shift(np.log1p(m))
    lo, hi = float(m.min()), float(m.max())
    if hi - lo <= 0:
        return np.zeros_like(m)
    return (m - lo) / (hi - lo)


def radial_bands(m: int, n: int) -> np.ndarray:
    """Band index (0 low, 1 mid, 2 high) per frequency in DFT order, -1 at DC.

    The radius is normalised so the Nyquist corner sits at 1.
    """
    u = np.fft.fftfreq(m) * m
    v = np.fft.fftfreq(n) * n
    corner = np.hypot(m / 2.0, n / 2.0)
    r = np.hypot(u[:, None], v[None, :]) / corner
    bands = np.digitize(r, BAND_EDGES)
    bands[0, 0] = -1
    return bands


def band_energy(x: Tensor | np.ndarray) -> tuple[float, float, float]:
    """Summed channel-mean DFT magnitude in the low, mid and high thirds of
    the radial spectrum of a [C, M, N] map."""
    mag = _magnitude(x)
    if mag.ndim != 3:
        raise DimensionError(f"band_energy expects [C, M, N], got shape {mag.shape}")
    m = mag.mean(axis=0)
    bands = radial_bands(*m.shape)
    low, mid, high = (float(m[bands == b].sum()) for b in range(3))
    return low, mid, high


def high_band_fraction(x: Tensor | np.ndarray) -> float:
    low, mid, high = band_energy(x)
    total = low + mid + high
    return high / total if total > 0 else 0.0


def band_energy_error(
    x: np.ndarray, x_hat: np.ndarray, eps: float = 1e-8
) -> tuple[float, float, float]:
    """Relative per-band energy error |E(x) - E(x_hat)| / E(x), averaged
    over a [B, C, M, N] batch."""
    if x.shape != x_hat.shape or x.ndim != 4:
        raise DimensionError(f"band_energy_error: shapes {x.shape} and {x_hat.shape}")
    errs = np.zeros(3)
    for a, b in zip(x, x_hat, strict=True):
        ea, eb = np.array(band_energy(a)), np.array(band_energy(b))
        errs += np.abs(ea - eb) / np.maximum(ea, eps)
    low, mid, high = (float(e) for e in errs / x.shape[0])
    return low, mid, high
