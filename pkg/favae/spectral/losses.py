"""
Frequency-domain losses: focal frequency loss, spectrum loss (FFL of
Gaussian-smoothed maps) and its per-level sum over encoder/complement pairs.
"""
from collections.abc import Sequence

import numpy as np

from favae.autograd import ops
from favae.autograd.tensor import Tensor
from favae.core.errors import DimensionError
from favae.models import SpectralLossMode
from favae.spectral.dft import dft2
from favae.spectral.kernels import GaussianKernel, SigmaBank, smooth


def ffl(
    a: Tensor,
    c: Tensor,
    differentiate_weight: bool = False,
    normalize_weight: bool = False,
) -> Tensor:
    """
    Focal frequency loss: mean over every map and frequency of w·|ΔF|², with
    ΔF the spectrum of a - c and w = |ΔF|.

    w is a constant modulating factor unless `differentiate_weight` is set.
    With `normalize_weight`, w is divided by its (detached) per-map maximum.
    Leading axes are all treated as independent maps.
    """
    if a.shape != c.shape:
        raise DimensionError(f"ffl: shapes {a.shape} and {c.shape} differ")
    spec = dft2(a - c)
    power = spec.power()
    if differentiate_weight:
        weight = spec.modulus()
    else:
        weight = Tensor(np.sqrt(power.data), dtype=power.dtype)
    if normalize_weight:
        peak = np.sqrt(power.data).max(axis=(-2, -1), keepdims=True)
        inv = np.broadcast_to(1.0 / np.where(peak > 0, peak, 1.0), power.shape)
        weight = weight * Tensor(inv, dtype=power.dtype)
    return ops.mean(weight * power)


def spectrum_loss(
    a: Tensor,
    c: Tensor,
    kernel: GaussianKernel,
    kernel_c: GaussianKernel | None = None,
    differentiate_weight: bool = False,
    normalize_weight: bool = False,
) -> Tensor:
    """FFL between the Gaussian-smoothed maps. `kernel_c`, when given,
    smooths `c` with its own σ."""
    if a.shape != c.shape:
        raise DimensionError(f"spectrum_loss: shapes {a.shape} and {c.shape} differ")
    a_hat = smooth(a, kernel)
    c_hat = smooth(c, kernel if kernel_c is None else kernel_c)
    return ffl(a_hat, c_hat, differentiate_weight, normalize_weight)


def feature_loss_terms(
    pairs: Sequence[tuple[Tensor, Tensor]],
    bank: SigmaBank | None,
    mode: SpectralLossMode = "dsl",
    differentiate_weight: bool = False,
    normalize_weight: bool = False,
) -> list[Tensor]:
    """One loss per (encoder activation, complement) pair.

    `ffl` compares raw maps, `sl` and `dsl` compare smoothed maps (they
    differ only in whether the bank's σ is optimised), `none` yields no
    terms.
    """
    if mode == "none":
        return []
    flags = {"differentiate_weight": differentiate_weight, "normalize_weight": normalize_weight}
    if mode == "ffl":
        return [ffl(a, c, **flags) for a, c in pairs]
    if bank is None or bank.levels != len(pairs):
        have = 0 if bank is None else bank.levels
        raise DimensionError(f"sigma bank covers {have} levels, got {len(pairs)} pairs")
    terms = []
    for level, (a, c) in enumerate(pairs):
        ka, kc = bank.pair(level)
        terms.append(spectrum_loss(a, c, ka, kc, **flags))
    return terms


def dsl_total(
    pairs: Sequence[tuple[Tensor, Tensor]],
    bank: SigmaBank,
    differentiate_weight: bool = False,
    normalize_weight: bool = False,
) -> Tensor:
    terms = feature_loss_terms(
        pairs,
        bank,
        "dsl",
        differentiate_weight=differentiate_weight,
        normalize_weight=normalize_weight,
    )
    total = Tensor(0.0, dtype=terms[0].dtype if terms else None)
    for term in terms:
        total = total + term
    return total
