from favae.spectral.dft import Spectrum, center_shift, dft2
from favae.spectral.diagnostics import (
    band_energy,
    band_energy_error,
    freq_map,
    high_band_fraction,
    radial_bands,
)
from favae.spectral.kernels import GaussianKernel, SigmaBank, smooth
from favae.spectral.losses import dsl_total, feature_loss_terms, ffl, spectrum_loss

__all__ = [
    "GaussianKernel",
    "SigmaBank",
    "Spectrum",
    "band_energy",
    "band_energy_error",
    "center_shift",
    "dft2",
    "dsl_total",
    "feature_loss_terms",
    "ffl",
    "freq_map",
    "high_band_fraction",
    "radial_bands",
    "smooth",
    "spectrum_loss",
]
