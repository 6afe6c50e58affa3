import numpy as np
import pytest

from favae.autograd.tensor import Tensor
from favae.core.errors import DimensionError
from favae.spectral.diagnostics import (
    band_energy,
    band_energy_error,
    freq_map,
    high_band_fraction,
    radial_bands,
)
from favae.spectral.kernels import GaussianKernel, smooth


def test_constant_image_gives_a_centre_dot() -> None:
    m = freq_map(np.full((3, 8, 8), 0.3))
    assert m[4, 4] == 1.0
    m[4, 4] = 0
    assert np.max(m) < 1e-12


def test_white_noise_is_roughly_flat(rng: np.random.Generator) -> None:
    m = freq_map(rng.normal(size=(3, 32, 32)))
    assert m.min() >= 0 and m.max() <= 1
    assert m.std() < 0.25


def test_smoothing_darkens_the_outer_annulus(rng: np.random.Generator) -> None:
    noise = rng.normal(size=(3, 32, 32))
    blurred = smooth(Tensor(noise), GaussianKernel(5, sigma=2.0)).data
    yy, xx = np.indices((32, 32)) - 16
    outer = np.hypot(yy, xx) > 8
    assert freq_map(blurred)[outer].mean() < freq_map(noise)[outer].mean()


def test_single_channel_mode(rng: np.random.Generator) -> None:
    x = rng.normal(size=(2, 8, 8))
    x[1] = 0.0
    single = freq_map(x, mode="single-channel", channel=1)
    assert np.all(single == 0)
    with pytest.raises(DimensionError):
        freq_map(x, mode="single-channel", channel=2)


def test_radial_bands_layout() -> None:
    bands = radial_bands(8, 8)
    assert bands[0, 0] == -1
    assert bands[0, 1] == 0
    assert bands[4, 4] == 2
    assert set(np.unique(bands)) == {-1, 0, 1, 2}


def test_checkerboard_lives_in_the_high_band() -> None:
    checker = (np.indices((8, 8)).sum(axis=0) % 2) * 2.0 - 1.0
    low, mid, high = band_energy(checker[None])
    assert high > 0 and low == pytest.approx(0.0, abs=1e-9) and mid == pytest.approx(0.0, abs=1e-9)
    assert high_band_fraction(checker[None]) == pytest.approx(1.0)


def test_band_energy_error_is_zero_for_perfect_reconstruction(rng: np.random.Generator) -> None:
    x = rng.normal(size=(2, 3, 8, 8))
    assert band_energy_error(x, x) == (0.0, 0.0, 0.0)


def test_band_energy_error_flags_lost_high_frequencies(rng: np.random.Generator) -> None:
    x = rng.normal(size=(1, 3, 16, 16))
    blurred = smooth(Tensor(x[0]), GaussianKernel(5, sigma=2.0)).data[None]
    low, _, high = band_energy_error(x, blurred)
    assert high > low
