import numpy as np

from favae.autograd.tensor import Tensor
from favae.spectral.dft import dft2
from favae.tests.utils.oracles import naive_dft2


def test_constant_image_is_dc_only() -> None:
    spec = dft2(Tensor(np.full((1, 4, 4), 0.5))).to_complex()
    assert spec[0, 0, 0] == 8.0
    rest = spec.copy()
    rest[0, 0, 0] = 0
    assert np.max(np.abs(rest)) < 1e-12


def test_single_cosine_concentrates_at_its_frequency() -> None:
    m = 8
    x = np.cos(2 * np.pi * np.arange(m) / m)[:, None] * np.ones((m, m))
    mag = np.abs(dft2(Tensor(x[None])).to_complex()[0])
    peaks = {(1, 0), (m - 1, 0)}
    for u in range(m):
        for v in range(m):
            if (u, v) in peaks:
                assert mag[u, v] > 1.0
            else:
                assert mag[u, v] < 1e-9


def test_matches_naive_oracle(rng: np.random.Generator) -> None:
    for _ in range(30):
        m, n = (int(s) for s in rng.integers(1, 9, size=2))
        x = rng.normal(size=(m, n))
        ours = dft2(Tensor(x[None])).to_complex()[0]
        assert np.max(np.abs(ours - naive_dft2(x))) < 1e-9


def test_parseval_and_conjugate_symmetry(rng: np.random.Generator) -> None:
    x = rng.normal(size=(2, 6, 5))
    f = dft2(Tensor(x)).to_complex()
    m, n = x.shape[-2:]
    energy = float((x**2).sum())
    assert abs(energy - float((np.abs(f) ** 2).sum()) / (m * n)) / energy < 1e-9
    mirror = np.conj(f[:, (-np.arange(m)) % m][:, :, (-np.arange(n)) % n])
    assert np.max(np.abs(f - mirror)) < 1e-9


def test_linearity(rng: np.random.Generator) -> None:
    x, y = rng.normal(size=(1, 5, 5)), rng.normal(size=(1, 5, 5))
    lhs = dft2(Tensor(2.0 * x - 0.5 * y)).to_complex()
    rhs = 2.0 * dft2(Tensor(x)).to_complex() - 0.5 * dft2(Tensor(y)).to_complex()
    assert np.max(np.abs(lhs - rhs)) / np.max(np.abs(rhs)) < 1e-10


def test_matches_numpy_fft_on_a_batch(rng: np.random.Generator) -> None:
    x = rng.normal(size=(2, 3, 8, 8))
    assert np.allclose(dft2(Tensor(x)).to_complex(), np.fft.fft2(x), atol=1e-9)


def test_centered_view_moves_dc_to_the_middle() -> None:
    spec = dft2(Tensor(np.ones((1, 4, 4))))
    centered = spec.centered()
    assert abs(centered[0, 2, 2]) == 16.0
