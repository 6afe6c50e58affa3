"""
Desk-scale image sets with known frequency content, or PGM/PPM ingestion.

Images are float [N, 3, S, S] in [-1, 1], each with a short caption used as
condition text by the prior.
"""
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from favae.core.errors import ConfigError, FormatError
from favae.harness.pnm import read_pnm, resize_nearest, to_model_range
from favae.models import DatasetKind
from favae.spectral.diagnostics import radial_bands

logger = logging.getLogger(__name__)

PAD_TOKEN = "<pad>"
TEXTURE_BANDS = ("low", "mid", "high")


@dataclass
class Vocabulary:
    """Caption words; index = position, index 0 is padding."""

    tokens: list[str] = field(default_factory=lambda: [PAD_TOKEN])

    def __post_init__(self) -> None:
        if not self.tokens or self.tokens[0] != PAD_TOKEN:
            self.tokens = [PAD_TOKEN] + [t for t in self.tokens if t != PAD_TOKEN]
        self._index = {t: i for i, t in enumerate(self.tokens)}

    def __len__(self) -> int:
        return len(self.tokens)

    @classmethod
    def from_captions(cls, captions: list[str]) -> "Vocabulary":
        words = sorted({w for c in captions for w in c.split()})
        return cls([PAD_TOKEN, *words])

    @classmethod
    def read(cls, path: Path) -> "Vocabulary":
        try:
            lines = path.read_text().splitlines()
        except OSError as e:
            raise FormatError(f"cannot read vocabulary {path}: {e}") from e
        return cls([line.strip() for line in lines if line.strip()])

    def write(self, path: Path) -> None:
        path.write_text("\n".join(self.tokens) + "\n")

    def encode(self, caption: str, length: int) -> np.ndarray:
        ids = [self._index[w] for w in caption.split() if w in self._index][:length]
        out = np.zeros(length, dtype=np.int64)
        out[: len(ids)] = ids
        return out

    def encode_all(self, captions: list[str], length: int) -> np.ndarray:
        return np.stack([self.encode(c, length) for c in captions])


@dataclass
class Dataset:
    images: np.ndarray
    captions: list[str]

    def __len__(self) -> int:
        return int(self.images.shape[0])

    def split(self, held_out: int) -> tuple["Dataset", "Dataset"]:
        """Last `held_out` images as a held-out set; a single image serves
        as both."""
        n = len(self)
        k = min(held_out, n - 1)
        if k < 1:
            return self, self
        return (
            Dataset(self.images[: n - k], self.captions[: n - k]),
            Dataset(self.images[n - k :], self.captions[n - k :]),
        )

    def vocabulary(self) -> Vocabulary:
        return Vocabulary.from_captions(self.captions)


def _band_limited_noise(rng: np.random.Generator, size: int, band: int) -> np.ndarray:
    mask = radial_bands(size, size) == band
    noise = rng.normal(size=(3, size, size))
    spectrum = np.fft.fft2(noise) * mask
    img = np.real(np.fft.ifft2(spectrum))
    img /= max(float(img.std()), 1e-12)
    return np.clip(0.35 * img, -1.0, 1.0)


def gaussian_textures(n: int, size: int, seed: int) -> Dataset:
    """Noise confined to the low, mid or high third of the radial spectrum,
    cycling through the three bands."""
    rng = np.random.default_rng(seed)
    images, captions = [], []
    for i in range(n):
        band = i % 3
        images.append(_band_limited_noise(rng, size, band))
        captions.append(f"texture {TEXTURE_BANDS[band]}")
    return Dataset(np.stack(images), captions)


def checker_mix(n: int, size: int, seed: int) -> Dataset:
    """A one-period cosine ramp plus offset (low band) under a period-2
    checkerboard or stripe pattern of random colour (high band)."""
    rng = np.random.default_rng(seed)
    coords = np.arange(size)
    images, captions = [], []
    for _ in range(n):
        axis = int(rng.integers(2))
        phase = rng.uniform(0, 2 * np.pi)
        ramp = rng.uniform(0.15, 0.3) * np.cos(2 * np.pi * coords / size + phase)
        ramp2d = np.broadcast_to(ramp[:, None] if axis == 0 else ramp[None, :], (size, size))
        board = rng.integers(2) == 1
        if board:
            pattern = ((coords[:, None] + coords[None, :]) % 2) * 2.0 - 1.0
        else:
            stripe = (coords % 2) * 2.0 - 1.0
            pattern = np.broadcast_to(
                stripe[:, None] if rng.integers(2) else stripe[None, :], (size, size)
            )
        amplitude = rng.uniform(0.3, 0.4)
        colour = rng.uniform(0.6, 1.0, size=3)
        offset = rng.uniform(-0.2, 0.2)
        img = offset + ramp2d[None] + amplitude * colour[:, None, None] * pattern[None]
        images.append(np.clip(img, -1.0, 1.0))
        captions.append("checker board" if board else "checker stripes")
    return Dataset(np.stack(images), captions)


def load_pnm_dir(path: Path, size: int, n: int | None = None) -> Dataset:
    """Every .pgm/.ppm in `path` (sorted by name), resized to size x size.
    Captions come from a sibling .txt file, else the file stem."""
    if not path.is_dir():
        raise FormatError(f"dataset directory {path} does not exist")
    files = sorted(p for p in path.iterdir() if p.suffix.lower() in (".pgm", ".ppm"))
    if n is not None:
        files = files[:n]
    if not files:
        raise FormatError(f"no PGM/PPM files in {path}")
    images, captions = [], []
    for f in files:
        img = resize_nearest(read_pnm(f), size)
        x = to_model_range(img)
        if x.shape[0] == 1:
            x = np.repeat(x, 3, axis=0)
        images.append(x)
        note = f.with_suffix(".txt")
        captions.append(note.read_text().strip() if note.exists() else f.stem)
    logger.info(f"Loaded {len(files)} images from {path}")
    return Dataset(np.stack(images), captions)


def make_dataset(
    kind: DatasetKind, n: int, size: int, seed: int = 0, path: Path | None = None
) -> Dataset:
    if kind == "gaussian-textures":
        data = gaussian_textures(n, size, seed)
    elif kind == "checker-mix":
        data = checker_mix(n, size, seed)
    elif kind == "tiny-faces-pgm-dir":
        if path is None:
            raise ConfigError("the tiny-faces-pgm-dir dataset needs data.path")
        data = load_pnm_dir(path, size, n)
    else:
        raise ConfigError(f"unknown dataset kind {kind!r}")
    logger.info(f"Dataset {kind}: {len(data)} images of {size}x{size}")
    return data
