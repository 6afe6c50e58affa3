from pathlib import Path

import numpy as np
import pytest

from favae.core.errors import ConfigError, FormatError
from favae.harness.datasets import (
    PAD_TOKEN,
    Vocabulary,
    checker_mix,
    gaussian_textures,
    load_pnm_dir,
    make_dataset,
)
from favae.harness.pnm import write_pnm
from favae.spectral.diagnostics import band_energy, high_band_fraction


def test_checker_mix_is_deterministic_and_high_frequency() -> None:
    a, b = checker_mix(6, 8, seed=4), checker_mix(6, 8, seed=4)
    assert a.images.shape == (6, 3, 8, 8)
    assert np.array_equal(a.images, b.images)
    assert not np.array_equal(a.images, checker_mix(6, 8, seed=5).images)
    assert a.images.min() >= -1.0
    assert a.images.max() <= 1.0
    assert set(a.captions) <= {"checker board", "checker stripes"}
    for img in a.images:
        assert high_band_fraction(img) > 0.3


def test_gaussian_textures_occupy_their_band() -> None:
    data = gaussian_textures(6, 16, seed=2)
    assert data.captions[:3] == ["texture low", "texture mid", "texture high"]
    for i, img in enumerate(data.images):
        energy = np.array(band_energy(img))
        assert energy[i % 3] / energy.sum() > 0.8


def test_split_keeps_tail_as_held_out() -> None:
    data = checker_mix(6, 8, seed=0)
    train, held = data.split(2)
    assert len(train) == 4
    assert len(held) == 2
    assert np.array_equal(held.images, data.images[4:])
    single = checker_mix(1, 8, seed=0)
    a, b = single.split(3)
    assert a is single
    assert b is single


def test_vocabulary(tmp_path: Path) -> None:
    vocab = Vocabulary.from_captions(["checker board", "texture low"])
    assert vocab.tokens == [PAD_TOKEN, "board", "checker", "low", "texture"]
    assert vocab.encode("checker board unknown", 4).tolist() == [2, 1, 0, 0]
    assert vocab.encode("texture low checker", 2).tolist() == [4, 3]
    assert vocab.encode_all(["low", "board"], 2).tolist() == [[3, 0], [1, 0]]
    vocab.write(tmp_path / "vocab.txt")
    assert Vocabulary.read(tmp_path / "vocab.txt").tokens == vocab.tokens
    assert Vocabulary(["a", "b"]).tokens == [PAD_TOKEN, "a", "b"]
    with pytest.raises(FormatError):
        Vocabulary.read(tmp_path / "absent.txt")


def test_loads_pnm_directory(tmp_path: Path) -> None:
    write_pnm(tmp_path / "b_face.pgm", np.full((4, 4), 255, dtype=np.uint8))
    write_pnm(tmp_path / "a_face.ppm", np.zeros((2, 2, 3), dtype=np.uint8))
    (tmp_path / "a_face.txt").write_text("dark face\n")
    (tmp_path / "notes.md").write_text("ignored")
    data = load_pnm_dir(tmp_path, size=8)
    assert data.images.shape == (2, 3, 8, 8)
    assert data.captions == ["dark face", "b_face"]
    assert np.all(data.images[0] == -1.0)
    assert np.all(data.images[1] == 1.0)
    assert len(load_pnm_dir(tmp_path, size=8, n=1)) == 1


def test_dataset_errors(tmp_path: Path) -> None:
    with pytest.raises(ConfigError):
        make_dataset("tiny-faces-pgm-dir", 4, 8)
    with pytest.raises(FormatError):
        load_pnm_dir(tmp_path / "absent", size=8)
    with pytest.raises(FormatError):
        load_pnm_dir(tmp_path, size=8)
