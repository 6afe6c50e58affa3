from pathlib import Path

import numpy as np
import pytest

from favae.autograd import ops
from favae.cli import main
from favae.harness.pnm import read_pnm, write_pnm

TINY_TOML = """
seed = 1

[model]
height = 8
width = 8
levels = 2
channel_ladder = [4, 6]
n_z = 4
codebook_size = 8
dead_code_threshold = 0

[cat]
layers = 1
heads = 2
width = 8
ff_width = 16
context_length = 16
vocab_size = 8
cond_vocab_size = 6
cond_width = 6
max_condition_tokens = 3

[train]
batch_size = 2
log_interval = 1
checkpoint_interval = 2
image_interval = 2
held_out = 2
cat_batch_size = 2
samples_per_caption = 1

[data]
kind = "checker-mix"
n = 4
size = 8
"""


@pytest.fixture
def config(tmp_path: Path) -> Path:
    path = tmp_path / "tiny.toml"
    path.write_text(TINY_TOML)
    return path


def test_gradcheck_passes(capsys: pytest.CaptureFixture[str]) -> None:
    assert main(["gradcheck", "--scope", "spectral"]) == 0
    out = capsys.readouterr().out
    assert "spectral.ffl[1x4x4]" in out
    assert "FAIL" not in out


def test_gradcheck_catches_a_broken_backward(
    monkeypatch: pytest.MonkeyPatch, capsys: pytest.CaptureFixture[str]
) -> None:
    original = ops.Bilinear.backward

    def skewed(self: ops.Bilinear, grad: np.ndarray) -> tuple[np.ndarray | None, ...]:
        return tuple(None if g is None else 1.5 * g for g in original(self, grad))

    monkeypatch.setattr(ops.Bilinear, "backward", skewed)
    assert main(["gradcheck", "--scope", "spectral"]) == 2
    out = capsys.readouterr().out
    assert "spectral.dft2" in out
    assert "FAIL" in out


def test_usage_errors_exit_1(tmp_path: Path) -> None:
    assert main(["gradcheck", "--scope", "everything"]) == 1
    assert main(["train", "--config", str(tmp_path / "absent.toml")]) == 1
    assert main(["no-such-command"]) == 1


def test_invalid_config_exits_1(tmp_path: Path) -> None:
    path = tmp_path / "bad.toml"
    path.write_text("[model]\nlevels = 0\n")
    assert main(["train", "--config", str(path)]) == 1


def test_missing_files_exit_3(tmp_path: Path) -> None:
    assert main(["freqmap", "--image", str(tmp_path / "absent.ppm"), "--out", str(tmp_path)]) == 3
    assert (
        main(
            [
                "reconstruct",
                "--checkpoint",
                str(tmp_path / "absent.fava"),
                "--image",
                str(tmp_path / "absent.ppm"),
                "--out",
                str(tmp_path),
            ]
        )
        == 3
    )


def test_train_then_use_checkpoint(config: Path, tmp_path: Path, rng: np.random.Generator) -> None:
    out = tmp_path / "run"
    assert main(["train", "--config", str(config), "--out", str(out), "--steps", "2", "--quiet"]) == 0
    ckpt = out / "checkpoint.fava"
    assert ckpt.is_file()
    assert (out / "tiny.toml").read_text() == TINY_TOML

    assert (
        main(
            [
                "train",
                "--config",
                str(config),
                "--out",
                str(out),
                "--steps",
                "3",
                "--checkpoint",
                str(ckpt),
                "--quiet",
            ]
        )
        == 0
    )

    cat_out = tmp_path / "cat"
    args = ["train-cat", "--checkpoint", str(ckpt), "--config", str(config)]
    assert main([*args, "--out", str(cat_out), "--steps", "2", "--quiet"]) == 0
    assert (cat_out / "checkpoint.fcat").is_file()

    image = tmp_path / "face.pgm"
    write_pnm(image, rng.integers(0, 256, size=(8, 8), dtype=np.uint8))
    recon = tmp_path / "recon"
    assert main(["reconstruct", "--checkpoint", str(ckpt), "--image", str(image), "--out", str(recon)]) == 0
    assert read_pnm(recon / "face_recon.pgm").shape == (8, 8)
    maps = tmp_path / "maps"
    assert main(["freqmap", "--image", str(image), "--out", str(maps), "--checkpoint", str(ckpt)]) == 0
    assert (maps / "face_C1.pgm").is_file()


def test_ablate(config: Path, tmp_path: Path) -> None:
    out = tmp_path / "ablation"
    assert main(["ablate", "--config", str(config), "--out", str(out), "--steps", "1"]) == 0
    assert (out / "ablation.csv").read_text().count("\n") == 3


@pytest.mark.slow
def test_checker_mix_training_improves_reconstruction(tmp_path: Path) -> None:
    config = tmp_path / "desk.toml"
    config.write_text(
        "[model]\nheight = 16\nwidth = 16\nlevels = 2\nchannel_ladder = [16, 32]\n"
        "n_z = 8\ncodebook_size = 32\n\n[train]\nlog_interval = 50\nheld_out = 4\n\n"
        '[data]\nkind = "checker-mix"\nn = 32\nsize = 16\n'
    )
    before, after = tmp_path / "before", tmp_path / "after"
    assert main(["train", "--config", str(config), "--out", str(before), "--steps", "1", "--quiet"]) == 0
    assert main(["train", "--config", str(config), "--out", str(after), "--steps", "300", "--quiet"]) == 0
    psnr_before = float((before / "metrics.csv").read_text().splitlines()[-1].split(",")[-5])
    psnr_after = float((after / "metrics.csv").read_text().splitlines()[-1].split(",")[-5])
    assert psnr_after > psnr_before
