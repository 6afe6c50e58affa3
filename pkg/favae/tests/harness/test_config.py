from pathlib import Path

import pytest

from favae.core.config import load_run_config
from favae.core.errors import ConfigError

TOML = """
seed = 7
out_dir = "runs/toml"

[model]
height = 16
width = 16
levels = 2

[train]
steps = 5
batch_size = 3
"""


@pytest.fixture
def config_file(tmp_path: Path) -> Path:
    path = tmp_path / "run.toml"
    path.write_text(TOML)
    return path


def test_defaults() -> None:
    cfg = load_run_config()
    assert cfg.seed == 0
    assert cfg.model.levels == 3
    assert cfg.model.channel_ladder == [32, 64, 64]
    assert cfg.model.fcm_variants == ["conv"] * 3


def test_reads_toml(config_file: Path) -> None:
    cfg = load_run_config(config_file)
    assert cfg.seed == 7
    assert cfg.out_dir == Path("runs/toml")
    assert cfg.model.height == 16
    assert cfg.model.kernel_sizes == [3, 3]
    assert cfg.train.steps == 5
    assert cfg.train.batch_size == 3


def test_environment_beats_file(config_file: Path, monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.setenv("FAVAE_SEED", "11")
    monkeypatch.setenv("FAVAE_TRAIN__STEPS", "9")
    cfg = load_run_config(config_file)
    assert cfg.seed == 11
    assert cfg.train.steps == 9
    assert cfg.train.batch_size == 3


def test_explicit_overrides_beat_environment(
    config_file: Path, monkeypatch: pytest.MonkeyPatch
) -> None:
    monkeypatch.setenv("FAVAE_SEED", "11")
    cfg = load_run_config(config_file, seed=2, out_dir=None, train={"steps": 1})
    assert cfg.seed == 2
    assert cfg.out_dir == Path("runs/toml")
    assert cfg.train.steps == 1
    assert cfg.train.batch_size == 3


def test_missing_file(tmp_path: Path) -> None:
    with pytest.raises(ConfigError, match="does not exist"):
        load_run_config(tmp_path / "absent.toml")


@pytest.mark.parametrize(
    "text",
    [
        "[model]\nlevels = 0\n",
        "[model]\nheight = 10\nlevels = 3\n",
        "[model]\nchannel_ladder = [4]\nlevels = 2\n",
        "[train]\nsteps = -1\n",
        "seed = [unclosed\n",
    ],
)
def test_invalid_files(tmp_path: Path, text: str) -> None:
    path = tmp_path / "bad.toml"
    path.write_text(text)
    with pytest.raises(ConfigError):
        load_run_config(path)


@pytest.mark.parametrize("name", ["checker_mix.toml", "ablation.toml"])
def test_shipped_configs_load(name: str) -> None:
    path = Path(__file__).parents[3] / "configs" / name
    cfg = load_run_config(path)
    assert cfg.data.size == cfg.model.height
    assert cfg.model.height % cfg.model.downsample_factor == 0
