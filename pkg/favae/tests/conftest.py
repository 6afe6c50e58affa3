from collections.abc import Generator
from pathlib import Path

import numpy as np
import pytest

from favae.core.config import RunConfig
from favae.models import CatSpec, ModelSpec


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def tiny_spec() -> ModelSpec:
    return ModelSpec(
        height=8,
        width=8,
        levels=2,
        channel_ladder=[4, 6],
        n_z=4,
        codebook_size=8,
        dead_code_threshold=0,
    )


@pytest.fixture
def tiny_cat_spec() -> CatSpec:
    return CatSpec(
        layers=2,
        heads=2,
        width=8,
        ff_width=16,
        context_length=4,
        vocab_size=8,
        cond_vocab_size=6,
        cond_width=6,
        max_condition_tokens=3,
    )


@pytest.fixture
def tiny_run_config(tmp_path: Path, tiny_spec: ModelSpec, tiny_cat_spec: CatSpec) -> RunConfig:
    return RunConfig(
        seed=3,
        out_dir=tmp_path / "run",
        model=tiny_spec,
        cat=tiny_cat_spec,
        train={
            "steps": 4,
            "batch_size": 2,
            "log_interval": 2,
            "checkpoint_interval": 2,
            "image_interval": 4,
            "held_out": 2,
            "cat_steps": 3,
            "cat_batch_size": 2,
            "samples_per_caption": 2,
        },
        data={"kind": "checker-mix", "n": 6, "size": 8},
    )


@pytest.fixture(autouse=True)
def _isolated_env(monkeypatch: pytest.MonkeyPatch) -> Generator[None, None, None]:
    for key in ("FAVAE_SEED", "FAVAE_OUT_DIR"):
        monkeypatch.delenv(key, raising=False)
    yield
