from pathlib import Path
from typing import Any, Literal

import numpy as np
from pydantic import Field, ValidationError
from pydantic_settings import (
    BaseSettings,
    PydanticBaseSettingsSource,
    SettingsConfigDict,
    TomlConfigSettingsSource,
)

from favae.core.errors import ConfigError
from favae.models import AblationSpec, CatSpec, DataSpec, ModelSpec, OptimSpec, TrainSpec


class Settings(BaseSettings):
    model_config = SettingsConfigDict(
        env_prefix="FAVAE_",
        env_file=".env",
        env_ignore_empty=True,
        extra="ignore",
    )
    LOG_LEVEL: Literal["DEBUG", "INFO", "WARNING", "ERROR"] = "INFO"
    # reject NaN/Inf right after the forward op that produced it
    CHECK_FINITE: bool = True
    TRAIN_DTYPE: Literal["float32", "float64"] = "float32"
    TEST_DTYPE: Literal["float32", "float64"] = "float64"
    GRADCHECK_TOLERANCE: float = Field(default=1e-4, gt=0)
    GRADCHECK_STEP: float = Field(default=1e-5, gt=0)
    CHECKPOINT_WRITE_RETRIES: int = Field(default=3, ge=1)
    CHECKPOINT_RETRY_WAIT_SECONDS: float = Field(default=0.5, ge=0)

    @property
    def train_dtype(self) -> np.dtype:  # type: ignore[type-arg]
        return np.dtype(self.TRAIN_DTYPE)

    @property
    def test_dtype(self) -> np.dtype:  # type: ignore[type-arg]
        return np.dtype(self.TEST_DTYPE)


settings = Settings()


class RunConfig(BaseSettings):
    """
    Everything one run depends on. Sources, highest priority first: explicit
    keyword arguments (CLI flags), FAVAE_* environment variables with `__`
    between nested keys, the TOML config file, defaults.
    """

    model_config = SettingsConfigDict(
        env_prefix="FAVAE_",
        env_nested_delimiter="__",
        env_ignore_empty=True,
        extra="ignore",
    )

    seed: int = 0
    out_dir: Path = Path("runs/default")
    model: ModelSpec = Field(default_factory=ModelSpec)
    cat: CatSpec = Field(default_factory=CatSpec)
    optim: OptimSpec = Field(default_factory=OptimSpec)
    train: TrainSpec = Field(default_factory=TrainSpec)
    data: DataSpec = Field(default_factory=DataSpec)
    ablation: AblationSpec = Field(default_factory=AblationSpec)

    @classmethod
    def settings_customise_sources(
        cls,
        settings_cls: type[BaseSettings],
        init_settings: PydanticBaseSettingsSource,
        env_settings: PydanticBaseSettingsSource,
        dotenv_settings: PydanticBaseSettingsSource,
        file_secret_settings: PydanticBaseSettingsSource,
    ) -> tuple[PydanticBaseSettingsSource, ...]:
        return init_settings, env_settings, TomlConfigSettingsSource(settings_cls)


def load_run_config(path: Path | None = None, **overrides: Any) -> RunConfig:
    if path is not None and not path.is_file():
        raise ConfigError(f"config file {path} does not exist")

    class _FileRunConfig(RunConfig):
        model_config = SettingsConfigDict(toml_file=path)

    try:
        return _FileRunConfig(**{k: v for k, v in overrides.items() if v is not None})
    except ValidationError as e:
        raise ConfigError(f"invalid configuration: {e}") from e
    except ValueError as e:
        # malformed TOML
        raise ConfigError(f"cannot parse {path}: {e}") from e
