import hashlib
from pathlib import Path
from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, Field, model_validator
from typing_extensions import Self

FcmVariant = Literal["conv", "conv_residual", "conv_attention", "none"]
SpectralLossMode = Literal["none", "ffl", "sl", "dsl"]
SigmaMode = Literal["shared", "pairwise"]
CodebookMode = Literal["ema", "gradient"]
DatasetKind = Literal["gaussian-textures", "checker-mix", "tiny-faces-pgm-dir"]


# Architecture and loss description of one FA-VAE
class ModelSpec(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    height: int = Field(default=32, ge=1)
    width: int = Field(default=32, ge=1)
    in_channels: int = Field(default=3, ge=1)
    levels: int = Field(default=3, ge=1)
    channel_ladder: list[int] = Field(default_factory=list)
    n_z: int = Field(default=16, ge=1)
    codebook_size: int = Field(default=64, ge=1)
    fcm_variants: list[FcmVariant] = Field(default_factory=list)
    fcm_merge: Literal["add"] = "add"

    alpha: float = Field(default=1.0, ge=0)
    beta: float = Field(default=1.0, ge=0)
    image_ffl: bool = True
    spectral_loss: SpectralLossMode = "dsl"
    sigma_mode: SigmaMode = "shared"
    kernel_sizes: list[int] = Field(default_factory=list)
    sigma_init: float = Field(default=3.0, gt=0)
    sigma_min: float = Field(default=0.3, gt=0)
    ffl_differentiate_weight: bool = False
    ffl_normalize_weight: bool = False
    detach_encoder_targets: bool = False

    codebook_mode: CodebookMode = "ema"
    l2_normalize_codebook: bool = True
    ema_decay: float = Field(default=0.99, ge=0, lt=1)
    ema_eps: float = Field(default=1e-5, gt=0)
    commitment: float = Field(default=0.25, ge=0)
    dead_code_threshold: int = Field(default=256, ge=0)

    @model_validator(mode="before")
    @classmethod
    def _fill_per_level_defaults(cls, data: Any) -> Any:
        if not isinstance(data, dict):
            return data
        data = dict(data)
        levels = int(data.get("levels", 3))
        if not data.get("channel_ladder"):
            data["channel_ladder"] = [min(32 * 2**i, 64) for i in range(levels)]
        if not data.get("fcm_variants"):
            data["fcm_variants"] = ["conv"] * levels
        if not data.get("kernel_sizes"):
            data["kernel_sizes"] = [3] * levels
        return data

    @model_validator(mode="after")
    def _check_ladder(self) -> Self:
        f = self.downsample_factor
        if self.height % f or self.width % f:
            raise ValueError(
                f"image size {self.height}x{self.width} is not divisible by 2^(levels-1) = {f}"
            )
        for name in ("channel_ladder", "fcm_variants", "kernel_sizes"):
            if len(getattr(self, name)) != self.levels:
                raise ValueError(f"{name} must have one entry per level ({self.levels})")
        if any(c < 1 for c in self.channel_ladder):
            raise ValueError("channel_ladder entries must be positive")
        if any(k < 1 or k % 2 == 0 for k in self.kernel_sizes):
            raise ValueError("kernel sizes must be odd positive integers")
        if self.sigma_init <= self.sigma_min:
            raise ValueError("sigma_init must exceed sigma_min")
        return self

    @property
    def downsample_factor(self) -> int:
        return int(2 ** (self.levels - 1))

    @property
    def latent_height(self) -> int:
        return self.height // self.downsample_factor

    @property
    def latent_width(self) -> int:
        return self.width // self.downsample_factor

    @property
    def fcm_levels(self) -> list[int]:
        """0-based indices of the levels that carry an FCM."""
        return [i for i, v in enumerate(self.fcm_variants) if v != "none"]

    def digest(self) -> bytes:
        return hashlib.sha256(self.model_dump_json().encode()).digest()


# Toy cross-attention autoregressive prior
class CatSpec(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    layers: int = Field(default=4, ge=1)
    heads: int = Field(default=4, ge=1)
    width: int = Field(default=128, ge=1)
    ff_width: int = Field(default=512, ge=1)
    context_length: int = Field(default=64, ge=1)
    vocab_size: int = Field(default=64, ge=1)
    cond_vocab_size: int = Field(default=64, ge=2)
    cond_width: int = Field(default=128, ge=1)
    max_condition_tokens: int = Field(default=8, ge=1)

    @model_validator(mode="after")
    def _check_heads(self) -> Self:
        if self.width % self.heads:
            raise ValueError(f"width {self.width} is not divisible by {self.heads} heads")
        return self

    def digest(self) -> bytes:
        return hashlib.sha256(self.model_dump_json().encode()).digest()


class OptimSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    lr: float = Field(default=2e-3, ge=0)
    cat_lr: float = Field(default=1e-3, ge=0)
    beta1: float = Field(default=0.9, ge=0, lt=1)
    beta2: float = Field(default=0.999, ge=0, lt=1)
    eps: float = Field(default=1e-8, gt=0)
    grad_clip: float | None = Field(default=1.0, gt=0)


class TrainSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    steps: int = Field(default=3000, ge=0)
    batch_size: int = Field(default=8, ge=1)
    log_interval: int = Field(default=50, ge=1)
    checkpoint_interval: int = Field(default=500, ge=1)
    image_interval: int = Field(default=500, ge=1)
    held_out: int = Field(default=8, ge=1)
    smoothing_window: int = Field(default=50, ge=1)
    cat_steps: int = Field(default=2000, ge=0)
    cat_batch_size: int = Field(default=16, ge=1)
    sample_temperature: float = Field(default=1.0, gt=0)
    sample_top_k: int | None = Field(default=None, ge=1)
    samples_per_caption: int = Field(default=4, ge=1)


class DataSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: DatasetKind = "checker-mix"
    n: int = Field(default=64, ge=1)
    size: int = Field(default=32, ge=1)
    path: Path | None = None
    vocab_path: Path | None = None


class AblationSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    variants: list[FcmVariant] = Field(default_factory=lambda: ["none", "conv"])
    spectral_losses: list[SpectralLossMode] = Field(default_factory=lambda: ["dsl"])
    kernel_sizes: list[int] = Field(default_factory=lambda: [3])
    sigma_modes: list[SigmaMode] = Field(default_factory=lambda: ["shared"])
    # empty: the run seed only
    seeds: list[int] = Field(default_factory=list)
    steps: int = Field(default=300, ge=1)


class MetricsRow(BaseModel):
    step: int
    loss: float
    l1: float
    ffl: float
    dsl: list[float] = Field(default_factory=list)
    l_q: float
    perplexity: float
    sigma: list[float] = Field(default_factory=list)
    psnr: float | None = None
    band_err_low: float | None = None
    band_err_mid: float | None = None
    band_err_high: float | None = None
    grad_norm: float = 0.0

    @staticmethod
    def header(n_dsl: int, n_sigma: int) -> list[str]:
        return (
            ["step", "loss", "l1", "ffl"]
            + [f"dsl_{i}" for i in range(n_dsl)]
            + ["l_q", "perplexity"]
            + [f"sigma_{i}" for i in range(n_sigma)]
            + ["psnr", "band_err_low", "band_err_mid", "band_err_high", "grad_norm"]
        )

    def csv_values(self) -> list[str]:
        def fmt(v: float | None) -> str:
            return "" if v is None else repr(float(v))

        return (
            [str(self.step), fmt(self.loss), fmt(self.l1), fmt(self.ffl)]
            + [fmt(v) for v in self.dsl]
            + [fmt(self.l_q), fmt(self.perplexity)]
            + [fmt(v) for v in self.sigma]
            + [
                fmt(self.psnr),
                fmt(self.band_err_low),
                fmt(self.band_err_mid),
                fmt(self.band_err_high),
                fmt(self.grad_norm),
            ]
        )


class NanDump(BaseModel):
    step: int
    message: str
    last_metrics: MetricsRow | None = None
    parameter_norms: dict[str, float] = Field(default_factory=dict)
    sigma: list[float] = Field(default_factory=list)
