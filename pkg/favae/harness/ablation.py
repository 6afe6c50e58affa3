"""
Short training runs over a grid of FCM variant, spectral loss mode, kernel
size and sigma mode, repeated over seeds and summarised per configuration.
"""
import csv
import itertools
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from pydantic import ValidationError

from favae.core.config import RunConfig
from favae.core.errors import ConfigError
from favae.harness.runs import TrainSummary, cmd_train_favae, prepare_run_dir
from favae.models import FcmVariant, ModelSpec, SigmaMode, SpectralLossMode

logger = logging.getLogger(__name__)

ABLATION_COLUMNS = [
    "name",
    "seed",
    "variant",
    "spectral_loss",
    "kernel_size",
    "sigma_mode",
    "final_l1",
    "psnr",
    "band_err_high",
]
SUMMARY_COLUMNS = [
    "name",
    "seeds",
    "mean_final_l1",
    "mean_psnr",
    "mean_band_err_high",
    "l1_wins",
    "band_err_high_wins",
]


@dataclass(frozen=True)
class AblationPoint:
    variant: FcmVariant
    spectral_loss: SpectralLossMode
    kernel_size: int
    sigma_mode: SigmaMode

    @property
    def name(self) -> str:
        return f"{self.variant}-{self.spectral_loss}-k{self.kernel_size}-{self.sigma_mode}"

    def model_spec(self, base: ModelSpec) -> ModelSpec:
        levels = base.levels
        try:
            return ModelSpec.model_validate(
                {
                    **base.model_dump(),
                    "fcm_variants": [self.variant] * levels,
                    "kernel_sizes": [self.kernel_size] * levels,
                    "spectral_loss": self.spectral_loss,
                    "sigma_mode": self.sigma_mode,
                }
            )
        except ValidationError as e:
            raise ConfigError(f"ablation point {self.name}: {e}") from e


def ablation_grid(cfg: RunConfig) -> list[AblationPoint]:
    """Every combination of the configured axes, with combinations that
    cannot differ collapsed: without FCMs there is no feature loss, and
    without smoothing neither kernel size nor sigma mode matters."""
    a = cfg.ablation
    base = cfg.model
    points: list[AblationPoint] = []
    for variant, loss, k, mode in itertools.product(
        a.variants, a.spectral_losses, a.kernel_sizes, a.sigma_modes
    ):
        if variant == "none":
            loss = "none"
        if loss in ("none", "ffl"):
            k, mode = base.kernel_sizes[0], base.sigma_mode
        point = AblationPoint(variant, loss, k, mode)
        if point not in points:
            points.append(point)
    return points


@dataclass(frozen=True)
class AblationResult:
    point: AblationPoint
    seed: int
    final_l1: float
    psnr: float
    band_err_high: float

    def csv_values(self) -> list[str]:
        p = self.point
        return [
            p.name,
            str(self.seed),
            p.variant,
            p.spectral_loss,
            str(p.kernel_size),
            p.sigma_mode,
            repr(self.final_l1),
            repr(self.psnr),
            repr(self.band_err_high),
        ]


def summarize(results: list[AblationResult]) -> list[list[str]]:
    """One row per point: means over seeds, and against the FCM-free point
    the number of seeds where the point reached a lower smoothed L1 (or an
    equal one) and a strictly lower high-band energy error."""
    by_point: dict[AblationPoint, dict[int, AblationResult]] = {}
    for r in results:
        by_point.setdefault(r.point, {})[r.seed] = r
    baseline = next((runs for p, runs in by_point.items() if p.variant == "none"), None)
    rows = []
    for point, runs in by_point.items():
        seeds = sorted(runs)
        l1_wins = band_wins = ""
        if baseline is not None and point.variant != "none":
            paired = [s for s in seeds if s in baseline]
            l1_wins = str(sum(runs[s].final_l1 <= baseline[s].final_l1 for s in paired))
            band_wins = str(sum(runs[s].band_err_high < baseline[s].band_err_high for s in paired))
        rows.append(
            [
                point.name,
                " ".join(map(str, seeds)),
                repr(float(np.mean([runs[s].final_l1 for s in seeds]))),
                repr(float(np.mean([runs[s].psnr for s in seeds]))),
                repr(float(np.mean([runs[s].band_err_high for s in seeds]))),
                l1_wins,
                band_wins,
            ]
        )
    return rows


def cmd_ablate(
    cfg: RunConfig,
    config_path: Path | None = None,
    steps: int | None = None,
    quiet: bool = True,
) -> Path:
    """Train every grid point once per seed. Writes `ablation.csv` with one
    row per run and `ablation_summary.csv` with one row per point."""
    out = prepare_run_dir(cfg, config_path)
    n_steps = steps if steps is not None else cfg.ablation.steps
    seeds = cfg.ablation.seeds or [cfg.seed]
    points = ablation_grid(cfg)
    logger.info(
        f"Ablation over {len(points)} configurations x {len(seeds)} seeds, {n_steps} steps each"
    )
    # specs are validated up front so a bad axis fails before any training
    specs = [p.model_spec(cfg.model) for p in points]

    report = out / "ablation.csv"
    results: list[AblationResult] = []
    with report.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(ABLATION_COLUMNS)
        for point, spec in zip(points, specs, strict=True):
            for seed in seeds:
                run_dir = out / point.name if len(seeds) == 1 else out / point.name / f"seed_{seed}"
                run_cfg = cfg.model_copy(
                    update={
                        "seed": seed,
                        "model": spec,
                        "train": cfg.train.model_copy(update={"steps": n_steps}),
                        "out_dir": run_dir,
                    }
                )
                summary: TrainSummary = cmd_train_favae(run_cfg, quiet=quiet)
                result = AblationResult(point, seed, summary.final_l1, summary.psnr, summary.band_error[2])
                results.append(result)
                writer.writerow(result.csv_values())
                fh.flush()
                logger.info(
                    f"{point.name} seed {seed}: L1 {summary.final_l1:.4f} PSNR {summary.psnr:.2f} "
                    f"high-band error {summary.band_error[2]:.3f}"
                )

    with (out / "ablation_summary.csv").open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SUMMARY_COLUMNS)
        writer.writerows(summarize(results))
    return report
