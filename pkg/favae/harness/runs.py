"""
Run orchestration behind the CLI commands. Every artifact of a run is
written below its output directory.
"""
import csv
import logging
import shutil
from collections.abc import Callable
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from tqdm import tqdm

from favae.autograd.tensor import Tensor, no_grad
from favae.cat.model import CAT, SequenceBatch
from favae.cat.sampling import sample
from favae.cat.train import CatTrainer, check_compatible, encode_to_indices, save_cat
from favae.core.config import RunConfig, settings
from favae.core.errors import ConfigError, DimensionError, NumericError
from favae.harness.battery import GradcheckReport, Scope, run_battery
from favae.harness.datasets import Dataset, Vocabulary, make_dataset
from favae.harness.metrics import MetricsWriter, Smoother, psnr
from favae.harness.pnm import read_pnm, tile_grid, to_model_range, to_uint8, write_pnm
from favae.model.checkpoint import load_favae, save_favae
from favae.model.favae import FAVAE
from favae.model.train import Trainer
from favae.spectral.diagnostics import band_energy_error, freq_map

logger = logging.getLogger(__name__)

CHECKPOINT_NAME = "checkpoint.fava"
CAT_CHECKPOINT_NAME = "checkpoint.fcat"


@dataclass
class TrainSummary:
    steps: int
    final_l1: float
    psnr: float
    band_error: tuple[float, float, float]
    checkpoint: Path
    metrics: Path
    sigma: list[float] = field(default_factory=list)


@dataclass
class CatSummary:
    steps: int
    first_nll: float
    final_nll: float
    checkpoint: Path
    samples: list[Path] = field(default_factory=list)


def prepare_run_dir(cfg: RunConfig, config_path: Path | None = None) -> Path:
    out = cfg.out_dir
    out.mkdir(parents=True, exist_ok=True)
    if config_path is not None and config_path.resolve() != (out / config_path.name).resolve():
        shutil.copyfile(config_path, out / config_path.name)
    (out / "run_config.json").write_text(cfg.model_dump_json(indent=2))
    return out


def batch_indices(n: int, batch_size: int, seed: int, step: int) -> np.ndarray:
    """Minibatch for `step`; depends only on (seed, step) so resumed runs see
    the same batches."""
    rng = np.random.default_rng((seed, step))
    return rng.permutation(n)[: min(batch_size, n)]


def load_run_data(cfg: RunConfig) -> tuple[Dataset, Dataset]:
    if cfg.data.size != cfg.model.height or cfg.data.size != cfg.model.width:
        raise ConfigError(
            f"dataset size {cfg.data.size} does not match model {cfg.model.height}x{cfg.model.width}"
        )
    held = cfg.train.held_out
    data = make_dataset(cfg.data.kind, cfg.data.n + held, cfg.data.size, cfg.seed, cfg.data.path)
    return data.split(held)


def reconstruct(model: FAVAE, images: np.ndarray, batch_size: int = 16) -> np.ndarray:
    out = []
    with no_grad():
        for start in range(0, images.shape[0], batch_size):
            x = Tensor(images[start : start + batch_size], dtype=model.codebook.entries.dtype)
            out.append(model(x).x_hat.data)
    return np.concatenate(out, axis=0).astype(np.float64)


def evaluate(model: FAVAE, images: np.ndarray) -> tuple[float, tuple[float, float, float]]:
    x_hat = reconstruct(model, images)
    return psnr(images, x_hat), band_energy_error(images, x_hat)


def _write_previews(out: Path, model: FAVAE, held: np.ndarray, step: int) -> None:
    shown = held[:8]
    x_hat = reconstruct(model, shown)
    grid = tile_grid(
        np.stack([to_uint8(im) for im in np.concatenate([shown, x_hat])]), columns=shown.shape[0]
    )
    write_pnm(out / "images" / f"recon_{step:06d}.ppm", grid)
    write_pnm(out / "images" / f"freq_{step:06d}_input.pgm", _map_to_uint8(freq_map(shown[0])))
    write_pnm(out / "images" / f"freq_{step:06d}_recon.pgm", _map_to_uint8(freq_map(x_hat[0])))


def _map_to_uint8(m: np.ndarray) -> np.ndarray:
    return np.clip(np.round(m * 255.0), 0, 255).astype(np.uint8)


def cmd_train_favae(
    cfg: RunConfig,
    config_path: Path | None = None,
    resume: Path | None = None,
    quiet: bool = False,
) -> TrainSummary:
    out = prepare_run_dir(cfg, config_path)
    train, held = load_run_data(cfg)
    if resume is not None:
        loaded = load_favae(resume, dtype=settings.train_dtype, expected=cfg.model)
        model = loaded.model
        trainer = Trainer(model, cfg.optim)
        loaded.restore_optimizer(trainer.optimizer)
        logger.info(f"Resuming from {resume} at step {trainer.step}")
    else:
        model = FAVAE(cfg.model, seed=cfg.seed, dtype=settings.train_dtype)
        trainer = Trainer(model, cfg.optim)
    logger.info(
        f"Training FA-VAE for {cfg.train.steps} steps on {len(train)} images "
        f"({model.num_parameters()} parameters)"
    )

    ckpt = out / CHECKPOINT_NAME
    metrics_path = out / "metrics.csv"
    smoother = Smoother(cfg.train.smoothing_window)
    score, errors = float("nan"), (float("nan"),) * 3
    n_dsl = len(cfg.model.fcm_levels) if cfg.model.spectral_loss != "none" else 0
    resume_step = trainer.step if resume is not None else None
    with MetricsWriter(metrics_path, n_dsl, len(model.sigma_bank), resume_step=resume_step) as writer:
        bar = tqdm(
            range(trainer.step, cfg.train.steps),
            total=cfg.train.steps,
            initial=trainer.step,
            desc="favae",
            disable=quiet,
        )
        for _ in bar:
            idx = batch_indices(len(train), cfg.train.batch_size, cfg.seed, trainer.step)
            try:
                result = trainer.train_step(train.images[idx])
            except NumericError as e:
                trainer.write_nan_dump(out / "nan_dump.json", str(e))
                raise
            smoother.update(result.terms.l1)
            step = result.step
            last = step == cfg.train.steps
            if step % cfg.train.log_interval == 0 or last:
                score, errors = evaluate(model, held.images)
                row = result.to_metrics(
                    psnr=score,
                    band_err_low=errors[0],
                    band_err_mid=errors[1],
                    band_err_high=errors[2],
                )
                writer.write(row)
                trainer.last_metrics = row
                bar.set_postfix(l1=f"{smoother.value:.4f}", psnr=f"{score:.2f}")
                logger.debug(f"step {step}: loss {result.loss:.5f} l1 {result.terms.l1:.5f}")
            if step % cfg.train.checkpoint_interval == 0:
                save_favae(ckpt, model, trainer.optimizer)
            if step % cfg.train.image_interval == 0 or last:
                _write_previews(out, model, held.images, step)

    save_favae(ckpt, model, trainer.optimizer)
    if np.isnan(score):
        score, errors = evaluate(model, held.images)
    logger.info(f"Finished at step {trainer.step}: smoothed L1 {smoother.value:.4f}, PSNR {score:.2f}")
    return TrainSummary(
        steps=trainer.step,
        final_l1=smoother.value,
        psnr=score,
        band_error=errors,
        checkpoint=ckpt,
        metrics=metrics_path,
        sigma=model.sigma_bank.sigmas(),
    )


def _caption_slug(caption: str) -> str:
    return "_".join(caption.split()) or "empty"


def cmd_train_cat(
    cfg: RunConfig,
    favae_checkpoint: Path,
    config_path: Path | None = None,
    quiet: bool = False,
) -> CatSummary:
    out = prepare_run_dir(cfg, config_path)
    favae_model = load_favae(favae_checkpoint, dtype=settings.train_dtype).model
    check_compatible(cfg.cat, favae_model)
    train, _ = load_run_data(cfg.model_copy(update={"model": favae_model.spec}))

    vocab = Vocabulary.read(cfg.data.vocab_path) if cfg.data.vocab_path else train.vocabulary()
    if len(vocab) > cfg.cat.cond_vocab_size:
        raise DimensionError(
            f"caption vocabulary of {len(vocab)} exceeds cat.cond_vocab_size {cfg.cat.cond_vocab_size}"
        )
    vocab.write(out / "vocab.txt")
    conditions = vocab.encode_all(train.captions, cfg.cat.max_condition_tokens)
    if np.any((conditions != 0).sum(axis=1) == 0):
        raise DimensionError("a caption has no word in the vocabulary")
    sequences = encode_to_indices(favae_model, train.images)
    logger.info(f"Encoded {sequences.shape[0]} images to sequences of {sequences.shape[1]} codes")

    cat = CAT(cfg.cat, seed=cfg.seed, dtype=settings.train_dtype)
    trainer = CatTrainer(cat, cfg.optim)
    first = last = float("nan")
    with (out / "cat_metrics.csv").open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "nll", "grad_norm"])
        for _ in tqdm(range(cfg.train.cat_steps), desc="cat", disable=quiet):
            idx = batch_indices(len(sequences), cfg.train.cat_batch_size, cfg.seed, trainer.step)
            result = trainer.train_step(SequenceBatch(sequences[idx], conditions[idx]))
            if np.isnan(first):
                first = result.nll
            last = result.nll
            if result.step % cfg.train.log_interval == 0 or result.step == cfg.train.cat_steps:
                writer.writerow([result.step, repr(result.nll), repr(result.grad_norm)])
    ckpt = out / CAT_CHECKPOINT_NAME
    save_cat(ckpt, cat, trainer.optimizer)

    written = []
    for i, caption in enumerate(sorted(set(train.captions))):
        cond = np.repeat(
            vocab.encode(caption, cfg.cat.max_condition_tokens)[None], cfg.train.samples_per_caption, axis=0
        )
        codes = sample(
            cat,
            cond,
            temperature=cfg.train.sample_temperature,
            top_k=cfg.train.sample_top_k,
            seed=cfg.seed + i,
        )
        with no_grad():
            images = favae_model.decode_indices(codes).data
        path = out / "samples" / f"{_caption_slug(caption)}.ppm"
        write_pnm(path, tile_grid(np.stack([to_uint8(im) for im in images])))
        written.append(path)
    logger.info(f"CAT finished: NLL {first:.4f} -> {last:.4f}; {len(written)} sample grids")
    return CatSummary(trainer.step, first, last, ckpt, written)


def load_image(path: Path) -> np.ndarray:
    """An image file as float [3, H, W] in [-1, 1]; gray images are
    replicated across channels."""
    x = to_model_range(read_pnm(path))
    return np.repeat(x, 3, axis=0) if x.shape[0] == 1 else x


def _check_image_size(x: np.ndarray, model: FAVAE, path: Path) -> None:
    s = model.spec
    if x.shape[1:] != (s.height, s.width):
        raise DimensionError(
            f"{path} is {x.shape[2]}x{x.shape[1]}, checkpoint expects {s.width}x{s.height}"
        )


def cmd_freqmap(images: list[Path], out: Path, checkpoint: Path | None = None) -> list[Path]:
    """Frequency maps of each image and, with a checkpoint, of its
    reconstruction and of the per-level encoder activations, complements and
    decoder features."""
    out.mkdir(parents=True, exist_ok=True)
    model = load_favae(checkpoint, dtype=np.float64).model if checkpoint is not None else None
    written: list[Path] = []

    def emit(name: str, x: np.ndarray) -> None:
        path = out / f"{name}.pgm"
        write_pnm(path, _map_to_uint8(freq_map(x)))
        written.append(path)

    for path in images:
        x = load_image(path)
        emit(f"{path.stem}_spectrum", x)
        if model is None:
            continue
        _check_image_size(x, model, path)
        with no_grad():
            trace = model(Tensor(x[None], dtype=np.float64))
        emit(f"{path.stem}_recon_spectrum", trace.x_hat.data[0])
        for i, (a, b, c) in enumerate(zip(trace.activations, trace.features, trace.complements, strict=True)):
            emit(f"{path.stem}_A{i + 1}", a.data[0])
            emit(f"{path.stem}_B{i + 1}", b.data[0])
            if c is not None:
                emit(f"{path.stem}_C{i + 1}", c.data[0])
    logger.info(f"Wrote {len(written)} frequency maps to {out}")
    return written


def cmd_reconstruct(checkpoint: Path, images: list[Path], out: Path) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    model = load_favae(checkpoint, dtype=settings.train_dtype).model
    report = out / "reconstruct.csv"
    with report.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["image", "psnr", "band_err_low", "band_err_mid", "band_err_high"])
        for path in images:
            raw = read_pnm(path)
            x = load_image(path)
            _check_image_size(x, model, path)
            x_hat = reconstruct(model, x[None])
            score = psnr(x[None], x_hat)
            errors = band_energy_error(x[None], x_hat)
            recon = to_uint8(x_hat[0])
            if raw.ndim == 2:
                write_pnm(out / f"{path.stem}_recon.pgm", recon.mean(axis=2).round().astype(np.uint8))
            else:
                write_pnm(out / f"{path.stem}_recon.ppm", recon)
            writer.writerow([path.name, repr(score), *(repr(e) for e in errors)])
    logger.info(f"Reconstructed {len(images)} images into {out}")
    return report


def cmd_gradcheck(
    scope: Scope = "all", seed: int = 0, echo: Callable[[str], None] | None = None
) -> GradcheckReport:
    """Run the battery and emit one line per check through `echo` before a
    failing result raises NumericError."""
    report = run_battery(scope, seed)
    for line in report.lines():
        if echo is not None:
            echo(line)
        else:
            logger.debug(line)
    failures = report.failures()
    if failures:
        worst = max(failures, key=lambda k: failures[k])
        raise NumericError(
            f"{len(failures)} gradient check(s) at or above {report.tolerance:g}, "
            f"worst {worst} at {failures[worst]:.3e}"
        )
    logger.info(f"All {len(report.results)} gradient checks below {report.tolerance:g}")
    return report
