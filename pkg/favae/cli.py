"""Command-line entry point: `favae train|train-cat|gradcheck|freqmap|reconstruct|ablate`."""
import logging
import sys
from pathlib import Path
from typing import Annotated, Optional, cast

import typer
from pydantic import ValidationError

from favae.core.config import load_run_config, settings
from favae.core.errors import FavaeError
from favae.harness.ablation import cmd_ablate
from favae.harness.battery import SCOPES
from favae.harness.runs import (
    cmd_freqmap,
    cmd_gradcheck,
    cmd_reconstruct,
    cmd_train_cat,
    cmd_train_favae,
)

logger = logging.getLogger(__name__)

# usage errors derive from the ClickException of the click Typer runs on,
# which is not necessarily an importable `click`
_CLICK_ERROR = cast(
    type[Exception], next(c for c in typer.BadParameter.__mro__ if c.__name__ == "ClickException")
)

app = typer.Typer(add_completion=False, no_args_is_help=True, pretty_exceptions_enable=False)

ConfigOpt = Annotated[Optional[Path], typer.Option("--config", help="TOML run configuration")]
SeedOpt = Annotated[Optional[int], typer.Option("--seed", help="overrides `seed`")]
OutOpt = Annotated[Optional[Path], typer.Option("--out", help="output directory")]
StepsOpt = Annotated[Optional[int], typer.Option("--steps", min=0, help="overrides the step count")]
QuietOpt = Annotated[bool, typer.Option("--quiet", help="no progress bar")]
ImagesOpt = Annotated[list[Path], typer.Option("--image", help="PGM/PPM file, repeatable")]


@app.command()
def train(
    config: ConfigOpt = None,
    seed: SeedOpt = None,
    out: OutOpt = None,
    steps: StepsOpt = None,
    resume: Annotated[
        Optional[Path], typer.Option("--checkpoint", help="resume from this checkpoint")
    ] = None,
    quiet: QuietOpt = False,
) -> None:
    """Train the FA-VAE."""
    train_override = {"steps": steps} if steps is not None else None
    cfg = load_run_config(config, seed=seed, out_dir=out, train=train_override)
    summary = cmd_train_favae(cfg, config_path=config, resume=resume, quiet=quiet)
    typer.echo(
        f"steps {summary.steps}  L1 {summary.final_l1:.4f}  PSNR {summary.psnr:.2f}  "
        f"band error {' '.join(f'{e:.3f}' for e in summary.band_error)}  -> {summary.checkpoint}"
    )


@app.command("train-cat")
def train_cat(
    checkpoint: Annotated[Path, typer.Option("--checkpoint", help="trained FA-VAE checkpoint")],
    config: ConfigOpt = None,
    seed: SeedOpt = None,
    out: OutOpt = None,
    steps: StepsOpt = None,
    quiet: QuietOpt = False,
) -> None:
    """Train the conditional prior on the codes of a trained FA-VAE."""
    train_override = {"cat_steps": steps} if steps is not None else None
    cfg = load_run_config(config, seed=seed, out_dir=out, train=train_override)
    summary = cmd_train_cat(cfg, checkpoint, config_path=config, quiet=quiet)
    typer.echo(
        f"steps {summary.steps}  NLL {summary.first_nll:.4f} -> {summary.final_nll:.4f}  "
        f"-> {summary.checkpoint}"
    )


@app.command()
def gradcheck(
    scope: Annotated[
        str, typer.Option("--scope", help=f"one of {', '.join(SCOPES)} or all")
    ] = "all",
    seed: Annotated[int, typer.Option("--seed")] = 0,
) -> None:
    """Finite-difference check of every loss gradient."""
    if scope != "all" and scope not in SCOPES:
        raise typer.BadParameter(f"unknown scope {scope!r}", param_hint="--scope")
    cmd_gradcheck(scope, seed, echo=typer.echo)  # type: ignore[arg-type]


@app.command()
def freqmap(
    images: ImagesOpt,
    out: Annotated[Path, typer.Option("--out")],
    checkpoint: Annotated[Optional[Path], typer.Option("--checkpoint")] = None,
) -> None:
    """Write log-magnitude frequency maps of images and, with a checkpoint,
    of their reconstructions and intermediate features."""
    for path in cmd_freqmap(images, out, checkpoint):
        typer.echo(str(path))


@app.command()
def reconstruct(
    checkpoint: Annotated[Path, typer.Option("--checkpoint")],
    images: ImagesOpt,
    out: Annotated[Path, typer.Option("--out")],
) -> None:
    """Reconstruct images through a trained FA-VAE."""
    typer.echo(str(cmd_reconstruct(checkpoint, images, out)))


@app.command()
def ablate(
    config: ConfigOpt = None,
    seed: SeedOpt = None,
    out: OutOpt = None,
    steps: StepsOpt = None,
) -> None:
    """Short training runs over the configured ablation grid."""
    cfg = load_run_config(config, seed=seed, out_dir=out)
    typer.echo(str(cmd_ablate(cfg, config_path=config, steps=steps)))


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(
        level=settings.LOG_LEVEL, format="%(asctime)s %(levelname)s %(name)s: %(message)s"
    )
    args = sys.argv[1:] if argv is None else argv
    try:
        result = app(args=args, prog_name="favae", standalone_mode=False)
    except FavaeError as e:
        logger.error(str(e))
        return e.exit_code
    except ValidationError as e:
        logger.error(f"invalid configuration: {e}")
        return 1
    except (_CLICK_ERROR, typer.Abort) as e:
        typer.echo(f"Error: {e}", err=True)
        return 1
    except OSError as e:
        logger.error(str(e))
        return 3
    return result if isinstance(result, int) else 0


if __name__ == "__main__":
    sys.exit(main())
