import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from favae.autograd.optim import Adam
from favae.autograd.tensor import Tape, Tensor
from favae.core.errors import NumericError
from favae.model.favae import FAVAE, LossTerms
from favae.models import MetricsRow, NanDump, OptimSpec
from favae.vq.codebook import perplexity

logger = logging.getLogger(__name__)


@dataclass
class StepResult:
    step: int
    loss: float
    terms: LossTerms
    perplexity: float
    grad_norm: float
    sigma: list[float] = field(default_factory=list)

    def to_metrics(self, **extra: float | None) -> MetricsRow:
        return MetricsRow(
            step=self.step,
            loss=self.loss,
            l1=self.terms.l1,
            ffl=self.terms.ffl,
            dsl=self.terms.dsl,
            l_q=self.terms.l_q,
            perplexity=self.perplexity,
            sigma=self.sigma,
            grad_norm=self.grad_norm,
            **extra,  # type: ignore[arg-type]
        )


def make_optimizer(model: FAVAE, optim: OptimSpec) -> Adam:
    return Adam(
        model.trainable_parameters(),
        lr=optim.lr,
        betas=(optim.beta1, optim.beta2),
        eps=optim.eps,
    )


def train_step(
    batch: np.ndarray,
    model: FAVAE,
    optimizer: Adam,
    grad_clip: float | None = None,
) -> StepResult:
    """
    One forward pass, one backward pass and one Adam step over encoder,
    decoder, complements and (when learned) σ, followed by the EMA codebook
    update. Raises NumericError on a non-finite loss.
    """
    x = Tensor(batch, dtype=model.codebook.entries.dtype)
    optimizer.zero_grad()
    with Tape() as tape:
        trace = model(x)
        loss, terms = model.total_loss(trace)
    value = loss.item()
    if not np.isfinite(value):
        raise NumericError(f"loss became {value} at step {optimizer.state.step + 1}")
    tape.backward(loss)
    norm = optimizer.clip_grad_norm(grad_clip) if grad_clip else optimizer.grad_norm()
    if not np.isfinite(norm):
        raise NumericError(f"gradient norm became {norm} at step {optimizer.state.step + 1}")
    optimizer.step()

    if model.spec.codebook_mode == "ema":
        model.codebook.ema_update(trace.z, trace.indices)
    else:
        model.codebook.track_usage(trace.indices)
    return StepResult(
        step=optimizer.state.step,
        loss=value,
        terms=terms,
        perplexity=perplexity(trace.indices, model.spec.codebook_size),
        grad_norm=norm,
        sigma=model.sigma_bank.sigmas(),
    )


class Trainer:
    """Owns the model/optimizer pair of one FA-VAE run."""

    def __init__(self, model: FAVAE, optim: OptimSpec):
        self.model = model
        self.optim = optim
        self.optimizer = make_optimizer(model, optim)
        self.last_metrics: MetricsRow | None = None

    @property
    def step(self) -> int:
        return self.optimizer.state.step

    def train_step(self, batch: np.ndarray) -> StepResult:
        return train_step(batch, self.model, self.optimizer, self.optim.grad_clip)

    def write_nan_dump(self, path: Path, message: str) -> None:
        norms = {
            name: float(np.linalg.norm(p.data.astype(np.float64)))
            for name, p in self.model.named_parameters()
        }
        dump = NanDump(
            step=self.step,
            message=message,
            last_metrics=self.last_metrics,
            parameter_norms=norms,
            sigma=self.model.sigma_bank.sigmas(),
        )
        path.write_text(dump.model_dump_json(indent=2))
        logger.error(f"Training aborted at step {self.step}: {message}; diagnostics in {path}")
