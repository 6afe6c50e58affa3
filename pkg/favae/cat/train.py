import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from pydantic import ValidationError

from favae.autograd.optim import Adam
from favae.autograd.tensor import Tape, Tensor, no_grad
from favae.cat.model import CAT, SequenceBatch, cat_nll
from favae.core.config import settings
from favae.core.errors import DimensionError, FormatError, NumericError
from favae.model.checkpoint import Container, decode_container, encode_container, read_file, write_atomic
from favae.model.favae import FAVAE
from favae.models import CatSpec, OptimSpec

logger = logging.getLogger(__name__)

FCAT_MAGIC = b"FCAT"


def encode_to_indices(model: FAVAE, images: np.ndarray, batch_size: int = 16) -> np.ndarray:
    """Raster-order code indices [N, h·w] of images [N, C, H, W] under the
    frozen encoder and quantizer."""
    rows = []
    with no_grad():
        for start in range(0, images.shape[0], batch_size):
            x = Tensor(images[start : start + batch_size], dtype=model.codebook.entries.dtype)
            z, _ = model.encode(x)
            _, _, indices = model.quantize(z)
            rows.append(indices.reshape(indices.shape[0], -1))
    return np.concatenate(rows, axis=0)


def check_compatible(cat: CatSpec, favae_model: FAVAE) -> None:
    s = favae_model.spec
    length = s.latent_height * s.latent_width
    if cat.vocab_size != s.codebook_size:
        raise DimensionError(f"CAT vocabulary {cat.vocab_size} != codebook size {s.codebook_size}")
    if cat.context_length != length:
        raise DimensionError(f"CAT context {cat.context_length} != latent grid h·w = {length}")


@dataclass
class CatStep:
    step: int
    nll: float
    grad_norm: float


class CatTrainer:
    def __init__(self, model: CAT, optim: OptimSpec):
        self.model = model
        self.grad_clip = optim.grad_clip
        self.optimizer = Adam(
            model.parameter_dict(),
            lr=optim.cat_lr,
            betas=(optim.beta1, optim.beta2),
            eps=optim.eps,
        )

    @property
    def step(self) -> int:
        return self.optimizer.state.step

    def train_step(self, batch: SequenceBatch) -> CatStep:
        self.optimizer.zero_grad()
        with Tape() as tape:
            loss = cat_nll(self.model(batch), batch.targets)
        value = loss.item()
        if not np.isfinite(value):
            raise NumericError(f"CAT loss became {value} at step {self.step + 1}")
        tape.backward(loss)
        norm = (
            self.optimizer.clip_grad_norm(self.grad_clip)
            if self.grad_clip
            else self.optimizer.grad_norm()
        )
        self.optimizer.step()
        return CatStep(self.step, value, norm)


def save_cat(path: Path, model: CAT, optimizer: Adam | None = None) -> None:
    blobs = dict(model.state_dict())
    if optimizer is not None:
        blobs.update({f"optim/{k}": v for k, v in optimizer.state_arrays().items()})
    write_atomic(path, encode_container(Container(FCAT_MAGIC, model.spec.model_dump_json(), blobs)))


def load_cat(path: Path, dtype: np.dtype | str | None = None) -> CAT:  # type: ignore[type-arg]
    container = decode_container(read_file(path), FCAT_MAGIC)
    try:
        spec = CatSpec.model_validate_json(container.spec_json)
    except ValidationError as e:
        raise FormatError(f"checkpoint {path} holds an invalid CAT spec: {e}") from e
    model = CAT(spec, dtype=dtype if dtype is not None else settings.train_dtype)
    try:
        model.load_state_dict({k: v for k, v in container.blobs.items() if not k.startswith("optim/")})
    except ValueError as e:
        raise FormatError(f"checkpoint {path} does not match its spec: {e}") from e
    return model
