"""
Binary checkpoint container.

Layout (little endian):
    magic (4 bytes) | sha256 of the spec JSON (32 bytes)
    u32 spec JSON length | spec JSON
    u32 blob count | per blob: u16 name length, name, u8 ndim, u32 dims, f32 data
    u64 tail length | tail

An FA-VAE checkpoint ("FAVA") carries the codebook blob followed by the σ
values in its tail; a CAT checkpoint ("FCAT") has an empty tail.
"""
import hashlib
import logging
import os
import struct
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from pydantic import ValidationError
from tenacity import Retrying, after_log, before_log, retry_if_exception_type, stop_after_attempt, wait_fixed

from favae.autograd.optim import Adam
from favae.core.config import settings
from favae.core.errors import FormatError
from favae.model.favae import FAVAE
from favae.models import ModelSpec

logger = logging.getLogger(__name__)

FAVA_MAGIC = b"FAVA"
OPTIM_PREFIX = "optim/"


@dataclass
class Container:
    magic: bytes
    spec_json: str
    blobs: dict[str, np.ndarray] = field(default_factory=dict)
    tail: bytes = b""


def encode_container(container: Container) -> bytes:
    spec = container.spec_json.encode()
    parts = [
        container.magic,
        hashlib.sha256(spec).digest(),
        struct.pack("<I", len(spec)),
        spec,
        struct.pack("<I", len(container.blobs)),
    ]
    for name, array in container.blobs.items():
        raw = name.encode()
        arr = np.asarray(array)
        parts.append(struct.pack("<H", len(raw)) + raw)
        parts.append(struct.pack("<B", arr.ndim) + struct.pack(f"<{arr.ndim}I", *arr.shape))
        parts.append(arr.astype("<f4").tobytes())
    parts.append(struct.pack("<Q", len(container.tail)))
    parts.append(container.tail)
    return b"".join(parts)


class _Reader:
    def __init__(self, data: bytes):
        self.data, self.offset = data, 0

    def take(self, n: int) -> bytes:
        if self.offset + n > len(self.data):
            raise FormatError("checkpoint is truncated")
        out = self.data[self.offset : self.offset + n]
        self.offset += n
        return out

    def unpack(self, fmt: str) -> tuple[int, ...]:
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def decode_container(data: bytes, magic: bytes) -> Container:
    r = _Reader(data)
    found = r.take(4)
    if found != magic:
        raise FormatError(f"expected checkpoint magic {magic!r}, found {found!r}")
    digest = r.take(32)
    (spec_len,) = r.unpack("<I")
    spec = r.take(spec_len)
    if hashlib.sha256(spec).digest() != digest:
        raise FormatError("checkpoint spec digest does not match its spec")
    (count,) = r.unpack("<I")
    blobs: dict[str, np.ndarray] = {}
    for _ in range(count):
        (name_len,) = r.unpack("<H")
        name = r.take(name_len).decode()
        (ndim,) = r.unpack("<B")
        shape = r.unpack(f"<{ndim}I")
        n = int(np.prod(shape, dtype=np.int64))
        blobs[name] = np.frombuffer(r.take(4 * n), dtype="<f4").reshape(shape)
    (tail_len,) = r.unpack("<Q")
    tail = r.take(tail_len)
    return Container(magic, spec.decode(), blobs, tail)


def write_atomic(path: Path, data: bytes) -> None:
    """Write through a temp file in the target directory and rename it into
    place, retrying on I/O errors."""
    path.parent.mkdir(parents=True, exist_ok=True)

    def _write() -> None:
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
        try:
            with os.fdopen(fd, "wb") as fh:
                fh.write(data)
            os.replace(tmp, path)
        except OSError:
            Path(tmp).unlink(missing_ok=True)
            raise

    for attempt in Retrying(
        stop=stop_after_attempt(settings.CHECKPOINT_WRITE_RETRIES),
        wait=wait_fixed(settings.CHECKPOINT_RETRY_WAIT_SECONDS),
        retry=retry_if_exception_type(OSError),
        before=before_log(logger, logging.DEBUG),
        after=after_log(logger, logging.WARNING),
        reraise=True,
    ):
        with attempt:
            _write()
    logger.info(f"Wrote checkpoint {path} ({len(data)} bytes)")


def read_file(path: Path) -> bytes:
    try:
        return path.read_bytes()
    except FileNotFoundError as e:
        raise FormatError(f"checkpoint {path} does not exist") from e


def save_favae(path: Path, model: FAVAE, optimizer: Adam | None = None) -> None:
    blobs = dict(model.state_dict())
    if optimizer is not None:
        blobs.update({OPTIM_PREFIX + k: v for k, v in optimizer.state_arrays().items()})
    sigma = np.asarray(model.sigma_bank.sigmas(), dtype="<f4")
    tail = b"".join(
        [
            model.codebook.to_bytes(),
            struct.pack("<I", sigma.size),
            sigma.tobytes(),
        ]
    )
    container = Container(FAVA_MAGIC, model.spec.model_dump_json(), blobs, tail)
    write_atomic(path, encode_container(container))


@dataclass
class LoadedFavae:
    model: FAVAE
    optim_state: dict[str, np.ndarray]

    def restore_optimizer(self, optimizer: Adam) -> None:
        optimizer.load_state_arrays(self.optim_state)


def load_favae(
    path: Path,
    dtype: np.dtype | str | None = None,  # type: ignore[type-arg]
    expected: ModelSpec | None = None,
) -> LoadedFavae:
    container = decode_container(read_file(path), FAVA_MAGIC)
    try:
        spec = ModelSpec.model_validate_json(container.spec_json)
    except ValidationError as e:
        raise FormatError(f"checkpoint {path} holds an invalid model spec: {e}") from e
    if expected is not None and expected.digest() != spec.digest():
        raise FormatError(f"checkpoint {path} was written for a different model spec")
    model = FAVAE(spec, dtype=dtype if dtype is not None else settings.train_dtype)
    params = {k: v for k, v in container.blobs.items() if not k.startswith(OPTIM_PREFIX)}
    try:
        model.load_state_dict(params)
    except ValueError as e:
        raise FormatError(f"checkpoint {path} does not match its spec: {e}") from e
    used = model.codebook.load_bytes(container.tail)
    if used + 4 > len(container.tail):
        raise FormatError(f"checkpoint {path} is missing its sigma values")
    (count,) = struct.unpack_from("<I", container.tail, used)
    if used + 4 + 4 * count > len(container.tail):
        raise FormatError(f"checkpoint {path} is truncated")
    sigma = np.frombuffer(container.tail, dtype="<f4", count=count, offset=used + 4)
    if count != len(model.sigma_bank):
        raise FormatError(f"checkpoint carries {count} sigma values, model has {len(model.sigma_bank)}")
    derived = np.asarray(model.sigma_bank.sigmas(), dtype=np.float64)
    if not np.allclose(sigma, derived, rtol=1e-5, atol=1e-6):
        raise FormatError(
            f"checkpoint {path} sigma values {sigma.tolist()} disagree with its kernels {derived.tolist()}"
        )
    logger.debug(f"Loaded {path}: sigma {sigma.tolist()}")
    optim = {
        k[len(OPTIM_PREFIX) :]: v for k, v in container.blobs.items() if k.startswith(OPTIM_PREFIX)
    }
    return LoadedFavae(model, optim)
