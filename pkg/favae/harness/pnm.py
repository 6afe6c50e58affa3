"""Binary PGM (P5) and PPM (P6) images, 8 or 16 bits per sample."""
import logging
from pathlib import Path

import numpy as np

from favae.core.errors import FormatError

logger = logging.getLogger(__name__)

_CHANNELS = {b"P5": 1, b"P6": 3}


def _header_tokens(data: bytes, count: int) -> tuple[list[bytes], int]:
    """The first `count` whitespace-separated header tokens (skipping
    comments) and the offset of the raster that follows them."""
    tokens: list[bytes] = []
    i, n = 0, len(data)
    while len(tokens) < count:
        while i < n and data[i : i + 1].isspace():
            i += 1
        if i >= n:
            raise FormatError("PNM header is truncated")
        if data[i : i + 1] == b"#":
            while i < n and data[i : i + 1] not in (b"\n", b"\r"):
                i += 1
            continue
        start = i
        while i < n and not data[i : i + 1].isspace():
            i += 1
        tokens.append(data[start:i])
    # exactly one whitespace byte separates maxval from the raster
    return tokens, i + 1


def decode_pnm(data: bytes) -> np.ndarray:
    tokens, offset = _header_tokens(data, 4)
    magic = tokens[0]
    if magic not in _CHANNELS:
        raise FormatError(f"unsupported PNM magic {magic!r}")
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError as e:
        raise FormatError(f"malformed PNM header {tokens!r}") from e
    if width < 1 or height < 1 or not 0 < maxval < 65536:
        raise FormatError(f"invalid PNM dimensions {width}x{height} maxval {maxval}")
    channels = _CHANNELS[magic]
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype(np.uint8)
    count = width * height * channels
    if len(data) - offset < count * dtype.itemsize:
        raise FormatError(f"PNM raster is truncated: expected {count} samples")
    raster = np.frombuffer(data, dtype=dtype, count=count, offset=offset)
    if maxval != 255:
        raster = np.round(raster.astype(np.float64) * 255.0 / maxval).astype(np.uint8)
    shape = (height, width) if channels == 1 else (height, width, 3)
    return raster.reshape(shape).copy()


def encode_pnm(image: np.ndarray) -> bytes:
    img = np.asarray(image)
    if img.dtype != np.uint8:
        raise FormatError(f"PNM writer expects uint8 samples, got {img.dtype}")
    if img.ndim == 3 and img.shape[2] == 1:
        img = img[:, :, 0]
    if img.ndim == 2:
        magic = b"P5"
    elif img.ndim == 3 and img.shape[2] == 3:
        magic = b"P6"
    else:
        raise FormatError(f"cannot store an image of shape {img.shape} as PGM/PPM")
    height, width = img.shape[:2]
    header = b"%s\n%d %d\n255\n" % (magic, width, height)
    return header + np.ascontiguousarray(img).tobytes()


def read_pnm(path: Path) -> np.ndarray:
    try:
        data = path.read_bytes()
    except OSError as e:
        raise FormatError(f"cannot read {path}: {e}") from e
    try:
        return decode_pnm(data)
    except FormatError as e:
        raise FormatError(f"{path}: {e}") from e


def write_pnm(path: Path, image: np.ndarray) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_pnm(image))
    logger.debug(f"Wrote {path}")


def to_model_range(image: np.ndarray) -> np.ndarray:
    """uint8 [H, W] or [H, W, C] → float [C, H, W] in [-1, 1]."""
    img = np.asarray(image, dtype=np.float64)
    if img.ndim == 2:
        img = img[:, :, None]
    return img.transpose(2, 0, 1) / 127.5 - 1.0


def to_uint8(x: np.ndarray) -> np.ndarray:
    """float [C, H, W] in [-1, 1] → uint8 [H, W] (C == 1) or [H, W, C]."""
    img = np.clip(np.round((np.asarray(x, dtype=np.float64) + 1.0) * 127.5), 0, 255).astype(np.uint8)
    img = img.transpose(1, 2, 0)
    return img[:, :, 0] if img.shape[2] == 1 else img


def resize_nearest(image: np.ndarray, size: int) -> np.ndarray:
    h, w = image.shape[:2]
    rows = (np.arange(size) * h // size).astype(np.int64)
    cols = (np.arange(size) * w // size).astype(np.int64)
    return image[rows[:, None], cols[None, :]]


def tile_grid(images: np.ndarray, columns: int = 8) -> np.ndarray:
    """uint8 [N, H, W(, C)] → one uint8 mosaic with `columns` per row."""
    n = images.shape[0]
    rows = -(-n // columns)
    cols = min(columns, n)
    h, w = images.shape[1:3]
    grid = np.zeros((rows * h, cols * w) + images.shape[3:], dtype=np.uint8)
    for i, img in enumerate(images):
        r, c = divmod(i, cols)
        grid[r * h : (r + 1) * h, c * w : (c + 1) * w] = img
    return grid
