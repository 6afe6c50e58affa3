import csv
import logging
from collections import deque
from pathlib import Path
from types import TracebackType

import numpy as np

from favae.core.errors import DimensionError
from favae.models import MetricsRow

logger = logging.getLogger(__name__)


def quantize_255(x: np.ndarray) -> np.ndarray:
    return np.clip(np.round((np.asarray(x, dtype=np.float64) + 1.0) * 127.5), 0, 255)


def psnr(x: np.ndarray, x_hat: np.ndarray) -> float:
    """PSNR in dB of 8-bit quantised images given in [-1, 1]."""
    if x.shape != x_hat.shape:
        raise DimensionError(f"psnr: shapes {x.shape} and {x_hat.shape} differ")
    mse = float(np.mean((quantize_255(x) - quantize_255(x_hat)) ** 2))
    if mse == 0:
        return float("inf")
    return float(10.0 * np.log10(255.0**2 / mse))


class Smoother:
    """Running mean over the last `window` values."""

    def __init__(self, window: int):
        self.values: deque[float] = deque(maxlen=window)

    def update(self, value: float) -> float:
        self.values.append(value)
        return self.value

    @property
    def value(self) -> float:
        return float(np.mean(self.values)) if self.values else float("nan")


class MetricsWriter:
    """Append-only CSV of MetricsRow, header written once.

    With `resume_step` an existing file is continued: rows logged after that
    step (written past the last checkpoint) are dropped and new rows are
    appended below the rest.
    """

    def __init__(self, path: Path, n_dsl: int, n_sigma: int, resume_step: int | None = None):
        self.path = path
        self.header = MetricsRow.header(n_dsl, n_sigma)
        if resume_step is not None and path.is_file():
            self._truncate_after(resume_step)
            self._fh = path.open("a", newline="")
            self._writer = csv.writer(self._fh)
        else:
            self._fh = path.open("w", newline="")
            self._writer = csv.writer(self._fh)
            self._writer.writerow(self.header)

    def _truncate_after(self, step: int) -> None:
        with self.path.open(newline="") as fh:
            rows = list(csv.reader(fh))
        if not rows or rows[0] != self.header:
            raise DimensionError(f"{self.path} has a different header, cannot continue it")
        kept = [r for r in rows[1:] if r and int(r[0]) <= step]
        if len(kept) < len(rows) - 1:
            logger.info(f"Dropping {len(rows) - 1 - len(kept)} metrics rows logged after step {step}")
        with self.path.open("w", newline="") as fh:
            csv.writer(fh).writerows([self.header, *kept])

    def write(self, row: MetricsRow) -> None:
        values = row.csv_values()
        if len(values) != len(self.header):
            raise DimensionError(f"metrics row has {len(values)} columns, header {len(self.header)}")
        self._writer.writerow(values)
        self._fh.flush()

    def close(self) -> None:
        self._fh.close()

    def __enter__(self) -> "MetricsWriter":
        return self

    def __exit__(
        self,
        exc_type: type[BaseException] | None,
        exc: BaseException | None,
        tb: TracebackType | None,
    ) -> None:
        self.close()


def read_metrics(path: Path) -> list[dict[str, str]]:
    with path.open(newline="") as fh:
        return list(csv.DictReader(fh))
