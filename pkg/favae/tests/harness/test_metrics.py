import math
from pathlib import Path

import numpy as np
import pytest

from favae.core.errors import DimensionError
from favae.harness.metrics import MetricsWriter, Smoother, psnr, read_metrics
from favae.models import MetricsRow


def test_psnr() -> None:
    x = -np.ones((1, 3, 4, 4))
    assert psnr(x, x) == math.inf
    one_level = x + 2.0 / 255.0
    assert psnr(x, one_level) == pytest.approx(10 * math.log10(255.0**2), rel=1e-12)
    with pytest.raises(DimensionError):
        psnr(x, x[:, :1])


def test_smoother_window() -> None:
    s = Smoother(2)
    assert math.isnan(s.value)
    for v in (1.0, 2.0, 3.0):
        s.update(v)
    assert s.update(4.0) == 3.5


def test_metrics_writer(tmp_path: Path) -> None:
    path = tmp_path / "metrics.csv"
    row = MetricsRow(
        step=10, loss=1.5, l1=0.5, ffl=0.25, dsl=[0.1, 0.2], l_q=0.01, perplexity=3.0, sigma=[2.9]
    )
    with MetricsWriter(path, n_dsl=2, n_sigma=1) as writer:
        writer.write(row)
        with pytest.raises(DimensionError):
            writer.write(row.model_copy(update={"dsl": [0.1]}))
    rows = read_metrics(path)
    assert len(rows) == 1
    assert rows[0]["step"] == "10"
    assert rows[0]["dsl_1"] == "0.2"
    assert rows[0]["sigma_0"] == "2.9"
    assert rows[0]["psnr"] == ""


def _row(step: int) -> MetricsRow:
    return MetricsRow(step=step, loss=1.0, l1=0.5, ffl=0.0, l_q=0.0, perplexity=1.0)


def test_metrics_writer_continues_a_resumed_file(tmp_path: Path) -> None:
    path = tmp_path / "metrics.csv"
    with MetricsWriter(path, n_dsl=0, n_sigma=0) as writer:
        for step in (2, 4, 6):
            writer.write(_row(step))
    with MetricsWriter(path, n_dsl=0, n_sigma=0, resume_step=4) as writer:
        writer.write(_row(6))
        writer.write(_row(8))
    assert [r["step"] for r in read_metrics(path)] == ["2", "4", "6", "8"]
    assert path.read_text().count("step,") == 1


def test_metrics_writer_rejects_a_foreign_header(tmp_path: Path) -> None:
    path = tmp_path / "metrics.csv"
    with MetricsWriter(path, n_dsl=1, n_sigma=0):
        pass
    with pytest.raises(DimensionError):
        MetricsWriter(path, n_dsl=0, n_sigma=0, resume_step=0)
