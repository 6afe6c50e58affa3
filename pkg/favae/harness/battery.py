"""
Finite-difference gradient checks per package, run in double precision.

Focal-frequency terms are checked with the weight differentiated, since a
constant weight is by construction not the derivative of the loss value.
Checks through the quantizer only target parameters downstream of it; the
straight-through rule is not a true derivative either.
"""
import logging
from collections.abc import Callable
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from favae.autograd import ops
from favae.autograd.gradcheck import gradcheck
from favae.autograd.tensor import Tensor
from favae.cat.model import CAT, SequenceBatch, cat_nll
from favae.core.config import settings
from favae.model.favae import FAVAE
from favae.models import CatSpec, ModelSpec
from favae.nn.module import Parameter
from favae.spectral.dft import dft2
from favae.spectral.kernels import GaussianKernel, SigmaBank, smooth
from favae.spectral.losses import dsl_total, ffl, spectrum_loss
from favae.vq.codebook import Codebook, quantization_loss

logger = logging.getLogger(__name__)

Scope = Literal["spectral", "vq", "favae", "cat", "all"]
SCOPES: tuple[Scope, ...] = ("spectral", "vq", "favae", "cat")


@dataclass
class GradcheckReport:
    tolerance: float
    results: dict[str, float] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(err < self.tolerance for err in self.results.values())

    def failures(self) -> dict[str, float]:
        return {k: v for k, v in self.results.items() if not v < self.tolerance}

    def lines(self) -> list[str]:
        width = max((len(k) for k in self.results), default=0)
        return [
            f"{name:<{width}}  max rel err {err:.3e}  {'ok' if err < self.tolerance else 'FAIL'}"
            for name, err in self.results.items()
        ]


def _leaf(rng: np.random.Generator, *shape: int) -> Tensor:
    return Tensor(rng.normal(size=shape), requires_grad=True, dtype=np.float64)


def _spectral(rng: np.random.Generator) -> dict[str, Callable[[], float]]:
    checks: dict[str, Callable[[], float]] = {}
    for shape in [(1, 4, 4), (2, 5, 3), (3, 6, 6)]:
        tag = "x".join(map(str, shape))
        a, c = _leaf(rng, *shape), _leaf(rng, *shape)
        wr, wi = rng.normal(size=shape), rng.normal(size=shape)

        def dft_probe(x: Tensor, wr: np.ndarray = wr, wi: np.ndarray = wi) -> Tensor:
            spec = dft2(x)
            return ops.sum(spec.real * Tensor(wr) + spec.imag * Tensor(wi))

        checks[f"dft2[{tag}]"] = lambda a=a, f=dft_probe: gradcheck(f, a)
        checks[f"ffl[{tag}]"] = lambda a=a, c=c: gradcheck(
            lambda x, y: ffl(x, y, differentiate_weight=True), [a, c]
        )
        k = GaussianKernel(3, sigma=float(rng.uniform(0.6, 4.0)))
        checks[f"smooth[{tag}]"] = lambda a=a, k=k: gradcheck(
            lambda x, rho: ops.sum(ops.square(smooth(x, k))), [a, k.rho]
        )
        checks[f"spectrum_loss[{tag}]"] = lambda a=a, c=c, k=k: gradcheck(
            lambda x, y, rho: spectrum_loss(x, y, k, differentiate_weight=True), [a, c, k.rho]
        )
    bank = SigmaBank([3, 5], mode="pairwise")
    pairs = [(_leaf(rng, 2, 6, 6), _leaf(rng, 2, 6, 6)), (_leaf(rng, 1, 5, 5), _leaf(rng, 1, 5, 5))]
    leaves = [t for pair in pairs for t in pair] + [k.rho for k in bank.kernels]
    checks["dsl_total[pairwise]"] = lambda: gradcheck(
        lambda *_: dsl_total(pairs, bank, differentiate_weight=True), leaves
    )
    return checks


def _vq(rng: np.random.Generator) -> dict[str, Callable[[], float]]:
    checks: dict[str, Callable[[], float]] = {}
    for shape in [(1, 2, 2, 3), (2, 3, 3, 4), (1, 4, 2, 8)]:
        tag = "x".join(map(str, shape))
        z = _leaf(rng, *shape)
        target = rng.normal(size=shape)
        checks[f"quantization_loss[{tag}]"] = lambda z=z, t=target: gradcheck(
            lambda x: quantization_loss(x, t, 0.25), z
        )
        checks[f"l2_normalize[{tag}]"] = lambda z=z, t=target: gradcheck(
            lambda x: ops.sum(ops.l2_normalize(x) * Tensor(t)), z
        )
    cb = Codebook(6, 4, mode="gradient", l2_normalize=False, rng=rng)
    z = _leaf(rng, 2, 3, 3, 4)
    indices = cb.nearest(z.data)
    entries = cb.entries
    assert isinstance(entries, Parameter)
    checks["codebook_loss"] = lambda: gradcheck(lambda e: cb.codebook_loss(z, indices), entries)
    return checks


def _favae(rng: np.random.Generator) -> dict[str, Callable[[], float]]:
    checks: dict[str, Callable[[], float]] = {}
    variants: list[list[str]] = [["conv", "conv"], ["conv_residual", "none"], ["conv_attention", "conv"]]
    for i, fcm_variants in enumerate(variants):
        spec = ModelSpec.model_validate(
            {
                "height": 8,
                "width": 8,
                "levels": 2,
                "channel_ladder": [4, 4],
                "n_z": 3,
                "codebook_size": 8,
                "fcm_variants": fcm_variants,
                "sigma_mode": "pairwise" if i == 1 else "shared",
                "ffl_differentiate_weight": True,
            }
        )
        model = FAVAE(spec, seed=i, dtype=np.float64)
        for fcm in model.decoder.fcms:
            if fcm is not None:
                fcm.conv2.weight.data[...] = rng.normal(0.0, 0.1, size=fcm.conv2.weight.shape)
        x = Tensor(rng.uniform(-1, 1, size=(2, 3, 8, 8)), dtype=np.float64)
        targets = [model.decoder.head.conv.weight] + [k.rho for k in model.sigma_bank.kernels]
        targets += [f.conv2.weight for f in model.decoder.fcms if f is not None]

        def loss(*_: Tensor, model: FAVAE = model, x: Tensor = x) -> Tensor:
            total, _ = model.total_loss(model(x))
            return total

        checks[f"total_loss[{'-'.join(fcm_variants)}]"] = lambda f=loss, t=targets: gradcheck(f, t)
    return checks


def _cat(rng: np.random.Generator) -> dict[str, Callable[[], float]]:
    checks: dict[str, Callable[[], float]] = {}
    for i, (width, heads) in enumerate([(8, 2), (6, 3), (8, 1)]):
        spec = CatSpec(
            layers=1,
            heads=heads,
            width=width,
            ff_width=2 * width,
            context_length=4,
            vocab_size=5,
            cond_vocab_size=4,
            cond_width=6,
            max_condition_tokens=3,
        )
        model = CAT(spec, seed=i, dtype=np.float64)
        batch = SequenceBatch(rng.integers(0, 5, size=(2, 4)), np.array([[1, 2, 0], [3, 0, 0]]))
        block = model.blocks[0]
        targets = [model.head.weight, model.sos, block.cross_attn.q.weight, block.ff1.weight]

        def loss(*_: Tensor, model: CAT = model, batch: SequenceBatch = batch) -> Tensor:
            return cat_nll(model(batch), batch.targets)

        checks[f"cat_nll[w{width}h{heads}]"] = lambda f=loss, t=targets: gradcheck(f, t)
    return checks


_BATTERIES = {"spectral": _spectral, "vq": _vq, "favae": _favae, "cat": _cat}


def run_battery(scope: Scope = "all", seed: int = 0) -> GradcheckReport:
    report = GradcheckReport(tolerance=settings.GRADCHECK_TOLERANCE)
    scopes = SCOPES if scope == "all" else (scope,)
    for name in scopes:
        rng = np.random.default_rng(seed)
        for check, run in _BATTERIES[name](rng).items():
            err = run()
            report.results[f"{name}.{check}"] = err
            logger.debug(f"{name}.{check}: {err:.3e}")
    return report
