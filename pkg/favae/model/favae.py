"""
The frequency-augmented VQ autoencoder.

Encoder levels produce activations A_1..A_M; the decoder walks the levels
back from M to 1, and at every level adds the complement C_i = F_i(B_i) to
the incoming feature B_i before its block G_i. Encoder activation A_i and
decoder feature B_i share a resolution, which is what the per-level
spectrum losses compare.
"""
import logging
from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np

from favae.autograd import ops
from favae.autograd.tensor import Tensor
from favae.core.errors import DimensionError
from favae.model.blocks import ConvBlock, DecoderHead, Encoder, UpBlock
from favae.model.fcm import FrequencyComplement
from favae.models import ModelSpec
from favae.nn import Conv2d, Module, Parameter
from favae.spectral.kernels import SigmaBank
from favae.spectral.losses import feature_loss_terms, ffl
from favae.vq.codebook import Codebook, quantization_loss

logger = logging.getLogger(__name__)

PerceptualHook = Callable[[Tensor, Tensor], Tensor]


@dataclass
class ForwardTrace:
    x: Tensor
    activations: list[Tensor]
    features: list[Tensor]
    complements: list[Tensor | None]
    z: Tensor
    z_q: Tensor
    indices: np.ndarray
    x_hat: Tensor


@dataclass
class LossTerms:
    """Unweighted loss values plus the weights that combine them."""

    l1: float
    ffl: float
    l_q: float
    dsl: list[float] = field(default_factory=list)
    pips: float = 0.0
    alpha: float = 1.0
    beta: float = 1.0

    def contributions(self) -> dict[str, float]:
        return {
            "l1": self.l1,
            "ffl": self.alpha * self.ffl,
            "dsl": self.beta * sum(self.dsl),
            "l_q": self.l_q,
            "pips": self.pips,
        }

    @property
    def total(self) -> float:
        return sum(self.contributions().values())


class Decoder(Module):
    """Post-quant 1x1 conv, then levels M..1 of complement-and-block, then
    the output head."""

    def __init__(self, spec: ModelSpec, rng: np.random.Generator, dtype: np.dtype | str):  # type: ignore[type-arg]
        ch = spec.channel_ladder
        m = spec.levels
        self.post_quant = Conv2d(spec.n_z, ch[m - 1], 1, rng=rng, dtype=dtype)
        # index i holds level i+1
        self.fcms: list[FrequencyComplement | None] = [
            None if variant == "none" else FrequencyComplement(ch[i], variant, rng=rng, dtype=dtype)
            for i, variant in enumerate(spec.fcm_variants)
        ]
        self.blocks: list[Module] = [ConvBlock(ch[0], ch[0], rng=rng, dtype=dtype)]
        for i in range(1, m):
            self.blocks.append(UpBlock(ch[i], ch[i - 1], rng=rng, dtype=dtype))
        self.head = DecoderHead(ch[0], spec.in_channels, rng=rng, dtype=dtype)

    def forward(self, z_q: Tensor) -> tuple[Tensor, list[Tensor], list[Tensor | None]]:
        levels = len(self.blocks)
        features: list[Tensor] = [None] * levels  # type: ignore[list-item]
        complements: list[Tensor | None] = [None] * levels
        h = self.post_quant(z_q)
        for i in reversed(range(levels)):
            features[i] = h
            fcm = self.fcms[i]
            if fcm is not None:
                c = fcm(h)
                complements[i] = c
                h = h + c
            h = self.blocks[i](h)
        return self.head(h), features, complements


class FAVAE(Module):
    def __init__(
        self,
        spec: ModelSpec,
        seed: int = 0,
        dtype: np.dtype | str = "float64",  # type: ignore[type-arg]
        perceptual: PerceptualHook | None = None,
    ):
        rng = np.random.default_rng(seed)
        self.spec = spec
        self.encoder = Encoder(spec.in_channels, spec.channel_ladder, spec.n_z, rng=rng, dtype=dtype)
        self.decoder = Decoder(spec, rng, dtype)
        self.codebook = Codebook(
            spec.codebook_size,
            spec.n_z,
            decay=spec.ema_decay,
            eps=spec.ema_eps,
            l2_normalize=spec.l2_normalize_codebook,
            mode=spec.codebook_mode,
            dead_code_threshold=spec.dead_code_threshold,
            seed=seed,
            rng=rng,
            dtype=dtype,
        )
        self.sigma_bank = SigmaBank(
            [spec.kernel_sizes[i] for i in spec.fcm_levels],
            mode=spec.sigma_mode,
            sigma_init=spec.sigma_init,
            sigma_min=spec.sigma_min,
            learnable=spec.spectral_loss == "dsl",
            dtype=dtype,
        )
        # L_pips stand-in; returns 0 unless a perceptual network is plugged in
        self.perceptual = perceptual

    def trainable_parameters(self) -> dict[str, Parameter]:
        return {name: p for name, p in self.named_parameters() if p.requires_grad}

    def encode(self, x: Tensor) -> tuple[Tensor, list[Tensor]]:
        s = self.spec
        if x.ndim != 4 or x.shape[1:] != (s.in_channels, s.height, s.width):
            raise DimensionError(
                f"expected images [B, {s.in_channels}, {s.height}, {s.width}], got {x.shape}"
            )
        return self.encoder(x)

    def quantize(self, z: Tensor) -> tuple[Tensor, Tensor, np.ndarray]:
        """Returns (projected z, quantized z, indices), the first two in
        [B, h, w, n_z] layout."""
        z_nhwc = self.codebook.project(ops.permute(z, (0, 2, 3, 1)))
        z_q, indices = self.codebook.quantize(z_nhwc)
        return z_nhwc, z_q, indices

    def decode(self, z_q: Tensor) -> tuple[Tensor, list[Tensor], list[Tensor | None]]:
        """Decode a [B, n_z, h, w] latent."""
        s = self.spec
        if z_q.ndim != 4 or z_q.shape[1:] != (s.n_z, s.latent_height, s.latent_width):
            raise DimensionError(
                f"expected latents [B, {s.n_z}, {s.latent_height}, {s.latent_width}], got {z_q.shape}"
            )
        return self.decoder(z_q)

    def decode_indices(self, indices: np.ndarray) -> Tensor:
        """Images for a [B, h, w] (or [B, h·w] raster) grid of code indices."""
        s = self.spec
        idx = np.asarray(indices).reshape(-1, s.latent_height, s.latent_width)
        q = self.codebook.lookup(idx).astype(self.codebook.entries.dtype)
        x_hat, _, _ = self.decode(ops.permute(Tensor(q), (0, 3, 1, 2)))
        return x_hat

    def forward(self, x: Tensor) -> ForwardTrace:
        z, activations = self.encode(x)
        z_nhwc, z_q, indices = self.quantize(z)
        x_hat, features, complements = self.decode(ops.permute(z_q, (0, 3, 1, 2)))
        for a, b in zip(activations, features, strict=True):
            if a.shape != b.shape:
                raise DimensionError(f"encoder activation {a.shape} vs decoder feature {b.shape}")
        return ForwardTrace(x, activations, features, complements, z_nhwc, z_q, indices, x_hat)

    def feature_pairs(self, trace: ForwardTrace) -> list[tuple[Tensor, Tensor]]:
        pairs = []
        for i in self.spec.fcm_levels:
            a, c = trace.activations[i], trace.complements[i]
            assert c is not None
            if a.shape != c.shape:
                raise DimensionError(f"level {i + 1}: activation {a.shape} vs complement {c.shape}")
            pairs.append((a.detach() if self.spec.detach_encoder_targets else a, c))
        return pairs

    def total_loss(self, trace: ForwardTrace) -> tuple[Tensor, LossTerms]:
        s = self.spec
        x, x_hat = trace.x, trace.x_hat
        l1 = ops.mean(ops.abs(x - x_hat))
        total = l1
        flags = {
            "differentiate_weight": s.ffl_differentiate_weight,
            "normalize_weight": s.ffl_normalize_weight,
        }

        image_ffl = 0.0
        if s.image_ffl and s.alpha > 0:
            term = ffl(x, x_hat, **flags)
            image_ffl = term.item()
            total = total + ops.scale(term, s.alpha)

        dsl_terms = feature_loss_terms(
            self.feature_pairs(trace), self.sigma_bank, s.spectral_loss, **flags
        )
        if s.beta > 0:
            for term in dsl_terms:
                total = total + ops.scale(term, s.beta)

        l_q = quantization_loss(trace.z, trace.z_q, s.commitment)
        if s.codebook_mode == "gradient":
            l_q = l_q + self.codebook.codebook_loss(trace.z, trace.indices)
        total = total + l_q

        pips = 0.0
        if self.perceptual is not None:
            p = self.perceptual(x, x_hat)
            pips = p.item()
            total = total + p

        terms = LossTerms(
            l1=l1.item(),
            ffl=image_ffl,
            l_q=l_q.item(),
            dsl=[t.item() for t in dsl_terms],
            pips=pips,
            alpha=s.alpha if s.image_ffl else 0.0,
            beta=s.beta,
        )
        return total, terms
