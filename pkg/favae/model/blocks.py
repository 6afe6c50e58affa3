"""Encoder and decoder ladder blocks (VQ-GAN style conv/norm/swish stacks)."""
import numpy as np

from favae.autograd import ops
from favae.autograd.tensor import Tensor
from favae.nn import Conv2d, GroupNorm, Module

Dtype = np.dtype | str  # type: ignore[type-arg]


class ConvBlock(Module):
    """conv → norm → swish → conv; the first conv may downsample by 2."""

    def __init__(
        self,
        in_channels: int,
        out_channels: int,
        stride: int = 1,
        rng: np.random.Generator | None = None,
        dtype: Dtype = "float64",
    ):
        self.conv1 = Conv2d(in_channels, out_channels, 3, stride=stride, rng=rng, dtype=dtype)
        self.norm = GroupNorm(out_channels, dtype=dtype)
        self.conv2 = Conv2d(out_channels, out_channels, 3, rng=rng, dtype=dtype)

    def forward(self, x: Tensor) -> Tensor:
        return self.conv2(ops.swish(self.norm(self.conv1(x))))


class UpBlock(Module):
    """Nearest upsample by 2 followed by a ConvBlock."""

    def __init__(
        self,
        in_channels: int,
        out_channels: int,
        rng: np.random.Generator | None = None,
        dtype: Dtype = "float64",
    ):
        self.block = ConvBlock(in_channels, out_channels, rng=rng, dtype=dtype)

    def forward(self, x: Tensor) -> Tensor:
        return self.block(ops.upsample2x(x))


class Encoder(Module):
    """
    Stem conv, then one block per level: level 1 keeps full resolution and
    every later level halves it. A 1x1 conv maps the last level to n_z.
    """

    def __init__(
        self,
        in_channels: int,
        channels: list[int],
        n_z: int,
        rng: np.random.Generator | None = None,
        dtype: Dtype = "float64",
    ):
        self.stem = Conv2d(in_channels, channels[0], 3, rng=rng, dtype=dtype)
        self.levels = [ConvBlock(channels[0], channels[0], rng=rng, dtype=dtype)]
        for i in range(1, len(channels)):
            self.levels.append(ConvBlock(channels[i - 1], channels[i], stride=2, rng=rng, dtype=dtype))
        self.to_latent = Conv2d(channels[-1], n_z, 1, rng=rng, dtype=dtype)

    def forward(self, x: Tensor) -> tuple[Tensor, list[Tensor]]:
        h = self.stem(x)
        activations = []
        for block in self.levels:
            h = block(h)
            activations.append(h)
        return self.to_latent(h), activations


class DecoderHead(Module):
    def __init__(
        self,
        channels: int,
        out_channels: int,
        rng: np.random.Generator | None = None,
        dtype: Dtype = "float64",
    ):
        self.norm = GroupNorm(channels, dtype=dtype)
        self.conv = Conv2d(channels, out_channels, 3, rng=rng, dtype=dtype)

    def forward(self, x: Tensor) -> Tensor:
        return self.conv(ops.swish(self.norm(x)))
