import numpy as np

from favae.autograd import ops
from favae.autograd.tensor import Tensor
from favae.core.errors import ConfigError
from favae.models import FcmVariant
from favae.nn import Conv2d, Module, SpatialSelfAttention
from favae.nn.layers import Init


class FrequencyComplement(Module):
    """
    Frequency complement module: a small conv stack whose output is added
    to a decoder feature map of the same shape.

    The output conv starts at zero so an untrained module adds nothing.
    """

    def __init__(
        self,
        channels: int,
        variant: FcmVariant = "conv",
        rng: np.random.Generator | None = None,
        dtype: np.dtype | str = "float64",  # type: ignore[type-arg]
        final_init: Init = "zeros",
    ):
        if variant == "none":
            raise ConfigError("a level without complement has no FrequencyComplement")
        if variant not in ("conv", "conv_residual", "conv_attention"):
            raise ConfigError(f"unknown FCM variant {variant!r}")
        self.variant = variant
        self.conv1 = Conv2d(channels, channels, 3, rng=rng, dtype=dtype)
        self.attn = (
            SpatialSelfAttention(channels, rng=rng, dtype=dtype) if variant == "conv_attention" else None
        )
        self.conv2 = Conv2d(channels, channels, 3, init=final_init, rng=rng, dtype=dtype)

    def forward(self, b: Tensor) -> Tensor:
        h = ops.swish(self.conv1(b))
        if self.variant == "conv_residual":
            h = h + b
        elif self.attn is not None:
            h = self.attn(h)
        return self.conv2(h)

