from favae.nn.attention import MultiHeadAttention, SpatialSelfAttention, causal_mask
from favae.nn.layers import Conv2d, Embedding, GroupNorm, LayerNorm, Linear
from favae.nn.module import Module, Parameter

__all__ = [
    "Conv2d",
    "Embedding",
    "GroupNorm",
    "LayerNorm",
    "Linear",
    "Module",
    "MultiHeadAttention",
    "Parameter",
    "SpatialSelfAttention",
    "causal_mask",
]
