"""Frequency augmented VQ autoencoder (FA-VAE) with Dynamic Spectrum Loss and a
cross-attention autoregressive prior, on a small numpy autodiff engine."""

__version__ = "0.1.0"
