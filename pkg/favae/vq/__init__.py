from favae.vq.codebook import Codebook, perplexity, quantization_loss

__all__ = ["Codebook", "perplexity", "quantization_loss"]
