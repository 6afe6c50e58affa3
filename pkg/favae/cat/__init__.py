from favae.cat.model import CAT, SequenceBatch, cat_nll
from favae.cat.sampling import sample, top_k_filter
from favae.cat.train import CatTrainer, encode_to_indices, load_cat, save_cat

__all__ = [
    "CAT",
    "CatTrainer",
    "SequenceBatch",
    "cat_nll",
    "encode_to_indices",
    "load_cat",
    "sample",
    "save_cat",
    "top_k_filter",
]
