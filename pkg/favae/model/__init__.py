from favae.model.checkpoint import load_favae, save_favae
from favae.model.favae import FAVAE, ForwardTrace, LossTerms
from favae.model.fcm import FrequencyComplement
from favae.model.train import StepResult, Trainer, train_step

__all__ = [
    "FAVAE",
    "ForwardTrace",
    "FrequencyComplement",
    "LossTerms",
    "StepResult",
    "Trainer",
    "load_favae",
    "save_favae",
    "train_step",
]
