from favae.autograd import ops
from favae.autograd.gradcheck import gradcheck
from favae.autograd.optim import Adam, AdamState, adam_step
from favae.autograd.tensor import (
    Function,
    Tape,
    TapeRecord,
    Tensor,
    backward,
    current_tape,
    no_grad,
    tensor,
)

__all__ = [
    "Adam",
    "AdamState",
    "Function",
    "Tape",
    "TapeRecord",
    "Tensor",
    "adam_step",
    "backward",
    "current_tape",
    "gradcheck",
    "no_grad",
    "ops",
    "tensor",
]
