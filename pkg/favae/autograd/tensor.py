"""
Dense tensors with define-by-run reverse-mode differentiation.

Ops run eagerly on numpy arrays. While a `Tape` is active, every op whose
inputs require gradients is appended to it as a `TapeRecord`; `Tape.backward`
replays the backward rules in reverse recording order. A fresh tape is
opened per training step, nothing about the graph outlives it.
"""
import contextvars
import logging
from collections.abc import Iterator, Sequence
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Any, Union

import numpy as np

from favae.core.config import settings
from favae.core.errors import ContractError, NumericError

logger = logging.getLogger(__name__)

ArrayLike = Union[np.ndarray, float, int, Sequence[Any]]

_active_tape: contextvars.ContextVar["Tape | None"] = contextvars.ContextVar(
    "favae_active_tape", default=None
)


class Function:
    """
    Base class for differentiable operations.

    Subclasses implement `forward` on raw arrays and `backward`, which maps
    dL/d(output) to a tuple of dL/d(input) aligned with the inputs (None for
    inputs that receive no gradient).
    """

    def __init__(self, *inputs: "Tensor"):
        self.inputs = inputs

    def forward(self, *arrays: np.ndarray, **kwargs: Any) -> np.ndarray:
        raise NotImplementedError(f"{type(self).__name__} has no forward rule")

    def backward(self, grad: np.ndarray) -> tuple[np.ndarray | None, ...]:
        raise NotImplementedError(f"{type(self).__name__} has no backward rule")

    @classmethod
    def apply(cls, *inputs: "Tensor", **kwargs: Any) -> "Tensor":
        fn = cls(*inputs)
        out_data = fn.forward(*(t.data for t in inputs), **kwargs)
        if settings.CHECK_FINITE and not np.all(np.isfinite(out_data)):
            raise NumericError(f"{cls.__name__} produced non-finite values")
        tape = _active_tape.get()
        tracked = tape is not None and any(t.requires_grad for t in inputs)
        out = Tensor(out_data, requires_grad=tracked, _leaf=not tracked)
        if tracked:
            assert tape is not None
            tape.record(fn, inputs, out)
        return out


@dataclass(eq=False)
class TapeRecord:
    index: int
    fn: Function
    inputs: tuple["Tensor", ...]
    output: "Tensor"
    tape: "Tape"


@dataclass(eq=False)
class Tape:
    """Ordered log of the ops executed while it is active."""

    records: list[TapeRecord] = field(default_factory=list)
    _token: contextvars.Token["Tape | None"] | None = field(default=None, repr=False)

    def __enter__(self) -> "Tape":
        self._token = _active_tape.set(self)
        return self

    def __exit__(self, *exc: object) -> None:
        if self._token is not None:
            _active_tape.reset(self._token)
            self._token = None

    def __len__(self) -> int:
        return len(self.records)

    def record(
        self, fn: Function, inputs: tuple["Tensor", ...], output: "Tensor"
    ) -> None:
        rec = TapeRecord(len(self.records), fn, inputs, output, self)
        output._record = rec
        self.records.append(rec)

    def backward(self, loss: "Tensor") -> None:
        """Populate `.grad` of every requires_grad leaf reachable from `loss`.

        Gradients accumulate: running backward twice without `zero_grad`
        doubles them.
        """
        if loss.data.size != 1:
            raise ContractError(f"backward needs a scalar loss, got shape {loss.shape}")
        rec = loss._record
        if rec is None or rec.tape is not self:
            raise ContractError("loss was not recorded on this tape")

        pending: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
        for record in reversed(self.records[: rec.index + 1]):
            grad = pending.pop(id(record.output), None)
            if grad is None:
                continue
            input_grads = record.fn.backward(grad)
            for tensor, g in zip(record.inputs, input_grads, strict=True):
                if g is None or not tensor.requires_grad:
                    continue
                if g.shape != tensor.shape:
                    raise ContractError(
                        f"{type(record.fn).__name__} returned a gradient of shape "
                        f"{g.shape} for an input of shape {tensor.shape}"
                    )
                if tensor._record is None:
                    tensor._accumulate_grad(g)
                elif id(tensor) in pending:
                    pending[id(tensor)] = pending[id(tensor)] + g
                else:
                    pending[id(tensor)] = g


def current_tape() -> Tape | None:
    return _active_tape.get()


@contextmanager
def no_grad() -> Iterator[None]:
    token = _active_tape.set(None)
    try:
        yield
    finally:
        _active_tape.reset(token)


def _default_dtype(data: Any) -> np.dtype:  # type: ignore[type-arg]
    if isinstance(data, np.ndarray) and np.issubdtype(data.dtype, np.floating):
        return data.dtype
    return settings.test_dtype


class Tensor:
    """
    A dense real array that may take part in gradient recording.

    Leaves created with `requires_grad=True` carry a zero-initialised `grad`
    buffer of the same shape; op outputs carry a tape record instead.
    """

    __array_priority__ = 100

    def __init__(
        self,
        data: ArrayLike,
        requires_grad: bool = False,
        dtype: Any = None,
        name: str | None = None,
        _leaf: bool = True,
    ):
        if isinstance(data, Tensor):
            data = data.data
        self.data: np.ndarray = np.array(
            data, dtype=dtype if dtype is not None else _default_dtype(data)
        )
        self.requires_grad = requires_grad
        self.name = name
        self._record: TapeRecord | None = None
        self.grad: np.ndarray | None = (
            np.zeros_like(self.data) if requires_grad and _leaf else None
        )

    def __repr__(self) -> str:
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}, dtype={self.dtype}{flag})"

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(self.data.shape)

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return int(self.data.size)

    @property
    def dtype(self) -> np.dtype:  # type: ignore[type-arg]
        return self.data.dtype

    @property
    def is_leaf(self) -> bool:
        return self._record is None

    def item(self) -> float:
        if self.data.size != 1:
            raise ContractError(f"item() needs a single value, got shape {self.shape}")
        return float(self.data.reshape(()))

    def numpy(self) -> np.ndarray:
        return self.data

    def detach(self) -> "Tensor":
        return Tensor(self.data, dtype=self.dtype)

    def zero_grad(self) -> None:
        if self.requires_grad and self.is_leaf:
            self.grad = np.zeros_like(self.data)

    def _accumulate_grad(self, g: np.ndarray) -> None:
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += g.astype(self.dtype, copy=False)

    def backward(self) -> None:
        if self._record is None:
            raise ContractError("backward called on a tensor that is not on a tape")
        self._record.tape.backward(self)

    # Arithmetic dispatches into favae.autograd.ops, imported lazily to keep
    # the module graph acyclic.
    def __add__(self, other: "Tensor | float") -> "Tensor":
        from favae.autograd import ops

        return ops.add(self, other)

    def __radd__(self, other: float) -> "Tensor":
        from favae.autograd import ops

        return ops.add(other, self)

    def __sub__(self, other: "Tensor | float") -> "Tensor":
        from favae.autograd import ops

        return ops.sub(self, other)

    def __rsub__(self, other: float) -> "Tensor":
        from favae.autograd import ops

        return ops.sub(other, self)

    def __mul__(self, other: "Tensor | float") -> "Tensor":
        from favae.autograd import ops

        return ops.mul(self, other)

    def __rmul__(self, other: float) -> "Tensor":
        from favae.autograd import ops

        return ops.mul(other, self)

    def __truediv__(self, other: "Tensor | float") -> "Tensor":
        from favae.autograd import ops

        return ops.div(self, other)

    def __rtruediv__(self, other: float) -> "Tensor":
        from favae.autograd import ops

        return ops.div(other, self)

    def __neg__(self) -> "Tensor":
        from favae.autograd import ops

        return ops.neg(self)

    def __matmul__(self, other: "Tensor") -> "Tensor":
        from favae.autograd import ops

        return ops.matmul(self, other)

    def __getitem__(self, idx: Any) -> "Tensor":
        from favae.autograd import ops

        return ops.getitem(self, idx)

    def sum(self, axis: int | tuple[int, ...] | None = None, keepdims: bool = False) -> "Tensor":
        from favae.autograd import ops

        return ops.sum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis: int | tuple[int, ...] | None = None, keepdims: bool = False) -> "Tensor":
        from favae.autograd import ops

        return ops.mean(self, axis=axis, keepdims=keepdims)

    def reshape(self, *shape: int) -> "Tensor":
        from favae.autograd import ops

        return ops.reshape(self, shape)

    def permute(self, *dims: int) -> "Tensor":
        from favae.autograd import ops

        return ops.permute(self, dims)

    def expand(self, *shape: int) -> "Tensor":
        from favae.autograd import ops

        return ops.expand(self, shape)


def tensor(data: ArrayLike, requires_grad: bool = False, dtype: Any = None) -> Tensor:
    return Tensor(data, requires_grad=requires_grad, dtype=dtype)


def backward(loss: Tensor) -> None:
    """Run reverse-mode differentiation from a scalar loss."""
    loss.backward()
