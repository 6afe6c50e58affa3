import numpy as np
import pytest

from favae.autograd import ops
from favae.autograd.optim import Adam
from favae.autograd.tensor import Tape
from favae.core.errors import ContractError
from favae.nn.module import Parameter


def _quadratic_step(opt: Adam, x: Parameter, target: float) -> None:
    opt.zero_grad()
    with Tape() as tape:
        loss = ops.sum(ops.square(x - target))
    tape.backward(loss)
    opt.step()


def test_one_step_descends() -> None:
    x = Parameter([1.0])
    opt = Adam({"x": x}, lr=0.1)
    _quadratic_step(opt, x, 0.0)
    assert x.data[0] < 1.0


def test_zero_gradient_leaves_parameter_unchanged() -> None:
    x = Parameter([0.5])
    opt = Adam({"x": x}, lr=0.1)
    opt.zero_grad()
    opt.step()
    assert x.data[0] == 0.5


def test_converges_on_shifted_quadratic() -> None:
    x = Parameter([0.0])
    opt = Adam({"x": x}, lr=0.1)
    for _ in range(200):
        _quadratic_step(opt, x, 3.0)
    assert abs(x.data[0] - 3.0) < 1e-2


def test_step_leaves_gradients_in_place() -> None:
    x = Parameter([1.0, -2.0])
    opt = Adam({"x": x}, lr=0.1)
    _quadratic_step(opt, x, 0.0)
    assert np.array_equal(x.grad, [2.0, -4.0])


def test_missing_gradient_is_a_contract_error() -> None:
    x = Parameter([1.0])
    x.grad = None
    with pytest.raises(ContractError):
        Adam({"x": x}).step()


def test_clip_grad_norm_rescales() -> None:
    x = Parameter([3.0, 4.0])
    x.grad = np.array([3.0, 4.0])
    opt = Adam({"x": x})
    assert opt.clip_grad_norm(1.0) == pytest.approx(5.0)
    assert np.linalg.norm(x.grad) == pytest.approx(1.0)


def test_state_arrays_restore_the_trajectory() -> None:
    a, b = Parameter([1.0]), Parameter([1.0])
    opt_a, opt_b = Adam({"x": a}, lr=0.05), Adam({"x": b}, lr=0.05)
    for _ in range(3):
        _quadratic_step(opt_a, a, 2.0)
    b.data[...] = a.data
    opt_b.load_state_arrays(opt_a.state_arrays())
    _quadratic_step(opt_a, a, 2.0)
    _quadratic_step(opt_b, b, 2.0)
    assert opt_b.state.step == 4
    assert np.array_equal(a.data, b.data)
