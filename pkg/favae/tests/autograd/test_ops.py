import numpy as np
import pytest

from favae.autograd import ops
from favae.autograd.gradcheck import gradcheck
from favae.autograd.tensor import Tape, Tensor
from favae.core.errors import ContractError, DimensionError
from favae.tests.utils.oracles import naive_conv2d, naive_matmul

SHAPES = [(3,), (2, 4), (2, 3, 4)]


def _leaf(rng: np.random.Generator, shape: tuple[int, ...], low: float = -1.0, high: float = 1.0) -> Tensor:
    return Tensor(rng.uniform(low, high, size=shape), requires_grad=True, dtype=np.float64)


@pytest.mark.parametrize("shape", SHAPES)
@pytest.mark.parametrize(
    "op",
    [ops.sigmoid, ops.swish, ops.gelu, ops.exp, ops.softplus, ops.square, ops.neg],
)
def test_unary_gradients(rng: np.random.Generator, shape: tuple[int, ...], op) -> None:
    x = _leaf(rng, shape)
    assert gradcheck(lambda t: ops.sum(op(t)), x) < 1e-4


@pytest.mark.parametrize("shape", SHAPES)
@pytest.mark.parametrize("op", [ops.log, ops.sqrt, ops.abs, ops.relu])
def test_unary_gradients_away_from_kinks(rng: np.random.Generator, shape: tuple[int, ...], op) -> None:
    x = _leaf(rng, shape, 0.5, 2.0)
    assert gradcheck(lambda t: ops.sum(op(t)), x) < 1e-4


@pytest.mark.parametrize("shape", SHAPES)
@pytest.mark.parametrize("op", [ops.add, ops.sub, ops.mul, ops.div])
def test_binary_gradients(rng: np.random.Generator, shape: tuple[int, ...], op) -> None:
    a, b = _leaf(rng, shape), _leaf(rng, shape, 0.5, 2.0)
    assert gradcheck(lambda x, y: ops.sum(op(x, y)), [a, b]) < 1e-4


def test_elementwise_dispatch(rng: np.random.Generator) -> None:
    a, b = _leaf(rng, (2, 3)), _leaf(rng, (2, 3))
    np.testing.assert_array_equal(ops.elementwise("add", a, b).data, a.data + b.data)
    np.testing.assert_array_equal(ops.elementwise("sub", a, b).data, a.data - b.data)
    np.testing.assert_array_equal(ops.elementwise("mul", a, b).data, a.data * b.data)
    np.testing.assert_array_equal(ops.elementwise("relu", a).data, np.maximum(a.data, 0.0))
    np.testing.assert_allclose(ops.elementwise("scale", a, 2.5).data, 2.5 * a.data)
    np.testing.assert_allclose(ops.elementwise("swish", a).data, ops.swish(a).data)
    with pytest.raises(ContractError):
        ops.elementwise("scale", a, b)
    with pytest.raises(ContractError):
        ops.elementwise("tanh", a)  # type: ignore[arg-type]


@pytest.mark.parametrize("shape", [(2, 3), (1, 4), (3, 3)])
def test_modulus_gradient(rng: np.random.Generator, shape: tuple[int, ...]) -> None:
    re, im = _leaf(rng, shape, 0.5, 1.5), _leaf(rng, shape, 0.5, 1.5)
    assert gradcheck(lambda a, b: ops.sum(ops.modulus(a, b)), [re, im]) < 1e-4


@pytest.mark.parametrize("shape", [(2, 3, 4), (4, 2, 2), (1, 5, 3)])
def test_shape_op_gradients(rng: np.random.Generator, shape: tuple[int, ...]) -> None:
    x = _leaf(rng, shape)
    w = Tensor(rng.normal(size=shape[::-1]))
    assert gradcheck(lambda t: ops.sum(ops.permute(t, (2, 1, 0)) * w), x) < 1e-4
    assert gradcheck(lambda t: ops.sum(ops.square(ops.reshape(t, (-1,)))), x) < 1e-4
    assert gradcheck(lambda t: ops.sum(ops.square(ops.mean(t, axis=1))), x) < 1e-4
    assert gradcheck(lambda t: ops.sum(ops.square(t[:, 1:])), x) < 1e-4
    assert gradcheck(lambda t: ops.sum(ops.square(ops.concat([t, t], axis=2))), x) < 1e-4


def test_expand_gradient(rng: np.random.Generator) -> None:
    x = _leaf(rng, (2, 1, 3))
    w = Tensor(rng.normal(size=(2, 4, 3)))
    assert gradcheck(lambda t: ops.sum(ops.expand(t, (2, 4, 3)) * w), x) < 1e-4


def test_matmul_matches_triple_loop(rng: np.random.Generator) -> None:
    a, b = rng.normal(size=(3, 4)), rng.normal(size=(4, 2))
    out = ops.matmul(Tensor(a), Tensor(b)).data
    assert np.max(np.abs(out - naive_matmul(a, b))) < 1e-12
    assert np.allclose(ops.matmul(Tensor(np.eye(3)), Tensor(a)).data, a)
    assert ops.matmul(Tensor([[2.0]]), Tensor([[3.0]])).item() == 6.0


@pytest.mark.parametrize("a_shape,b_shape", [((3, 4), (4, 2)), ((2, 3, 4), (4, 5)), ((2, 3, 4), (2, 4, 2))])
def test_matmul_gradient(rng: np.random.Generator, a_shape, b_shape) -> None:
    a, b = _leaf(rng, a_shape), _leaf(rng, b_shape)
    assert gradcheck(lambda x, y: ops.sum(ops.square(ops.matmul(x, y))), [a, b]) < 1e-4


def test_matmul_rejects_inner_mismatch() -> None:
    with pytest.raises(DimensionError):
        ops.matmul(Tensor(np.ones((2, 3))), Tensor(np.ones((2, 3))))


def test_conv2d_matches_nested_loop_oracle(rng: np.random.Generator) -> None:
    for _ in range(20):
        k = int(rng.choice([1, 3, 5]))
        size = int(rng.integers(k, 9))
        stride = int(rng.integers(1, 3))
        padding = int(rng.integers(0, 3))
        c, o = int(rng.integers(1, 4)), int(rng.integers(1, 4))
        x = rng.normal(size=(2, c, size, size))
        w = rng.normal(size=(o, c, k, k))
        out = ops.conv2d(Tensor(x), Tensor(w), stride=stride, padding=padding).data
        assert np.max(np.abs(out - naive_conv2d(x, w, stride, padding))) < 1e-8


@pytest.mark.parametrize("stride,padding", [(1, 1), (2, 1), (1, 0)])
def test_conv2d_gradient(rng: np.random.Generator, stride: int, padding: int) -> None:
    x, w = _leaf(rng, (2, 2, 5, 5)), _leaf(rng, (3, 2, 3, 3))
    assert gradcheck(lambda a, b: ops.sum(ops.square(ops.conv2d(a, b, stride, padding))), [x, w]) < 1e-4


def test_conv2d_rejects_channel_mismatch() -> None:
    with pytest.raises(DimensionError):
        ops.conv2d(Tensor(np.ones((1, 2, 4, 4))), Tensor(np.ones((1, 3, 3, 3))))


@pytest.mark.parametrize("shape,pad", [((1, 1, 4, 4), 1), ((2, 3, 5, 3), 2), ((3, 6, 6), 1)])
def test_pad_reflect(rng: np.random.Generator, shape, pad: int) -> None:
    x = _leaf(rng, shape)
    out = ops.pad_reflect(x, pad).data
    expected = np.pad(x.data, [(0, 0)] * (len(shape) - 2) + [(pad, pad), (pad, pad)], mode="reflect")
    assert np.array_equal(out, expected)
    w = Tensor(rng.normal(size=out.shape))
    assert gradcheck(lambda t: ops.sum(ops.pad_reflect(t, pad) * w), x) < 1e-4


def test_upsample2x(rng: np.random.Generator) -> None:
    x = _leaf(rng, (1, 2, 3, 3))
    out = ops.upsample2x(x).data
    assert out.shape == (1, 2, 6, 6)
    assert np.array_equal(out[:, :, ::2, ::2], x.data)
    w = Tensor(rng.normal(size=out.shape))
    assert gradcheck(lambda t: ops.sum(ops.upsample2x(t) * w), x) < 1e-4


@pytest.mark.parametrize("axes", [(-1,), (1, 2, 3)])
def test_normalize_gradient(rng: np.random.Generator, axes) -> None:
    x = _leaf(rng, (2, 3, 4, 4))
    w = Tensor(rng.normal(size=(2, 3, 4, 4)))
    assert gradcheck(lambda t: ops.sum(ops.normalize(t, axes) * w), x) < 1e-4


def test_l2_normalize_rows_are_unit(rng: np.random.Generator) -> None:
    x = _leaf(rng, (5, 4))
    norms = np.linalg.norm(ops.l2_normalize(x).data, axis=-1)
    assert np.allclose(norms, 1.0)


@pytest.mark.parametrize("shape", [(3, 5), (2, 2, 4), (1, 7)])
def test_softmax_gradient_and_mask(rng: np.random.Generator, shape) -> None:
    x = _leaf(rng, shape)
    w = Tensor(rng.normal(size=shape))
    assert gradcheck(lambda t: ops.sum(ops.softmax(t) * w), x) < 1e-4
    mask = np.ones(shape, dtype=bool)
    mask[..., 0] = False
    y = ops.softmax(x, mask=mask).data
    assert np.all(y[..., 0] == 0)
    assert np.allclose(y.sum(axis=-1), 1.0)


def test_softmax_rejects_fully_masked_row() -> None:
    with pytest.raises(ContractError):
        ops.softmax(Tensor(np.zeros((2, 3))), mask=np.zeros((2, 3), dtype=bool))


def test_embedding_gradient_accumulates_repeats(rng: np.random.Generator) -> None:
    w = _leaf(rng, (5, 3))
    idx = np.array([[0, 2], [2, 4]])
    assert gradcheck(lambda t: ops.sum(ops.square(ops.embedding(t, idx))), w) < 1e-4
    with pytest.raises(DimensionError):
        ops.embedding(w, np.array([5]))


def test_straight_through_passes_gradient_unchanged(rng: np.random.Generator) -> None:
    z = _leaf(rng, (2, 3))
    q = rng.normal(size=(2, 3))
    w = rng.normal(size=(2, 3))
    with Tape() as tape:
        out = ops.straight_through(z, q)
        loss = ops.sum(out * Tensor(w))
    assert np.array_equal(out.data, q)
    tape.backward(loss)
    assert np.array_equal(z.grad, w)
