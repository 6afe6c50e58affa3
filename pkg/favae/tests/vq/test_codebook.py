import logging

import numpy as np
import pytest

from favae.autograd import ops
from favae.autograd.tensor import Tape, Tensor
from favae.core.errors import ContractError, DimensionError, FormatError
from favae.nn.module import Parameter
from favae.tests.utils.oracles import brute_argmin
from favae.vq.codebook import Codebook, perplexity, quantization_loss


def test_exact_entry_maps_to_itself(rng: np.random.Generator) -> None:
    cb = Codebook(16, 4, rng=rng)
    z = Tensor(cb.entries.data[7][None, None, None, :].copy())
    z_q, indices = cb.quantize(z)
    assert indices.item() == 7
    assert np.allclose(z_q.data[0, 0, 0], cb.entries.data[7])


def test_nearer_entry_wins() -> None:
    cb = Codebook(2, 2, l2_normalize=False)
    cb.entries.data[...] = [[0.0, 0.0], [1.0, 1.0]]
    assert cb.nearest(np.array([0.9, 0.9])).item() == 1


def test_ties_resolve_to_the_lowest_index() -> None:
    cb = Codebook(3, 2, l2_normalize=False)
    cb.entries.data[...] = [[1.0, 0.0], [-1.0, 0.0], [1.0, 0.0]]
    assert cb.nearest(np.array([0.0, 0.0])).item() == 0
    assert cb.nearest(np.array([2.0, 0.0])).item() == 0


def test_nearest_matches_brute_force(rng: np.random.Generator) -> None:
    cb = Codebook(64, 8, l2_normalize=False, rng=rng)
    z = rng.normal(size=(10_000, 8))
    assert np.array_equal(cb.nearest(z), brute_argmin(z, cb.entries.data))


def test_l2_assignment_ignores_scale(rng: np.random.Generator) -> None:
    cb = Codebook(16, 4, rng=rng)
    z = rng.normal(size=(2, 3, 3, 4))
    assert np.array_equal(cb.nearest(z), cb.nearest(3.7 * z))


def test_width_mismatch_is_rejected() -> None:
    with pytest.raises(DimensionError):
        Codebook(4, 3).nearest(np.zeros((2, 4)))


def test_empty_codebook_is_rejected() -> None:
    with pytest.raises(ContractError):
        Codebook(0, 4)


def test_quantize_passes_gradient_straight_through(rng: np.random.Generator) -> None:
    cb = Codebook(8, 3, rng=rng)
    z = Tensor(rng.normal(size=(2, 2, 2, 3)), requires_grad=True)
    w = rng.normal(size=(2, 2, 2, 3))
    with Tape() as tape:
        z_q, _ = cb.quantize(z)
        loss = ops.sum(z_q * Tensor(w))
    tape.backward(loss)
    assert np.array_equal(z.grad, w)


def test_quantization_loss_values() -> None:
    z = Tensor(np.full((1, 2, 2, 1), 2.0))
    assert quantization_loss(z, z.data).item() == 0.0
    assert quantization_loss(z, np.zeros((1, 2, 2, 1)), 0.25).item() == pytest.approx(1.0)


def test_quantization_loss_reaches_only_z(rng: np.random.Generator) -> None:
    cb = Codebook(8, 3, mode="gradient", rng=rng)
    z = Tensor(rng.normal(size=(1, 2, 2, 3)), requires_grad=True)
    with Tape() as tape:
        z_q, _ = cb.quantize(z)
        loss = quantization_loss(z, z_q)
    tape.backward(loss)
    entries = cb.entries
    assert isinstance(entries, Parameter)
    assert np.all(entries.grad == 0)
    assert np.any(z.grad != 0)


def test_codebook_loss_moves_entries_only(rng: np.random.Generator) -> None:
    cb = Codebook(8, 3, mode="gradient", l2_normalize=False, rng=rng)
    z = Tensor(rng.normal(size=(1, 2, 2, 3)), requires_grad=True)
    indices = cb.nearest(z.data)
    with Tape() as tape:
        loss = cb.codebook_loss(z, indices)
    tape.backward(loss)
    assert np.all(z.grad == 0)
    assert cb.entries.grad is not None and np.any(cb.entries.grad != 0)


def test_ema_without_memory_takes_the_batch_mean(rng: np.random.Generator) -> None:
    cb = Codebook(4, 2, decay=0.0, l2_normalize=False, dead_code_threshold=0, rng=rng)
    z = rng.normal(size=(32, 2))
    idx = cb.nearest(z)
    cb.ema_update(z, idx)
    for k in np.unique(idx):
        assert np.allclose(cb.entries.data[k], z[idx == k].mean(axis=0), rtol=1e-4, atol=1e-6)


def test_ema_converges_to_cluster_means(rng: np.random.Generator) -> None:
    cb = Codebook(4, 3, decay=0.99, l2_normalize=False, dead_code_threshold=0, rng=rng)
    z = rng.normal(size=(40, 3))
    idx = np.arange(40) % 3
    for _ in range(1000):
        cb.ema_update(z, idx)
    for k in range(3):
        assert np.max(np.abs(cb.entries.data[k] - z[idx == k].mean(axis=0))) < 1e-3
    assert np.all(cb.ema_cluster_size >= 0)


def test_unused_entry_keeps_its_direction(rng: np.random.Generator) -> None:
    cb = Codebook(4, 3, l2_normalize=False, dead_code_threshold=0, rng=rng)
    before = cb.entries.data[3].copy()
    for _ in range(10):
        cb.ema_update(rng.normal(size=(6, 3)), np.zeros(6, dtype=np.int64))
    after = cb.entries.data[3]
    cos = after @ before / (np.linalg.norm(after) * np.linalg.norm(before))
    assert cos == pytest.approx(1.0)
    assert cb.ema_cluster_size[3] < 1.0


def test_ema_keeps_unit_norm_entries(rng: np.random.Generator) -> None:
    cb = Codebook(8, 4, rng=rng)
    for _ in range(5):
        z = rng.normal(size=(2, 3, 3, 4))
        cb.ema_update(z, cb.nearest(z))
    assert np.allclose(np.linalg.norm(cb.entries.data, axis=1), 1.0, rtol=1e-6)


def test_dead_entries_are_reseeded_from_the_batch(
    rng: np.random.Generator, caplog: pytest.LogCaptureFixture
) -> None:
    cb = Codebook(4, 2, l2_normalize=False, dead_code_threshold=3, rng=rng)
    z = rng.normal(size=(5, 2))
    idx = np.zeros(5, dtype=np.int64)
    with caplog.at_level(logging.WARNING):
        for _ in range(3):
            cb.ema_update(z, idx)
    assert "Reseeding 3 dead codebook entries" in caplog.text
    for k in (1, 2, 3):
        assert any(np.array_equal(cb.entries.data[k], row) for row in z)
        assert cb.idle_steps[k] == 0


def test_usage_tracking() -> None:
    cb = Codebook(4, 2)
    cb.track_usage(np.array([0, 0, 2]))
    assert cb.usage_counts.tolist() == [2, 0, 1, 0]
    assert cb.idle_steps.tolist() == [0, 1, 0, 1]


def test_serialised_state_restores_assignments(rng: np.random.Generator) -> None:
    cb = Codebook(8, 3, rng=rng, dtype="float32")
    z = rng.normal(size=(16, 3))
    cb.ema_update(z, cb.nearest(z))
    clone = Codebook.from_bytes(cb.to_bytes(), dtype="float32")
    assert clone.updates == 1
    assert np.array_equal(clone.entries.data, cb.entries.data)
    assert np.array_equal(clone.nearest(z), cb.nearest(z))
    assert clone.mode == "ema" and clone.l2_normalize


def test_ema_buffers_keep_the_entry_dtype(rng: np.random.Generator) -> None:
    cb = Codebook(8, 3, rng=rng, dtype="float32")
    for _ in range(3):
        z = rng.normal(size=(16, 3))
        cb.ema_update(z, cb.nearest(z))
    assert cb.ema_cluster_size.dtype == np.float32
    assert cb.ema_embed_sum.dtype == np.float32
    clone = Codebook.from_bytes(cb.to_bytes(), dtype="float32")
    assert np.array_equal(clone.ema_cluster_size, cb.ema_cluster_size)
    assert np.array_equal(clone.ema_embed_sum, cb.ema_embed_sum)


def test_reseed_seed_travels_with_the_blob(rng: np.random.Generator) -> None:
    cb = Codebook(4, 2, l2_normalize=False, dead_code_threshold=1, seed=7, rng=rng, dtype="float32")
    z = rng.normal(size=(6, 2))
    idx = np.zeros(6, dtype=np.int64)
    cb.ema_update(z, idx)
    clone = Codebook.from_bytes(cb.to_bytes(), dtype="float32", dead_code_threshold=1)
    assert clone.seed == 7
    restored = Codebook(4, 2, l2_normalize=False, dead_code_threshold=1, dtype="float32")
    restored.load_bytes(cb.to_bytes())
    assert restored.seed == 7

    z2 = rng.normal(size=(6, 2))
    cb.ema_update(z2, idx)
    restored.ema_update(z2, idx)
    assert np.array_equal(restored.entries.data, cb.entries.data)


def test_blob_errors() -> None:
    blob = Codebook(4, 2).to_bytes()
    with pytest.raises(FormatError):
        Codebook.from_bytes(b"XXXX" + blob[4:])
    with pytest.raises(FormatError):
        Codebook.from_bytes(blob[:-3])
    with pytest.raises(FormatError):
        Codebook(5, 2).load_bytes(blob)


@pytest.mark.parametrize(
    "indices,size,expected",
    [(np.zeros(10, dtype=np.int64), 4, 1.0), (np.arange(16), 16, 16.0), (np.array([0, 0, 1, 1]), 4, 2.0)],
)
def test_perplexity(indices: np.ndarray, size: int, expected: float) -> None:
    assert perplexity(indices, size) == pytest.approx(expected)
