"""Slow, literal reference implementations used as test oracles."""
import numpy as np


def naive_dft2(x: np.ndarray) -> np.ndarray:
    """Quadruple loop over (u, v, x, y) for a single [M, N] map."""
    m, n = x.shape
    out = np.zeros((m, n), dtype=np.complex128)
    for u in range(m):
        for v in range(n):
            acc = 0j
            for i in range(m):
                for j in range(n):
                    acc += x[i, j] * np.exp(-2j * np.pi * (u * i / m + v * j / n))
            out[u, v] = acc
    return out


def naive_ffl(a: np.ndarray, c: np.ndarray) -> float:
    """Mean of |ΔF|³ over every [M, N] map of a [..., M, N] pair."""
    diff = (a - c).reshape(-1, *a.shape[-2:])
    total = 0.0
    for d in diff:
        total += float((np.abs(naive_dft2(d)) ** 3).sum())
    return total / diff.size


def naive_conv2d(x: np.ndarray, w: np.ndarray, stride: int, padding: int) -> np.ndarray:
    b, c, h, wd = x.shape
    o, _, k, _ = w.shape
    xp = np.pad(x, ((0, 0), (0, 0), (padding, padding), (padding, padding)))
    ho = (h + 2 * padding - k) // stride + 1
    wo = (wd + 2 * padding - k) // stride + 1
    out = np.zeros((b, o, ho, wo))
    for bi in range(b):
        for oi in range(o):
            for i in range(ho):
                for j in range(wo):
                    patch = xp[bi, :, i * stride : i * stride + k, j * stride : j * stride + k]
                    out[bi, oi, i, j] = float((patch * w[oi]).sum())
    return out


def naive_matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    m, k = a.shape
    n = b.shape[1]
    out = np.zeros((m, n))
    for i in range(m):
        for j in range(n):
            for t in range(k):
                out[i, j] += a[i, t] * b[t, j]
    return out


def brute_argmin(z: np.ndarray, entries: np.ndarray) -> np.ndarray:
    """Index of the nearest entry per row, scanning every entry; first wins
    on ties."""
    out = np.zeros(z.shape[0], dtype=np.int64)
    for i, row in enumerate(z):
        best, best_d = 0, np.inf
        for k, e in enumerate(entries):
            d = float(((row - e) ** 2).sum())
            if d < best_d:
                best, best_d = k, d
        out[i] = best
    return out


def softmax_nll(logits: np.ndarray, targets: np.ndarray) -> float:
    flat = logits.reshape(-1, logits.shape[-1])
    t = targets.reshape(-1)
    total = 0.0
    for row, target in zip(flat, t, strict=True):
        p = np.exp(row) / np.exp(row).sum()
        total -= float(np.log(p[target]))
    return total / t.size
