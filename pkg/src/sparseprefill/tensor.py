"""Minimal dense matrix substrate.

Matrices are 2-D numpy arrays stored in float32; every reduction
(matmul, pooling, softmax) accumulates in float64 before rounding back
to storage precision. Masked score positions use ``MASK_SENTINEL``, the
most negative finite float32, so that masked probabilities come out as
exactly zero instead of merely tiny.
"""

from __future__ import annotations

import numpy as np

STORAGE_DTYPE = np.float32
ACCUM_DTYPE = np.float64

# Additive mask sentinel: anything at or below this is treated as masked.
MASK_SENTINEL = float(np.finfo(np.float32).min)


def as_matrix(data) -> np.ndarray:
    """Coerce input to a 2-D float32 matrix, rejecting non-finite entries."""
    m = np.asarray(data, dtype=STORAGE_DTYPE)
    if m.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got ndim={m.ndim}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix contains non-finite entries")
    return m


def matmul_nt(a, b) -> np.ndarray:
    """a @ b.T with float64 accumulation. a is m x d, b is n x d."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.ndim != 2 or b.ndim != 2:
        raise ValueError("matmul_nt expects 2-D inputs")
    if a.shape[1] != b.shape[1]:
        raise ValueError(f"inner dimensions differ: {a.shape[1]} vs {b.shape[1]}")
    out = a.astype(ACCUM_DTYPE) @ b.astype(ACCUM_DTYPE).T
    return out.astype(STORAGE_DTYPE)


def mean_pool_rows(m, block: int) -> np.ndarray:
    """Mean over consecutive groups of `block` rows.

    A trailing partial group is averaged over its actual length, not the
    zero-padded length.
    """
    if block < 1:
        raise ValueError("block must be >= 1")
    m = np.asarray(m)
    if m.ndim != 2:
        raise ValueError("mean_pool_rows expects a 2-D input")
    n_rows = m.shape[0]
    starts = np.arange(0, n_rows, block)
    sums = np.add.reduceat(m.astype(ACCUM_DTYPE), starts, axis=0)
    lengths = np.minimum(starts + block, n_rows) - starts
    return (sums / lengths[:, None]).astype(STORAGE_DTYPE)


def softmax_rows(scores) -> np.ndarray:
    """Row-wise softmax, shifted by the row max before exponentiation.

    Entries at or below MASK_SENTINEL are masked and yield exactly 0.
    Rows that are entirely masked return all zeros.
    """
    s = np.asarray(scores, dtype=ACCUM_DTYPE)
    if s.ndim != 2:
        raise ValueError("softmax_rows expects a 2-D input")
    masked = s <= MASK_SENTINEL
    s = np.where(masked, -np.inf, s)
    row_max = np.max(s, axis=1, keepdims=True) if s.shape[1] else np.zeros((s.shape[0], 1))
    row_max = np.where(np.isfinite(row_max), row_max, 0.0)
    e = np.exp(s - row_max)
    e[masked] = 0.0
    denom = e.sum(axis=1, keepdims=True)
    out = np.divide(e, denom, out=np.zeros_like(e), where=denom > 0)
    return out.astype(STORAGE_DTYPE)


def seeded_gaussian(rows: int, cols: int, seed: int) -> np.ndarray:
    """Deterministic i.i.d. standard normal matrix.

    Uses numpy's PCG64 generator with the ziggurat standard_normal, which
    is bit-reproducible across platforms for a fixed seed.
    """
    if rows < 1 or cols < 1:
        raise ValueError("rows and cols must be >= 1")
    rng = np.random.Generator(np.random.PCG64(seed))
    return rng.standard_normal((rows, cols)).astype(STORAGE_DTYPE)
