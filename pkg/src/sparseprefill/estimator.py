"""Online sparsity estimation.

Vertical-Slash importance is estimated from the attention of only the
final ``last_q`` query rows against all keys; Block-Sparse importance
from mean-pooled Q and K at block granularity. Selection is a
deterministic top-k with ties broken toward the smaller index.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .patterns import BlockSparse, VerticalSlash, n_block_rows
from .tensor import ACCUM_DTYPE, MASK_SENTINEL, mean_pool_rows, softmax_rows


@dataclass(frozen=True)
class VSIndices:
    """Selected key columns (ascending) and slash offsets (descending).

    Offset o means the diagonal key = query - o.
    """

    vertical: np.ndarray
    slash: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vertical, dtype=np.int64)
        s = np.asarray(self.slash, dtype=np.int64)
        object.__setattr__(self, "vertical", v)
        object.__setattr__(self, "slash", s)
        if v.size and np.any(np.diff(v) <= 0):
            raise ValueError("vertical indices must be strictly ascending")
        if s.size and np.any(np.diff(s) >= 0):
            raise ValueError("slash offsets must be strictly descending")
        if (v.size and v.min() < 0) or (s.size and s.min() < 0):
            raise ValueError("indices must be non-negative")


@dataclass(frozen=True)
class BlockIndices:
    """Per query-block row: sorted selected key-block indices (b <= row)."""

    rows: tuple

    def __post_init__(self):
        rows = tuple(tuple(int(b) for b in row) for row in self.rows)
        object.__setattr__(self, "rows", rows)
        for r, row in enumerate(rows):
            if any(row[i] >= row[i + 1] for i in range(len(row) - 1)):
                raise ValueError(f"row {r}: block indices must be strictly ascending")
            if any(b < 0 or b > r for b in row):
                raise ValueError(f"row {r}: block index outside causal range")


def argtopk(values, k: int) -> np.ndarray:
    """Indices of the k largest values, ties broken toward the smaller
    index, returned in descending-value order. If k exceeds the length,
    all indices are returned."""
    if k < 1:
        raise ValueError("k must be >= 1")
    values = np.asarray(values)
    order = np.argsort(-values, kind="stable")
    return order[: min(k, values.size)].astype(np.int64)


def _force_include(selected: np.ndarray, scores: np.ndarray, index: int) -> np.ndarray:
    """Replace the weakest selected index with `index` if missing.

    `selected` is in descending-score order, so the weakest is last.
    """
    if index in selected:
        return selected
    out = selected.copy()
    out[-1] = index
    return out


def estimate_vertical_slash(q, k, cfg: VerticalSlash) -> VSIndices:
    """Score columns and diagonals from the last `last_q` query rows.

    Column score: sum of estimated attention down each column. Slash
    score: raw sum over cells with (absolute query - key) == offset.
    Column 0 and offset 0 are force-included so no query row is left
    without a key.
    """
    q = np.asarray(q)
    k = np.asarray(k)
    s_len, d = q.shape
    if cfg.last_q > s_len:
        raise ValueError(f"last_q={cfg.last_q} exceeds seq_len={s_len}")
    last_q = cfg.last_q
    k_v = min(cfg.k_v, s_len)
    k_s = min(cfg.k_s, s_len)

    scale = 1.0 / math.sqrt(d)
    q_tail = q[s_len - last_q:].astype(ACCUM_DTYPE)
    scores = scale * (q_tail @ k.astype(ACCUM_DTYPE).T)
    abs_q = np.arange(s_len - last_q, s_len)
    keys = np.arange(s_len)
    scores[abs_q[:, None] < keys[None, :]] = MASK_SENTINEL
    est = softmax_rows(scores).astype(ACCUM_DTYPE)

    vertical_score = est.sum(axis=0)
    offsets = abs_q[:, None] - keys[None, :]
    causal = offsets >= 0
    slash_score = np.bincount(offsets[causal].ravel(), weights=est[causal].ravel(), minlength=s_len)

    vert = _force_include(argtopk(vertical_score, k_v), vertical_score, 0)
    slash = _force_include(argtopk(slash_score, k_s), slash_score, 0)
    return VSIndices(vertical=np.sort(vert), slash=-np.sort(-slash))


def estimate_block_sparse(q, k, cfg: BlockSparse) -> BlockIndices:
    """Select top-k_b key blocks per query-block row from pooled scores.

    Pooled Q K^T equals the block-tile means of the full score matrix
    (mean pooling and matmul commute), so the block-level softmax is a
    faithful coarse view. The diagonal block is always kept.
    """
    q = np.asarray(q)
    k = np.asarray(k)
    s_len, d = q.shape
    b = cfg.block_size
    scale = 1.0 / math.sqrt(d)

    q_pool = mean_pool_rows(q, b).astype(ACCUM_DTYPE)
    k_pool = mean_pool_rows(k, b).astype(ACCUM_DTYPE)
    scores = scale * (q_pool @ k_pool.T)
    n = n_block_rows(s_len, b)
    block_rows = np.arange(n)
    scores[block_rows[:, None] < block_rows[None, :]] = MASK_SENTINEL
    est = softmax_rows(scores).astype(ACCUM_DTYPE)

    rows = []
    for r in range(n):
        k_eff = min(cfg.k_b, r + 1)
        sel = _force_include(argtopk(est[r, : r + 1], k_eff), est[r, : r + 1], r)
        rows.append(sorted(int(x) for x in sel))
    return BlockIndices(rows=tuple(rows))
