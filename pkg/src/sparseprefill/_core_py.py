"""Pure-NumPy streaming sparse attention kernel (fallback backend).

Same contract as the compiled extension in ``_core.pyx``: per
query-block row, a flash-style online softmax over the row's tiles,
then over its residual columns gathered in chips of B, sharing one
running (max, sum, accumulator) state. Inputs are float32; all
accumulation is float64.
"""

from __future__ import annotations

import numpy as np

BACKEND_NAME = "python"


def sparse_flash_rows(
    q: np.ndarray,
    k: np.ndarray,
    v: np.ndarray,
    scale: float,
    block_size: int,
    tile_starts: np.ndarray,
    tile_offsets: np.ndarray,
    col_indices: np.ndarray,
    col_offsets: np.ndarray,
) -> np.ndarray:
    s_len, d = q.shape
    b = block_size
    n_rows = (s_len + b - 1) // b
    q64 = q.astype(np.float64)
    k64 = k.astype(np.float64)
    v64 = v.astype(np.float64)
    out = np.zeros((s_len, d), dtype=np.float32)

    for r in range(n_rows):
        q_start = r * b
        q_end = min(q_start + b, s_len)
        h = q_end - q_start
        q_chip = q64[q_start:q_end]
        queries = np.arange(q_start, q_end)

        m = np.full(h, -np.inf)
        l = np.zeros(h)
        acc = np.zeros((h, d))

        for t in range(tile_offsets[r], tile_offsets[r + 1]):
            s = int(tile_starts[t])
            ks, ke = max(s, 0), min(s + b, s_len)
            if ke <= ks:
                continue
            keys = np.arange(ks, ke)
            scores = scale * (q_chip @ k64[ks:ke].T)
            scores[queries[:, None] < keys[None, :]] = -np.inf
            m, l, acc = _online_update(scores, v64[ks:ke], m, l, acc)

        cols = col_indices[col_offsets[r]: col_offsets[r + 1]]
        for c0 in range(0, len(cols), b):
            chip = cols[c0: c0 + b]
            scores = scale * (q_chip @ k64[chip].T)
            scores[queries[:, None] < chip[None, :]] = -np.inf
            m, l, acc = _online_update(scores, v64[chip], m, l, acc)

        chunk = np.divide(acc, l[:, None], out=np.zeros_like(acc), where=l[:, None] > 0)
        out[q_start:q_end] = chunk.astype(np.float32)
    return out


def _online_update(scores, v_chip, m, l, acc):
    m_new = np.maximum(m, scores.max(axis=1))
    shift = np.where(np.isfinite(m_new), m_new, 0.0)
    p = np.exp(scores - shift[:, None])
    alpha = np.exp(m - shift)
    l = alpha * l + p.sum(axis=1)
    acc = alpha[:, None] * acc + p @ v_chip
    return m_new, l, acc
