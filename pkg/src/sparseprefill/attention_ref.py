"""Dense reference attention: the ground truth for every sparse path.

All paths here are causal. Masked positions receive ``MASK_SENTINEL``
additively before softmax, so masked probabilities are exactly zero and
fully masked rows produce zero output rows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .tensor import ACCUM_DTYPE, MASK_SENTINEL, STORAGE_DTYPE, softmax_rows


@dataclass(frozen=True)
class AttentionInputs:
    q: np.ndarray
    k: np.ndarray
    v: np.ndarray
    scale: float | None = None

    def __post_init__(self):
        for name in ("q", "k", "v"):
            arr = np.ascontiguousarray(getattr(self, name), dtype=STORAGE_DTYPE)
            if arr.ndim != 2:
                raise ValueError(f"{name} must be 2-D")
            object.__setattr__(self, name, arr)
        if not (self.q.shape == self.k.shape == self.v.shape):
            raise ValueError("q, k, v must share the same shape")
        s, d = self.q.shape
        if s < 1 or d < 1:
            raise ValueError("need seq_len >= 1 and head_dim >= 1")
        if self.scale is None:
            object.__setattr__(self, "scale", 1.0 / math.sqrt(d))

    @property
    def seq_len(self) -> int:
        return self.q.shape[0]

    @property
    def head_dim(self) -> int:
        return self.q.shape[1]


def _validate_causal_mask(mask: np.ndarray, seq_len: int) -> np.ndarray:
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != (seq_len, seq_len):
        raise ValueError(f"mask must be {seq_len}x{seq_len}")
    if np.any(np.triu(mask, 1)):
        raise ValueError("mask must be a causal subset (no key > query bits)")
    return mask


def _masked_scores(inputs: AttentionInputs, mask: np.ndarray) -> np.ndarray:
    scores = inputs.scale * (
        inputs.q.astype(ACCUM_DTYPE) @ inputs.k.astype(ACCUM_DTYPE).T
    )
    scores[~mask] = MASK_SENTINEL
    return scores


def causal_probabilities(inputs: AttentionInputs) -> np.ndarray:
    """The dense causal attention probability matrix A."""
    s = inputs.seq_len
    mask = np.tril(np.ones((s, s), dtype=bool))
    return softmax_rows(_masked_scores(inputs, mask))


def dense_causal_attention(inputs: AttentionInputs) -> np.ndarray:
    probs = causal_probabilities(inputs)
    out = probs.astype(ACCUM_DTYPE) @ inputs.v.astype(ACCUM_DTYPE)
    return out.astype(STORAGE_DTYPE)


def masked_attention_oracle(inputs: AttentionInputs, mask) -> np.ndarray:
    """Attention under an arbitrary causal-subset mask.

    Rows with no unmasked position yield zero output rows.
    """
    mask = _validate_causal_mask(mask, inputs.seq_len)
    probs = softmax_rows(_masked_scores(inputs, mask))
    out = probs.astype(ACCUM_DTYPE) @ inputs.v.astype(ACCUM_DTYPE)
    return out.astype(STORAGE_DTYPE)


def streaming_softmax_attention(inputs: AttentionInputs, block: int) -> np.ndarray:
    """Flash-style online-softmax causal attention over key chunks.

    Maintains a running max, running sum, and rescale factor per query
    row; numerically equivalent to the dense path. The ragged final
    chunk is shortened, never padded.
    """
    if block < 1:
        raise ValueError("block must be >= 1")
    s, d = inputs.q.shape
    q64 = inputs.q.astype(ACCUM_DTYPE)
    k64 = inputs.k.astype(ACCUM_DTYPE)
    v64 = inputs.v.astype(ACCUM_DTYPE)

    m = np.full(s, -np.inf)
    l = np.zeros(s)
    acc = np.zeros((s, d))
    rows = np.arange(s)

    for c0 in range(0, s, block):
        c1 = min(c0 + block, s)
        scores = inputs.scale * (q64 @ k64[c0:c1].T)
        keys = np.arange(c0, c1)
        scores[rows[:, None] < keys[None, :]] = -np.inf

        m_new = np.maximum(m, scores.max(axis=1))
        # shift=0 for rows that have seen nothing yet keeps exp() finite;
        # their p rows are all zero so the state stays untouched.
        shift = np.where(np.isfinite(m_new), m_new, 0.0)
        p = np.exp(scores - shift[:, None])
        alpha = np.exp(m - shift)
        l = alpha * l + p.sum(axis=1)
        acc = alpha[:, None] * acc + p @ v64[c0:c1]
        m = m_new

    out = np.divide(acc, l[:, None], out=np.zeros_like(acc), where=l[:, None] > 0)
    return out.astype(STORAGE_DTYPE)


def attention_recall(mask, inputs: AttentionInputs) -> float:
    """Fraction of dense causal attention mass covered by the mask.

    Ground truth is always the recomputed dense probability matrix,
    never the sparse path's own probabilities.
    """
    mask = _validate_causal_mask(mask, inputs.seq_len)
    probs = causal_probabilities(inputs).astype(ACCUM_DTYPE)
    total = probs.sum()
    if total <= 0:
        return 0.0
    return float(probs[mask].sum() / total)
