"""Shared helpers: random inputs, brute-force oracles, planted workloads."""

import numpy as np
import pytest

from sparseprefill.attention_ref import AttentionInputs
from sparseprefill.tensor import seeded_gaussian


def random_inputs(seq_len: int, head_dim: int, seed: int) -> AttentionInputs:
    return AttentionInputs(
        q=seeded_gaussian(seq_len, head_dim, seed),
        k=seeded_gaussian(seq_len, head_dim, seed + 1),
        v=seeded_gaussian(seq_len, head_dim, seed + 2),
    )


def vs_mask_bruteforce(vertical, slash, seq_len: int) -> np.ndarray:
    """Set-union oracle for the vertical/slash covered-cell set."""
    mask = np.zeros((seq_len, seq_len), dtype=bool)
    for c in vertical:
        mask[c:, c] = True
    for o in slash:
        idx = np.arange(o, seq_len)
        mask[idx, idx - o] = True
    return mask


@pytest.fixture
def rng():
    return np.random.Generator(np.random.PCG64(12345))
