"""Sparse attention executors and the per-head dispatcher.

Every executor is a thin layout adapter over the shared streaming
kernel, so all three patterns run through one code path. A-shape
executes its static tiles; Vertical-Slash runs estimation, the
point-range merge, then the hybrid tile+column kernel; Block-Sparse
runs pooled estimation then the tile kernel.
"""

from __future__ import annotations

import time

import numpy as np

from . import kernels
from .attention_ref import AttentionInputs
from .estimator import BlockIndices, estimate_block_sparse, estimate_vertical_slash
from .patterns import (
    AShape,
    BlockSparse,
    HeadPatternConfig,
    SparseLayout,
    VerticalSlash,
    a_shape_layout,
)
from .vs_index import build_vs_layout


def block_indices_to_layout(blocks: BlockIndices, seq_len: int, block_size: int) -> SparseLayout:
    starts = [[b * block_size for b in row] for row in blocks.rows]
    cols = [[] for _ in blocks.rows]
    return SparseLayout(seq_len, block_size, starts, cols)


def block_sparse_attention(inputs: AttentionInputs, blocks: BlockIndices, block_size: int) -> np.ndarray:
    """Streaming softmax over the selected key tiles of each row, with
    per-cell causal masking inside the diagonal tile."""
    layout = block_indices_to_layout(blocks, inputs.seq_len, block_size)
    layout.validate()
    return kernels.sparse_flash_attention(
        inputs.q, inputs.k, inputs.v, inputs.scale, block_size,
        layout.block_starts, layout.column_indices,
    )


def vertical_slash_attention(inputs: AttentionInputs, layout: SparseLayout) -> np.ndarray:
    """Tile loop first, then residual columns gathered in chips of B,
    sharing one streaming state per query row. A short final chip is
    processed as-is, never padded."""
    layout.validate()
    if layout.seq_len != inputs.seq_len:
        raise ValueError("layout seq_len does not match inputs")
    return kernels.sparse_flash_attention(
        inputs.q, inputs.k, inputs.v, inputs.scale, layout.block_size,
        layout.block_starts, layout.column_indices,
    )


def run_head(
    inputs: AttentionInputs, cfg: HeadPatternConfig, block_size: int = 64
) -> tuple[np.ndarray, SparseLayout]:
    out, layout, _, _ = run_head_timed(inputs, cfg, block_size)
    return out, layout


def run_head_timed(
    inputs: AttentionInputs, cfg: HeadPatternConfig, block_size: int = 64
) -> tuple[np.ndarray, SparseLayout, float, float]:
    """Run one head; returns (output, realized layout, t_estimate, t_sparse).

    t_estimate covers pattern estimation and index building, t_sparse the
    sparse attention computation itself.
    """
    s_len = inputs.seq_len
    t0 = time.perf_counter()
    if isinstance(cfg, AShape):
        layout = a_shape_layout(s_len, cfg, block_size)
        t1 = time.perf_counter()
        out = vertical_slash_attention(inputs, layout)
    elif isinstance(cfg, VerticalSlash):
        idx = estimate_vertical_slash(inputs.q, inputs.k, cfg)
        layout = build_vs_layout(idx, s_len, block_size)
        t1 = time.perf_counter()
        out = vertical_slash_attention(inputs, layout)
    elif isinstance(cfg, BlockSparse):
        blocks = estimate_block_sparse(inputs.q, inputs.k, cfg)
        layout = block_indices_to_layout(blocks, s_len, cfg.block_size)
        t1 = time.perf_counter()
        out = block_sparse_attention(inputs, blocks, cfg.block_size)
    else:
        raise TypeError(f"unknown pattern config: {cfg!r}")
    t2 = time.perf_counter()
    return out, layout, t1 - t0, t2 - t1
