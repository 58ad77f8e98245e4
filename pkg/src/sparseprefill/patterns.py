"""Pattern configurations, the unified sparse layout, and the cost model.

A ``SparseLayout`` describes, per query-block row, the B x B tiles
(given by their key-start offsets) plus residual individual key columns
gathered in chips of B. Tiles and columns in one row are disjoint. All
indexing is 0-based.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Union

import numpy as np

CONFIG_FORMAT_VERSION = 1

DEFAULT_BLOCK_SIZE = 64
DEFAULT_LAST_Q = 64


@dataclass(frozen=True)
class AShape:
    """Static pattern: initial (sink) tokens plus a local diagonal window."""

    global_tokens: int
    local_window: int

    def __post_init__(self):
        if self.global_tokens < 1 or self.local_window < 1:
            raise ValueError("A-shape counts must be >= 1")


@dataclass(frozen=True)
class VerticalSlash:
    """Dynamic pattern: top key columns plus top diagonal offsets."""

    k_v: int
    k_s: int
    last_q: int = DEFAULT_LAST_Q

    def __post_init__(self):
        if self.k_v < 1 or self.k_s < 1 or self.last_q < 1:
            raise ValueError("Vertical-Slash counts must be >= 1")


@dataclass(frozen=True)
class BlockSparse:
    """Dynamic pattern: top key blocks per query-block row."""

    k_b: int
    block_size: int = DEFAULT_BLOCK_SIZE

    def __post_init__(self):
        if self.k_b < 1 or self.block_size < 1:
            raise ValueError("Block-Sparse counts must be >= 1")


HeadPatternConfig = Union[AShape, VerticalSlash, BlockSparse]

PATTERN_NAMES = {AShape: "a_shape", VerticalSlash: "vertical_slash", BlockSparse: "block_sparse"}


def n_block_rows(seq_len: int, block_size: int) -> int:
    return (seq_len + block_size - 1) // block_size


@dataclass
class SparseLayout:
    seq_len: int
    block_size: int
    block_starts: list = field(default_factory=list)  # per row: sorted key-start offsets
    column_indices: list = field(default_factory=list)  # per row: sorted residual columns

    def n_rows(self) -> int:
        return n_block_rows(self.seq_len, self.block_size)

    def query_range(self, row: int) -> tuple[int, int]:
        start = row * self.block_size
        return start, min(start + self.block_size, self.seq_len)

    def validate(self) -> None:
        n = self.n_rows()
        if len(self.block_starts) != n or len(self.column_indices) != n:
            raise ValueError("layout must have one tile list and one column list per row")
        for r in range(n):
            _, q_end = self.query_range(r)
            starts = list(self.block_starts[r])
            cols = list(self.column_indices[r])
            if any(starts[i] >= starts[i + 1] for i in range(len(starts) - 1)):
                raise ValueError(f"row {r}: tile starts must be strictly increasing")
            if any(starts[i + 1] - starts[i] < self.block_size for i in range(len(starts) - 1)):
                raise ValueError(f"row {r}: tiles overlap")
            if any(cols[i] >= cols[i + 1] for i in range(len(cols) - 1)):
                raise ValueError(f"row {r}: columns must be strictly increasing")
            for s in starts:
                if s < 0 or s >= q_end:
                    raise ValueError(f"row {r}: tile start {s} outside causal range")
            for c in cols:
                if c < 0 or c >= q_end:
                    raise ValueError(f"row {r}: column {c} outside causal range")
                # disjointness: column must not fall inside any tile
                for s in starts:
                    if s <= c < s + self.block_size:
                        raise ValueError(f"row {r}: column {c} duplicates tile [{s}, {s + self.block_size})")


def a_shape_layout(seq_len: int, cfg: AShape, block_size: int) -> SparseLayout:
    """Static A-shape layout: tiles over the sink prefix plus a trailing
    local window per query-block row. Input-independent and purely
    block-structured (no residual columns)."""
    if block_size < 1:
        raise ValueError("block_size must be >= 1")
    b = block_size
    layout = SparseLayout(seq_len, b, [], [])
    for r in range(n_block_rows(seq_len, b)):
        q_start, q_end = r * b, min((r + 1) * b, seq_len)
        starts = set()
        sink_end = min(cfg.global_tokens, q_end)
        for s in range(0, sink_end, b):
            starts.add(s)
        local_start = max(0, q_start - cfg.local_window) // b * b
        for s in range(local_start, q_end, b):
            starts.add(s)
        layout.block_starts.append(sorted(starts))
        layout.column_indices.append([])
    return layout


def layout_to_mask(layout: SparseLayout) -> np.ndarray:
    """Dense boolean mask equivalent of a layout (causally clipped)."""
    s_len = layout.seq_len
    b = layout.block_size
    mask = np.zeros((s_len, s_len), dtype=bool)
    for r in range(layout.n_rows()):
        q_start, q_end = layout.query_range(r)
        for s in layout.block_starts[r]:
            mask[q_start:q_end, max(s, 0):min(s + b, s_len)] = True
        for c in layout.column_indices[r]:
            mask[q_start:q_end, c] = True
    rows = np.arange(s_len)
    mask &= rows[:, None] >= rows[None, :]
    return mask


def layout_area(layout: SparseLayout) -> int:
    """Computed cells at kernel granularity.

    Tile cells are causally clipped (the diagonal tile counts only its
    lower-triangular part). Residual columns are gathered in chips of B,
    so the per-row column count is rounded up to a multiple of B and a
    chip costs its full width for every query row in the block.
    """
    b = layout.block_size
    total = 0
    for r in range(layout.n_rows()):
        q_start, q_end = layout.query_range(r)
        for s in layout.block_starts[r]:
            total += _clipped_tile_cells(s, b, q_start, q_end, layout.seq_len)
        n_cols = len(layout.column_indices[r])
        chips = (n_cols + b - 1) // b
        total += chips * b * (q_end - q_start)
    return total


def _clipped_tile_cells(s: int, b: int, q_start: int, q_end: int, seq_len: int) -> int:
    """Cells of tile [s, s+b) in query rows [q_start, q_end) with j <= i, j < seq_len."""
    lo = max(s, 0)
    hi = min(s + b, seq_len)
    if hi <= lo:
        return 0
    # queries with a full tile row: i + 1 >= hi
    full_from = max(q_start, hi - 1)
    full = max(0, q_end - full_from) * (hi - lo)
    # queries on the diagonal ramp: lo <= i + 1 < hi -> width i + 1 - lo
    ramp_lo = max(q_start, lo)
    ramp_hi = min(q_end, hi - 1)
    if ramp_hi > ramp_lo:
        n = ramp_hi - ramp_lo
        first = ramp_lo + 1 - lo
        last = ramp_hi - lo
        full += n * (first + last) // 2
    return full


def causal_area(seq_len: int) -> int:
    return seq_len * (seq_len + 1) // 2


def flops_in_kernel(cfg: HeadPatternConfig, seq_len: int, head_dim: int, block_size: int) -> int:
    """Modeled kernel FLOPs: 4 * d * computed-cell area.

    The factor 4*d counts the QK^T and PV matmuls at 2 FLOPs per
    multiply-add each; softmax cost is ignored (a shared constant that
    cancels in any candidate ratio).

    A-shape uses its realized (static) layout exactly. Block-Sparse
    counts min(k_b, row+1) tiles per row with the diagonal tile clipped
    to its lower triangle, matching the realized layout. Vertical-Slash
    is data-dependent, so its area is modeled: slash coverage as a
    contiguous band of k_s diagonals rounded up to tiles, plus column
    chips of B for k_v columns, both capped at the row's causal width.
    """
    return 4 * head_dim * _model_area(cfg, seq_len, block_size)


def _model_area(cfg: HeadPatternConfig, seq_len: int, block_size: int) -> int:
    b = block_size
    if isinstance(cfg, AShape):
        return layout_area(a_shape_layout(seq_len, cfg, b))
    if isinstance(cfg, BlockSparse):
        b = cfg.block_size
        area = 0
        for r in range(n_block_rows(seq_len, b)):
            q_start = r * b
            h = min(b, seq_len - q_start)
            n_sel = min(cfg.k_b, r + 1)
            area += (n_sel - 1) * h * b + h * (h + 1) // 2
        return area
    if isinstance(cfg, VerticalSlash):
        area = 0
        for r in range(n_block_rows(seq_len, b)):
            q_start = r * b
            q_end = min(q_start + b, seq_len)
            h = q_end - q_start
            w = q_end  # causal key capacity of the row
            slash_tiles = min((cfg.k_s + b - 1 + b - 1) // b, (w + b - 1) // b)
            col_chips = (min(cfg.k_v, w) + b - 1) // b
            row_cells = min(h * (slash_tiles * b + col_chips * b), q_start * h + h * (h + 1) // 2)
            area += row_cells
        return area
    raise TypeError(f"unknown pattern config: {cfg!r}")


# --- pattern config document (JSON) ---------------------------------------


def config_to_entry(layer: int, head: int, cfg: HeadPatternConfig) -> dict:
    params = {k: getattr(cfg, k) for k in cfg.__dataclass_fields__}
    return {"layer": layer, "head": head, "pattern": PATTERN_NAMES[type(cfg)], "params": params}


def config_from_entry(entry: dict) -> tuple[int, int, HeadPatternConfig]:
    by_name = {v: k for k, v in PATTERN_NAMES.items()}
    name = entry["pattern"]
    if name not in by_name:
        raise ValueError(f"unknown pattern name: {name!r}")
    cfg = by_name[name](**entry["params"])
    return int(entry["layer"]), int(entry["head"]), cfg


def save_pattern_configs(path, entries: list[dict]) -> None:
    doc = {"format_version": CONFIG_FORMAT_VERSION, "heads": entries}
    with open(path, "w") as f:
        json.dump(doc, f, indent=2, sort_keys=True)
        f.write("\n")


def load_pattern_configs(path) -> list[dict]:
    with open(path) as f:
        doc = json.load(f)
    version = doc.get("format_version")
    if version != CONFIG_FORMAT_VERSION:
        raise ValueError(f"unsupported pattern config format_version: {version!r}")
    return doc["heads"]
