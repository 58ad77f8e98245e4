"""Point-range two-way merge: VSIndices -> SparseLayout.

Per query-block row, each slash offset o maps to the key range
[q_start - o, q_end - o). Ranges arrive in ascending start order
(offsets are sorted descending) and are coalesced when they overlap or
abut at tile granularity. Vertical indices are points: a point left of
the current range becomes a residual column, a point inside the range's
tile cover is absorbed. Each point and range is inspected at most once,
so one row costs O(k_v + k_s).

All indexing here is 0-based; negative range starts are clipped to 0
because the slash still intersects the row's causal region.
"""

from __future__ import annotations

import numpy as np

from .estimator import VSIndices
from .patterns import SparseLayout, n_block_rows


def build_vs_layout(idx: VSIndices, seq_len: int, block_size: int) -> SparseLayout:
    layout, _ = build_vs_layout_with_stats(idx, seq_len, block_size)
    return layout


def build_vs_layout_with_stats(
    idx: VSIndices, seq_len: int, block_size: int
) -> tuple[SparseLayout, list[int]]:
    """Build the layout and return the merge-loop operation count per row."""
    if block_size < 1:
        raise ValueError("block_size must be >= 1")
    points = np.asarray(idx.vertical, dtype=np.int64)
    slashes = np.asarray(idx.slash, dtype=np.int64)
    if points.size and (points.max() >= seq_len or points.min() < 0):
        raise ValueError("vertical index out of range")
    if slashes.size and (slashes.max() >= seq_len or slashes.min() < 0):
        raise ValueError("slash offset out of range")

    b = block_size
    layout = SparseLayout(seq_len, b, [], [])
    ops_per_row = []
    for r in range(n_block_rows(seq_len, b)):
        q_start = r * b
        q_end = min(q_start + b, seq_len)
        tiles: list[int] = []
        cols: list[int] = []
        jv = 0
        ops = 0

        def cover_end_of(cs: int, ce: int) -> int:
            return cs + -(-(ce - cs) // b) * b

        def flush(cs: int, ce: int) -> None:
            nonlocal jv, ops
            cover_end = cover_end_of(cs, ce)
            while jv < points.size and points[jv] < cover_end:
                if points[jv] < cs:
                    cols.append(int(points[jv]))
                jv += 1
                ops += 1
            s = cs
            while s < ce:
                tiles.append(s)
                s += b
                ops += 1

        cur_start = cur_end = None
        for o in slashes:
            if o >= q_end:  # diagonal entirely left of key 0 for this row
                continue
            ops += 1
            rs = max(0, q_start - int(o))
            re = q_end - int(o)
            if cur_start is None:
                cur_start, cur_end = rs, re
            elif rs <= cur_end or rs < cover_end_of(cur_start, cur_end):
                cur_end = max(cur_end, re)
            else:
                flush(cur_start, cur_end)
                cur_start, cur_end = rs, re
        if cur_start is not None:
            flush(cur_start, cur_end)
        # trailing points right of every range
        while jv < points.size:
            if points[jv] < q_end:
                cols.append(int(points[jv]))
            jv += 1
            ops += 1

        layout.block_starts.append(tiles)
        layout.column_indices.append(cols)
        ops_per_row.append(ops)
    return layout, ops_per_row
