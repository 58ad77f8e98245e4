"""Backend selection for the streaming sparse attention kernel.

The compiled Cython core is used when available; the pure-NumPy
fallback otherwise. Set ``SPARSEPREFILL_PURE_PYTHON=1`` to force the
fallback. Both backends implement the same contract and agree to
float32 rounding; ``benchmarks/bench_kernels.py`` compares their speed.
"""

from __future__ import annotations

import os

import numpy as np

from . import _core_py

if os.environ.get("SPARSEPREFILL_PURE_PYTHON"):
    _impl = _core_py
else:
    try:
        from . import _core as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _core_py

BACKEND = _impl.BACKEND_NAME


def _flatten(per_row: list, n_rows: int) -> tuple[np.ndarray, np.ndarray]:
    offsets = np.zeros(n_rows + 1, dtype=np.int64)
    for r in range(n_rows):
        offsets[r + 1] = offsets[r] + len(per_row[r])
    flat = np.fromiter(
        (int(x) for row in per_row for x in row), dtype=np.int64, count=int(offsets[-1])
    )
    return flat, offsets


def sparse_flash_attention(
    q: np.ndarray,
    k: np.ndarray,
    v: np.ndarray,
    scale: float,
    block_size: int,
    tile_starts: list,
    column_indices: list,
    backend=None,
) -> np.ndarray:
    """Streaming-softmax attention over per-row tiles plus residual columns.

    `tile_starts` and `column_indices` hold one sorted list per
    query-block row. Rows with no coverage produce zero output rows.
    """
    s_len = q.shape[0]
    n_rows = (s_len + block_size - 1) // block_size
    if len(tile_starts) != n_rows or len(column_indices) != n_rows:
        raise ValueError("need one tile list and one column list per query-block row")
    starts_flat, starts_off = _flatten(tile_starts, n_rows)
    cols_flat, cols_off = _flatten(column_indices, n_rows)
    impl = backend if backend is not None else _impl
    return impl.sparse_flash_rows(
        np.ascontiguousarray(q, dtype=np.float32),
        np.ascontiguousarray(k, dtype=np.float32),
        np.ascontiguousarray(v, dtype=np.float32),
        float(scale),
        int(block_size),
        starts_flat,
        starts_off,
        cols_flat,
        cols_off,
    )


def available_backends() -> dict:
    """Importable kernel backends by name (for tests and benchmarks)."""
    backends = {"python": _core_py}
    try:
        from . import _core

        backends["cython"] = _core
    except ImportError:
        pass
    return backends
