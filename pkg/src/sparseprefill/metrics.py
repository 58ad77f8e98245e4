"""Per-head run reports: recall, kernel sparsity, FLOPs, error, timing.

Timings are wall-clock (monotonic clock) and informational only; they
are never part of acceptance checks and are excluded from the default
CSV so reports stay byte-reproducible across runs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .attention_ref import AttentionInputs, attention_recall, dense_causal_attention
from .patterns import (
    HeadPatternConfig,
    PATTERN_NAMES,
    SparseLayout,
    causal_area,
    flops_in_kernel,
    layout_area,
    layout_to_mask,
)
from .sparse_attn import run_head_timed

CSV_COLUMNS = ["head", "pattern", "recall", "kernel_sparsity", "modeled_flops", "output_mae"]
CSV_TIMING_COLUMNS = ["t_estimate", "t_sparse"]


@dataclass
class RunReport:
    head: str
    pattern: str
    recall: float
    kernel_sparsity: float
    modeled_flops: int
    output_mae: float
    t_estimate: float
    t_sparse: float


def kernel_sparsity(layout: SparseLayout) -> float:
    """Fraction of causal cells NOT computed, at kernel granularity."""
    return 1.0 - layout_area(layout) / causal_area(layout.seq_len)


def modeled_kernel_sparsity(cfg: HeadPatternConfig, seq_len: int, block_size: int) -> float:
    """Sparsity from the cost model alone (no data, head_dim cancels)."""
    area = flops_in_kernel(cfg, seq_len, 1, block_size) / 4
    return 1.0 - area / causal_area(seq_len)


def report_head(
    inputs: AttentionInputs, cfg: HeadPatternConfig, head: str = "0", block_size: int = 64
) -> RunReport:
    out, layout, t_est, t_sparse = run_head_timed(inputs, cfg, block_size)
    dense = dense_causal_attention(inputs).astype(np.float64)
    mae = float(np.mean(np.abs(out.astype(np.float64) - dense)))
    recall = attention_recall(layout_to_mask(layout), inputs)
    return RunReport(
        head=head,
        pattern=PATTERN_NAMES[type(cfg)],
        recall=recall,
        kernel_sparsity=kernel_sparsity(layout),
        modeled_flops=flops_in_kernel(cfg, inputs.seq_len, inputs.head_dim, block_size),
        output_mae=mae,
        t_estimate=t_est,
        t_sparse=t_sparse,
    )


def _format_value(value) -> str:
    if isinstance(value, float):
        return format(value, ".10g")
    return str(value)


def reports_to_csv(reports: list[RunReport], path, include_timings: bool = False) -> None:
    """Stable column order, header row, '.' decimal separator."""
    columns = CSV_COLUMNS + (CSV_TIMING_COLUMNS if include_timings else [])
    lines = [",".join(columns)]
    for rep in reports:
        lines.append(",".join(_format_value(getattr(rep, c)) for c in columns))
    with open(path, "w", newline="") as f:
        f.write("\n".join(lines) + "\n")


def reports_to_json(reports: list[RunReport], path) -> None:
    rows = [
        {c: getattr(rep, c) for c in CSV_COLUMNS + CSV_TIMING_COLUMNS} for rep in reports
    ]
    with open(path, "w") as f:
        json.dump(rows, f, indent=2)
        f.write("\n")
