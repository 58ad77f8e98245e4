"""Budget-calibrated per-head pattern search.

Seed configs are first adjusted in fixed steps until their modeled
kernel FLOPs land inside a band around a shared budget, so every
candidate gets a comparable compute allowance. Each calibrated
candidate then runs the full estimation+execution path on a validation
input and is scored by output fidelity against dense attention; the
lowest-error candidate wins.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .attention_ref import AttentionInputs, dense_causal_attention
from .patterns import (
    AShape,
    BlockSparse,
    HeadPatternConfig,
    VerticalSlash,
    flops_in_kernel,
    n_block_rows,
)
from .sparse_attn import run_head

DEFAULT_STEP = 50
DEFAULT_EPS = 0.1


@dataclass
class SearchCandidate:
    cfg: HeadPatternConfig
    modeled_flops: int
    at_bound: bool = False  # budget unreachable; closest point kept
    fidelity_error: float | None = None


@dataclass
class SearchResult:
    chosen: SearchCandidate
    candidates: list[SearchCandidate] = field(default_factory=list)


def default_budget(seq_len: int, head_dim: int, block_size: int,
                   ashape: AShape = AShape(1024, 4096)) -> int:
    """Budget anchored at the static sink+local configuration."""
    return flops_in_kernel(ashape, seq_len, head_dim, block_size)


def _free_param_bounds(cfg: HeadPatternConfig, seq_len: int, block_size: int) -> tuple[str, int, int]:
    if isinstance(cfg, VerticalSlash):
        return "k_s", 1, seq_len
    if isinstance(cfg, BlockSparse):
        return "k_b", 1, n_block_rows(seq_len, cfg.block_size)
    if isinstance(cfg, AShape):
        return "local_window", 1, seq_len
    raise TypeError(f"unknown pattern config: {cfg!r}")


def calibrate_candidate(
    cfg: HeadPatternConfig, budget: int, step: int, eps: float,
    seq_len: int, head_dim: int, block_size: int,
) -> SearchCandidate:
    """Walk the config's free parameter in `step` increments toward the
    budget. If the band is unreachable (a bound is hit, or one step
    straddles the band), the closest visited point is kept and flagged."""
    name, lo, hi = _free_param_bounds(cfg, seq_len, block_size)
    best_cfg, best_flops = cfg, flops_in_kernel(cfg, seq_len, head_dim, block_size)
    cur_cfg, cur_flops = best_cfg, best_flops
    for _ in range(10000):
        if abs(cur_flops - budget) <= eps * budget:
            return SearchCandidate(cur_cfg, cur_flops)
        value = getattr(cur_cfg, name)
        nxt = value + step if cur_flops < budget else value - step
        nxt = min(max(nxt, lo), hi)
        if nxt == value:
            break
        nxt_cfg = replace(cur_cfg, **{name: nxt})
        nxt_flops = flops_in_kernel(nxt_cfg, seq_len, head_dim, block_size)
        if (nxt_flops - budget) * (cur_flops - budget) < 0:
            # stepped across the band without entering it
            if abs(nxt_flops - budget) < abs(cur_flops - budget):
                cur_cfg, cur_flops = nxt_cfg, nxt_flops
            break
        cur_cfg, cur_flops = nxt_cfg, nxt_flops
        if abs(cur_flops - budget) < abs(best_flops - budget):
            best_cfg, best_flops = cur_cfg, cur_flops
    if abs(cur_flops - budget) < abs(best_flops - budget):
        best_cfg, best_flops = cur_cfg, cur_flops
    return SearchCandidate(best_cfg, best_flops, at_bound=True)


def calibrate_search_space(
    seeds: list[HeadPatternConfig],
    budget: int | None,
    step: int,
    eps: float,
    seq_len: int,
    head_dim: int,
    block_size: int = 64,
) -> list[SearchCandidate]:
    if not seeds:
        raise ValueError("seed list must not be empty")
    if step < 1:
        raise ValueError("step must be >= 1")
    if budget is None:
        budget = default_budget(seq_len, head_dim, block_size)
    if budget <= 0:
        raise ValueError("budget must be positive")
    return [
        calibrate_candidate(cfg, budget, step, eps, seq_len, head_dim, block_size)
        for cfg in seeds
    ]


def search_optimal_pattern(
    inputs: AttentionInputs,
    candidates: list[SearchCandidate],
    block_size: int = 64,
) -> SearchResult:
    """Pick the candidate whose sparse output is closest to dense
    attention (mean absolute error). Ties go to the cheaper modeled
    FLOPs, then to declaration order."""
    if not candidates:
        raise ValueError("need at least one candidate")
    dense = dense_causal_attention(inputs).astype(np.float64)
    scored = []
    for cand in candidates:
        out, _ = run_head(inputs, cand.cfg, block_size)
        err = float(np.mean(np.abs(out.astype(np.float64) - dense)))
        scored.append(replace(cand, fidelity_error=err))
    order = sorted(
        range(len(scored)),
        key=lambda i: (scored[i].fidelity_error, scored[i].modeled_flops, i),
    )
    return SearchResult(chosen=scored[order[0]], candidates=scored)
