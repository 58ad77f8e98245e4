"""Command-line harness: search -> run -> report.

Subcommands:
  search  calibrate a candidate space and pick a pattern per head
  run     execute heads under a saved pattern config, write reports
  recall  sweep a top-k parameter and emit recall-vs-FLOPs curve data
  oracle  dump dense attention outputs for external comparison

The ``SPARSEPREFILL_THREADS`` environment variable controls how many
heads ``run`` evaluates concurrently (default 1). Output files are
deterministic for fixed seeds and flags.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .metrics import report_head, reports_to_csv, reports_to_json
from .attention_ref import attention_recall, dense_causal_attention
from .patterns import (
    AShape,
    BlockSparse,
    VerticalSlash,
    PATTERN_NAMES,
    config_from_entry,
    config_to_entry,
    flops_in_kernel,
    layout_to_mask,
    load_pattern_configs,
    save_pattern_configs,
)
from .search import calibrate_search_space, search_optimal_pattern
from .sparse_attn import run_head
from .workload import load_workload, synth_planted_qkv


def _parse_pair(text: str) -> tuple[int, int]:
    a, b = text.split(",")
    return int(a), int(b)


def _parse_vs_seeds(text: str) -> list[tuple[int, int]]:
    return [tuple(int(x) for x in item.split(":")) for item in text.split(",") if item]


def _fmt(value: float) -> str:
    return format(value, ".10g")


def cmd_search(args) -> int:
    heads = load_workload(args.workload)
    seq_len = heads[0].seq_len
    head_dim = heads[0].head_dim
    last_q = min(args.last_q, seq_len)

    g, l = _parse_pair(args.budget_ashape)
    seeds = [AShape(g, l)]
    seeds += [VerticalSlash(kv, ks, last_q) for kv, ks in _parse_vs_seeds(args.vs_seeds)]
    seeds += [BlockSparse(int(kb), args.block_size) for kb in args.bs_seeds.split(",") if kb]
    budget = flops_in_kernel(AShape(g, l), seq_len, head_dim, args.block_size)
    candidates = calibrate_search_space(
        seeds, budget, args.step, args.eps, seq_len, head_dim, args.block_size
    )

    entries = []
    report_lines = ["head,candidate,pattern,config,modeled_flops,fidelity_error,chosen"]
    for i, spec in enumerate(heads):
        inputs = synth_planted_qkv(spec)
        result = search_optimal_pattern(inputs, candidates, args.block_size)
        entries.append(config_to_entry(layer=0, head=i, cfg=result.chosen.cfg))
        for j, cand in enumerate(result.candidates):
            chosen = cand.cfg == result.chosen.cfg
            report_lines.append(
                ",".join(
                    [
                        str(i),
                        str(j),
                        PATTERN_NAMES[type(cand.cfg)],
                        '"' + repr(cand.cfg) + '"',
                        str(cand.modeled_flops),
                        _fmt(cand.fidelity_error),
                        "1" if chosen else "0",
                    ]
                )
            )
    save_pattern_configs(args.out, entries)
    if args.report:
        with open(args.report, "w", newline="") as f:
            f.write("\n".join(report_lines) + "\n")
    return 0


def cmd_run(args) -> int:
    heads = load_workload(args.workload)
    entries = load_pattern_configs(args.config)
    configs = {}
    for entry in entries:
        _, head, cfg = config_from_entry(entry)
        configs[head] = cfg
    missing = [i for i in range(len(heads)) if i not in configs]
    if missing:
        raise ValueError(f"pattern config missing entries for heads: {missing}")

    def one(i: int):
        inputs = synth_planted_qkv(heads[i])
        return report_head(inputs, configs[i], head=str(i), block_size=args.block_size)

    n_threads = int(os.environ.get("SPARSEPREFILL_THREADS", "1"))
    if n_threads > 1:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            reports = list(pool.map(one, range(len(heads))))
    else:
        reports = [one(i) for i in range(len(heads))]

    reports_to_csv(reports, args.out, include_timings=args.timings)
    if args.json:
        reports_to_json(reports, args.json)
    return 0


SWEEP_PARAMS = {"kv", "ks", "kb", "global", "local"}


def _parse_sweep(text: str) -> tuple[str, list[int]]:
    name, _, rng = text.partition("=")
    if name not in SWEEP_PARAMS:
        raise ValueError(f"sweep parameter must be one of {sorted(SWEEP_PARAMS)}")
    rng, _, step_text = rng.partition(":")
    start_text, _, stop_text = rng.partition("..")
    start, stop = int(start_text), int(stop_text)
    if start < 1 or stop < start:
        raise ValueError("sweep range must satisfy 1 <= start <= stop")
    if step_text:
        values = list(range(start, stop + 1, int(step_text)))
    else:
        values = []
        x = start
        while x <= stop:
            values.append(x)
            x *= 2
        if values[-1] != stop:
            values.append(stop)
    return name, values


def _cfg_for_sweep(pattern: str, name: str, value: int, args, seq_len: int):
    kv = args.kv if name != "kv" else value
    ks = args.ks if name != "ks" else value
    kb = args.kb if name != "kb" else value
    g = args.global_tokens if name != "global" else value
    loc = args.local_window if name != "local" else value
    if pattern == "vertical_slash":
        return VerticalSlash(kv, ks, min(args.last_q, seq_len))
    if pattern == "block_sparse":
        return BlockSparse(kb, args.block_size)
    if pattern == "a_shape":
        return AShape(g, loc)
    raise ValueError(f"unknown pattern: {pattern!r}")


def cmd_recall(args) -> int:
    heads = load_workload(args.workload)
    name, values = _parse_sweep(args.sweep)
    lines = ["head,param,value,recall,modeled_flops"]
    for i, spec in enumerate(heads):
        inputs = synth_planted_qkv(spec)
        for value in values:
            cfg = _cfg_for_sweep(args.pattern, name, value, args, spec.seq_len)
            _, layout = run_head(inputs, cfg, args.block_size)
            rec = attention_recall(layout_to_mask(layout), inputs)
            flops = flops_in_kernel(cfg, spec.seq_len, spec.head_dim, args.block_size)
            lines.append(f"{i},{name},{value},{_fmt(rec)},{flops}")
    with open(args.out, "w", newline="") as f:
        f.write("\n".join(lines) + "\n")
    return 0


def cmd_oracle(args) -> int:
    heads = load_workload(args.workload)
    os.makedirs(args.out_dir, exist_ok=True)
    for i, spec in enumerate(heads):
        inputs = synth_planted_qkv(spec)
        dense = dense_causal_attention(inputs)
        path = os.path.join(args.out_dir, f"head_{i:03d}.csv")
        np.savetxt(path, dense, fmt="%.8e", delimiter=",")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sparseprefill")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("search", help="calibrate candidates and pick a pattern per head")
    p.add_argument("--workload", required=True)
    p.add_argument("--out", required=True, help="pattern config JSON to write")
    p.add_argument("--report", help="optional per-candidate search report CSV")
    p.add_argument("--budget-ashape", default="1024,4096", metavar="G,L")
    p.add_argument("--vs-seeds", default="30:2048,100:1800,500:1500,3000:200")
    p.add_argument("--bs-seeds", default="100")
    p.add_argument("--step", type=int, default=50)
    p.add_argument("--eps", type=float, default=0.1)
    p.add_argument("--block-size", type=int, default=64)
    p.add_argument("--last-q", type=int, default=64)
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("run", help="execute heads under a saved pattern config")
    p.add_argument("--config", required=True)
    p.add_argument("--workload", required=True)
    p.add_argument("--out", required=True, help="report CSV to write")
    p.add_argument("--json", help="optional JSON report (includes timings)")
    p.add_argument("--timings", action="store_true", help="include timing columns in CSV")
    p.add_argument("--block-size", type=int, default=64)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("recall", help="sweep a top-k parameter, emit recall curve data")
    p.add_argument("--workload", required=True)
    p.add_argument("--pattern", required=True, choices=sorted(PATTERN_NAMES.values()))
    p.add_argument("--sweep", required=True, metavar="NAME=START..STOP[:STEP]")
    p.add_argument("--out", required=True)
    p.add_argument("--kv", type=int, default=64)
    p.add_argument("--ks", type=int, default=64)
    p.add_argument("--kb", type=int, default=8)
    p.add_argument("--global-tokens", type=int, default=64)
    p.add_argument("--local-window", type=int, default=256)
    p.add_argument("--last-q", type=int, default=64)
    p.add_argument("--block-size", type=int, default=64)
    p.set_defaults(func=cmd_recall)

    p = sub.add_parser("oracle", help="dump dense outputs for external comparison")
    p.add_argument("--workload", required=True)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_oracle)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (OSError, ValueError, KeyError) as exc:
        print(f"sparseprefill: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
