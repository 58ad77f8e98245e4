"""Compare the compiled and pure-Python streaming attention kernels.

Builds a vertical-slash layout over seeded Gaussian inputs and times
``sparse_flash_attention`` against each importable backend. Outputs a
small table of wall-clock medians plus the speedup of the compiled
core over the fallback.

Run from the repository root:

    python3 benchmarks/bench_kernels.py
    python3 benchmarks/bench_kernels.py --seq-lens 2048 8192 --repeats 7
"""

import argparse
import statistics
import time

import numpy as np

from sparseprefill.attention_ref import AttentionInputs
from sparseprefill.estimator import VSIndices
from sparseprefill.kernels import available_backends, sparse_flash_attention
from sparseprefill.tensor import seeded_gaussian
from sparseprefill.vs_index import build_vs_layout


def make_case(seq_len: int, head_dim: int, block_size: int, seed: int):
    inp = AttentionInputs(
        q=seeded_gaussian(seq_len, head_dim, seed),
        k=seeded_gaussian(seq_len, head_dim, seed + 1),
        v=seeded_gaussian(seq_len, head_dim, seed + 2),
    )
    rng = np.random.Generator(np.random.PCG64(seed + 3))
    vertical = np.sort(rng.choice(seq_len, size=min(64, seq_len), replace=False))
    slash = -np.sort(-rng.choice(seq_len, size=min(64, seq_len), replace=False))
    layout = build_vs_layout(VSIndices(vertical=vertical, slash=slash), seq_len, block_size)
    return inp, layout


def time_backend(impl, inp, layout, block_size: int, repeats: int) -> float:
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        sparse_flash_attention(
            inp.q, inp.k, inp.v, inp.scale, block_size,
            layout.block_starts, layout.column_indices, backend=impl,
        )
        times.append(time.perf_counter() - t0)
    return statistics.median(times)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--seq-lens", type=int, nargs="+", default=[1024, 4096, 16384])
    parser.add_argument("--head-dim", type=int, default=64)
    parser.add_argument("--block-size", type=int, default=64)
    parser.add_argument("--repeats", type=int, default=5)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    backends = available_backends()
    if "cython" not in backends:
        print("note: compiled core not importable; timing the fallback only")

    header = f"{'seq_len':>8}  " + "".join(f"{name:>12}" for name in backends)
    if len(backends) > 1:
        header += f"{'speedup':>10}"
    print(header)

    for seq_len in args.seq_lens:
        inp, layout = make_case(seq_len, args.head_dim, args.block_size, args.seed)
        medians = {}
        for name, impl in backends.items():
            # warm once so first-call overhead stays out of the numbers
            time_backend(impl, inp, layout, args.block_size, 1)
            medians[name] = time_backend(impl, inp, layout, args.block_size, args.repeats)
        row = f"{seq_len:>8}  " + "".join(f"{medians[n] * 1e3:>10.2f}ms" for n in backends)
        if "cython" in medians:
            row += f"{medians['python'] / medians['cython']:>9.2f}x"
        print(row)


if __name__ == "__main__":
    main()
