"""Synthetic attention workloads with planted sparse structure.

Q and K start as seeded Gaussian noise and receive rank-structured
additions so the dense attention matrix exhibits planted verticals,
slashes, blocks, a local band, or sink mass. V is plain Gaussian.
Everything is deterministic per seed.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .attention_ref import AttentionInputs

WORKLOAD_FORMAT_VERSION = 1

PLANT_KINDS = ("vertical", "slash", "block", "local", "sink")


@dataclass(frozen=True)
class PlantedLine:
    kind: str
    strength: float
    column: int | None = None  # vertical
    offset: int | None = None  # slash
    q_block: int | None = None  # block
    k_block: int | None = None  # block
    width: int | None = None  # local / sink

    def __post_init__(self):
        if self.kind not in PLANT_KINDS:
            raise ValueError(f"unknown planted kind: {self.kind!r}")
        if self.strength <= 0:
            raise ValueError("strength must be positive")


@dataclass(frozen=True)
class WorkloadSpec:
    seq_len: int
    head_dim: int
    seed: int
    planted: tuple = ()
    noise_scale: float = 1.0
    block_size: int = 64  # granularity of 'block' plants

    def __post_init__(self):
        if self.seq_len < 1 or self.head_dim < 1:
            raise ValueError("seq_len and head_dim must be >= 1")
        if self.noise_scale < 0:
            raise ValueError("noise_scale must be >= 0")
        object.__setattr__(self, "planted", tuple(self.planted))
        for p in self.planted:
            self._check_location(p)

    def _check_location(self, p: PlantedLine) -> None:
        s = self.seq_len
        if p.kind == "vertical" and not (p.column is not None and 0 <= p.column < s):
            raise ValueError("vertical plant needs column in [0, seq_len)")
        if p.kind == "slash" and not (p.offset is not None and 0 <= p.offset < s):
            raise ValueError("slash plant needs offset in [0, seq_len)")
        if p.kind == "block":
            n = (s + self.block_size - 1) // self.block_size
            ok = (
                p.q_block is not None and p.k_block is not None
                and 0 <= p.k_block <= p.q_block < n
            )
            if not ok:
                raise ValueError("block plant needs causal q_block/k_block in range")
        if p.kind in ("local", "sink") and not (p.width and 1 <= p.width <= s):
            raise ValueError(f"{p.kind} plant needs width in [1, seq_len]")


# Subspace widths per plant kind. Slashes and local bands use random
# per-position directions, so they get a wide private subspace: the
# self cross-talk between misaligned positions then scales as
# strength^2 / sqrt(width) while the aligned signal stays strength^2.
_DIMS_PER_KIND = {"vertical": 1, "sink": 1, "block": 1, "slash": 28, "local": 16}


def _subspace_unit_rows(rng: np.random.Generator, n: int, u: np.ndarray) -> np.ndarray:
    """n random unit vectors (rows) confined to span of the columns of u."""
    z = rng.standard_normal((n, u.shape[1]))
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    return z @ u.T


def synth_planted_qkv(spec: WorkloadSpec) -> AttentionInputs:
    """Gaussian noise plus rank-structured plants.

    Each plant lives in its own orthogonal subspace (drawn from a seeded
    orthonormal basis), so plants never interfere with one another; the
    only competition for attention mass is against the noise floor.
    """
    s, d = spec.seq_len, spec.head_dim
    rng = np.random.Generator(np.random.PCG64(spec.seed))

    needed = sum(_DIMS_PER_KIND[p.kind] for p in spec.planted)
    if needed > d:
        raise ValueError(f"planted structure needs {needed} dimensions, head_dim is {d}")
    basis, _ = np.linalg.qr(rng.standard_normal((d, d)))
    next_dim = 0

    q = spec.noise_scale * rng.standard_normal((s, d))
    k = spec.noise_scale * rng.standard_normal((s, d))
    v = rng.standard_normal((s, d))

    for p in spec.planted:
        g = p.strength
        n_dims = _DIMS_PER_KIND[p.kind]
        u = basis[:, next_dim: next_dim + n_dims]
        next_dim += n_dims
        if p.kind == "vertical":
            k[p.column] += g * u[:, 0]
            q += g * u[:, 0]
        elif p.kind == "sink":
            k[: p.width] += g * u[:, 0]
            q += g * u[:, 0]
        elif p.kind == "block":
            b = spec.block_size
            q[p.q_block * b: (p.q_block + 1) * b] += g * u[:, 0]
            k[p.k_block * b: (p.k_block + 1) * b] += g * u[:, 0]
        elif p.kind == "slash":
            # one random direction per diagonal position; query row i and
            # key row i - offset share direction w[i - offset], so the
            # aligned cell scores strength^2 and misaligned cells only
            # strength^2 / sqrt(subspace width)
            n = s - p.offset
            w = _subspace_unit_rows(rng, n, u)
            k[:n] += g * w
            q[p.offset:] += g * w
        elif p.kind == "local":
            # per-position directions scaled so a cell inside the trailing
            # window gains strength^2 / sqrt(width)
            w = _subspace_unit_rows(rng, s, u) * (g / math.sqrt(p.width))
            k += math.sqrt(p.width) * w
            c = np.cumsum(w, axis=0)
            shifted = np.zeros_like(c)
            if s > p.width:
                shifted[p.width:] = c[:-p.width]
            q += c - shifted

    return AttentionInputs(q=q.astype(np.float32), k=k.astype(np.float32), v=v.astype(np.float32))


# --- workload document (JSON) ----------------------------------------------


def _plant_to_dict(p: PlantedLine) -> dict:
    out = {"kind": p.kind, "strength": p.strength}
    for key in ("column", "offset", "q_block", "k_block", "width"):
        val = getattr(p, key)
        if val is not None:
            out[key] = val
    return out


def save_workload(path, seq_len: int, head_dim: int, heads: list[WorkloadSpec]) -> None:
    doc = {
        "format_version": WORKLOAD_FORMAT_VERSION,
        "seq_len": seq_len,
        "head_dim": head_dim,
        "heads": [
            {
                "seed": h.seed,
                "noise_scale": h.noise_scale,
                "block_size": h.block_size,
                "planted": [_plant_to_dict(p) for p in h.planted],
            }
            for h in heads
        ],
    }
    with open(path, "w") as f:
        json.dump(doc, f, indent=2)
        f.write("\n")


def load_workload(path) -> list[WorkloadSpec]:
    with open(path) as f:
        doc = json.load(f)
    version = doc.get("format_version")
    if version != WORKLOAD_FORMAT_VERSION:
        raise ValueError(f"unsupported workload format_version: {version!r}")
    seq_len = int(doc["seq_len"])
    head_dim = int(doc["head_dim"])
    heads = []
    for h in doc["heads"]:
        planted = tuple(PlantedLine(**p) for p in h.get("planted", []))
        heads.append(
            WorkloadSpec(
                seq_len=seq_len,
                head_dim=head_dim,
                seed=int(h["seed"]),
                planted=planted,
                noise_scale=float(h.get("noise_scale", 1.0)),
                block_size=int(h.get("block_size", 64)),
            )
        )
    return heads
