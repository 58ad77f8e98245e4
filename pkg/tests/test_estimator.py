import numpy as np
import pytest

from sparseprefill.estimator import (
    BlockIndices,
    VSIndices,
    argtopk,
    estimate_block_sparse,
    estimate_vertical_slash,
)
from sparseprefill.patterns import BlockSparse, VerticalSlash
from sparseprefill.workload import PlantedLine, WorkloadSpec, synth_planted_qkv
from tests.conftest import random_inputs


class TestArgtopk:
    def test_basic(self):
        np.testing.assert_array_equal(argtopk([1.0, 5.0, 3.0], 2), [1, 2])

    def test_ties_go_to_smaller_index(self):
        np.testing.assert_array_equal(argtopk([2.0, 2.0, 2.0], 2), [0, 1])

    def test_k_exceeding_length_returns_all(self):
        assert argtopk([3.0, 1.0], 10).tolist() == [0, 1]

    def test_rejects_bad_k(self):
        with pytest.raises(ValueError):
            argtopk([1.0], 0)


class TestIndexContainers:
    def test_vs_indices_order_enforced(self):
        VSIndices(vertical=[0, 3, 5], slash=[9, 2, 0])
        with pytest.raises(ValueError):
            VSIndices(vertical=[3, 0], slash=[2])
        with pytest.raises(ValueError):
            VSIndices(vertical=[0], slash=[0, 2])
        with pytest.raises(ValueError):
            VSIndices(vertical=[-1], slash=[0])

    def test_block_indices_causal(self):
        BlockIndices(rows=((0,), (0, 1)))
        with pytest.raises(ValueError):
            BlockIndices(rows=((1,),))
        with pytest.raises(ValueError):
            BlockIndices(rows=((0,), (1, 0)))


class TestEstimateVerticalSlash:
    def test_force_includes_column0_and_offset0(self):
        inp = random_inputs(64, 16, 0)
        idx = estimate_vertical_slash(inp.q, inp.k, VerticalSlash(4, 4, 16))
        assert 0 in idx.vertical
        assert 0 in idx.slash

    def test_recovers_planted_vertical(self):
        spec = WorkloadSpec(512, 64, seed=5, planted=(PlantedLine("vertical", 12.0, column=137),))
        inp = synth_planted_qkv(spec)
        idx = estimate_vertical_slash(inp.q, inp.k, VerticalSlash(4, 4, 64))
        assert 137 in idx.vertical

    def test_recovers_planted_slash(self):
        spec = WorkloadSpec(512, 64, seed=6, planted=(PlantedLine("slash", 12.0, offset=33),))
        inp = synth_planted_qkv(spec)
        idx = estimate_vertical_slash(inp.q, inp.k, VerticalSlash(4, 4, 64))
        assert 33 in idx.slash

    def test_k_clipped_to_seq_len(self):
        inp = random_inputs(8, 4, 1)
        idx = estimate_vertical_slash(inp.q, inp.k, VerticalSlash(100, 100, 8))
        assert idx.vertical.size == 8
        assert idx.slash.size == 8

    def test_last_q_exceeding_seq_len_rejected(self):
        inp = random_inputs(8, 4, 1)
        with pytest.raises(ValueError):
            estimate_vertical_slash(inp.q, inp.k, VerticalSlash(2, 2, 16))

    def test_uses_only_tail_rows(self):
        # perturbing queries outside the tail must not change the estimate
        inp = random_inputs(128, 16, 9)
        cfg = VerticalSlash(8, 8, 32)
        base = estimate_vertical_slash(inp.q, inp.k, cfg)
        q2 = inp.q.copy()
        q2[: 128 - 32] += 3.0
        pert = estimate_vertical_slash(q2, inp.k, cfg)
        np.testing.assert_array_equal(base.vertical, pert.vertical)
        np.testing.assert_array_equal(base.slash, pert.slash)


class TestEstimateBlockSparse:
    def test_diagonal_always_selected(self):
        inp = random_inputs(256, 16, 2)
        blocks = estimate_block_sparse(inp.q, inp.k, BlockSparse(2, 64))
        for r, row in enumerate(blocks.rows):
            assert r in row

    def test_recovers_planted_block(self):
        spec = WorkloadSpec(512, 64, seed=7, planted=(PlantedLine("block", 10.0, q_block=5, k_block=1),))
        inp = synth_planted_qkv(spec)
        blocks = estimate_block_sparse(inp.q, inp.k, BlockSparse(2, 64))
        assert 1 in blocks.rows[5]

    def test_k_clipped_per_row(self):
        inp = random_inputs(256, 16, 3)
        blocks = estimate_block_sparse(inp.q, inp.k, BlockSparse(100, 64))
        for r, row in enumerate(blocks.rows):
            assert list(row) == list(range(r + 1))

    def test_partial_tail_block_handled(self):
        inp = random_inputs(130, 16, 4)
        blocks = estimate_block_sparse(inp.q, inp.k, BlockSparse(2, 64))
        assert len(blocks.rows) == 3
        assert 2 in blocks.rows[2]
