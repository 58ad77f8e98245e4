"""Dynamic sparse attention for long-context pre-filling, at desk scale.

Estimates per-head sparse patterns online (A-shape, Vertical-Slash,
Block-Sparse), builds sparse layouts, executes streaming-softmax sparse
attention, searches the best pattern per head under a FLOPs budget, and
reports recall/FLOPs/sparsity against a dense attention oracle.
"""

from .attention_ref import (
    AttentionInputs,
    attention_recall,
    dense_causal_attention,
    masked_attention_oracle,
    streaming_softmax_attention,
)
from .estimator import (
    BlockIndices,
    VSIndices,
    argtopk,
    estimate_block_sparse,
    estimate_vertical_slash,
)
from .kernels import BACKEND
from .metrics import RunReport, kernel_sparsity, report_head
from .patterns import (
    AShape,
    BlockSparse,
    SparseLayout,
    VerticalSlash,
    a_shape_layout,
    flops_in_kernel,
    layout_to_mask,
)
from .search import (
    SearchCandidate,
    SearchResult,
    calibrate_search_space,
    search_optimal_pattern,
)
from .sparse_attn import block_sparse_attention, run_head, vertical_slash_attention
from .vs_index import build_vs_layout
from .workload import PlantedLine, WorkloadSpec, synth_planted_qkv

__version__ = "0.1.0"
