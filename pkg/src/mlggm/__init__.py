"""Structure learning for multi-layered Gaussian graphical models.

The package covers the full desk-scale workflow: random chain-graph and data
generation, node-wise spike-and-slab Gibbs sampling with FDR-based edge
selection and sign inference, evaluation against a known truth graph, and
network summaries, all exposed through the `mlggm` command line tool.
"""

__version__ = "0.1.0"

from .data import Dataset
from .datagen import (
    GenConfig,
    MlggmParameters,
    expected_edge_count,
    precision_from_parameters,
    random_chain_graph,
    sample_data,
    sample_parameters,
    validate_parameters,
)
from .graph import (
    DIRECTED,
    UNDIRECTED,
    ChainGraphSpec,
    CIStatement,
    Edge,
    VertexContext,
    candidate_edges,
    cumulative,
    implied_independencies,
    validate,
    vertex_context,
)
from .inference import (
    FdrSelection,
    PosteriorSummary,
    call_signs,
    candidate_ppis,
    connected_component,
    connectivity_score,
    cs_table,
    expected_fdr,
    fdr_select,
    intersection_counts,
    median_model_select,
    ppi,
    ppis_from_matrix,
    summarize,
    weighted_degree,
)
from .metrics import Confusion, RocResult, confusion, mcc, mcc_curve, roc
from .sampler import (
    ChainTrace,
    PriorConfig,
    SamplerState,
    build_directed_design,
    build_undirected_design,
    initial_state,
    run_bans,
    run_bans_parallel,
    state_from_parameters,
    structured_sign_run,
    update_directed,
    update_undirected_layer,
)
