"""Graph alignment with Wasserstein distances between graph signal distributions."""

from .assignment import (
    DykstraConfig,
    SoftAssignment,
    dykstra_project,
    resolve_kmax,
    round_to_hard,
    sinkhorn_project,
    validate_kmax,
)
from .datagen import SbmSpec, collapse_edges, generate_sbm, permute_graph
from .errors import GotAlignError, NumericalError, ValidationError
from .evaluation import DistanceMatrix, community_transfer_nmi, nmi, one_nn_accuracy, spectral_clustering
from .graph import Graph, graph_distribution, laplacian
from .io import read_edge_list, read_result, read_tu_collection, write_edge_list, write_result
from .optimizer import AlignConfig, AlignmentResult, align, align_pair
from .wasserstein import graph_alignment_cost, l2_alignment_cost, transport_map, w2_squared

__version__ = "0.1.0"

__all__ = [
    "AlignConfig",
    "AlignmentResult",
    "DistanceMatrix",
    "DykstraConfig",
    "GotAlignError",
    "Graph",
    "NumericalError",
    "SbmSpec",
    "SoftAssignment",
    "ValidationError",
    "align",
    "align_pair",
    "collapse_edges",
    "community_transfer_nmi",
    "dykstra_project",
    "generate_sbm",
    "graph_alignment_cost",
    "graph_distribution",
    "l2_alignment_cost",
    "laplacian",
    "nmi",
    "one_nn_accuracy",
    "permute_graph",
    "read_edge_list",
    "read_result",
    "read_tu_collection",
    "resolve_kmax",
    "round_to_hard",
    "sinkhorn_project",
    "spectral_clustering",
    "transport_map",
    "validate_kmax",
    "w2_squared",
    "write_edge_list",
    "write_result",
]
