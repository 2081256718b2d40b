"""Grasp-stability classification from BioTac SP tactile graphs.

The package turns raw 24-electrode fingertip readings into small spatial
graphs, trains a graph-convolutional classifier on them with a self-contained
numpy gradient engine, and ships the experiment harness (cross-validation,
depth/width and connectivity sweeps, generalization tests) plus a CLI.
"""

from tactile_grasp.graphs import (
    EdgeSet,
    Label,
    NormalizedAdjacency,
    TactileGraph,
    TaxelLayout,
    build_graph,
    knn_edges,
    load_layout,
    manual_edges,
    normalize_adjacency,
)
from tactile_grasp.dataset import (
    DatasetSplit,
    FoldAssignment,
    GraspSample,
    Orientation,
    SplitKind,
    count_summary,
    filter_orientation,
    load_csv,
    make_folds,
)
from tactile_grasp.model import (
    GcnConfig,
    GcnModel,
    backward,
    forward,
    gcn_layer_forward,
    init_model,
    load_model,
    save_model,
)
from tactile_grasp.training import Metrics, TrainConfig, TrainResult, evaluate, train

__version__ = "0.1.0"

__all__ = [
    "EdgeSet",
    "Label",
    "NormalizedAdjacency",
    "TactileGraph",
    "TaxelLayout",
    "build_graph",
    "knn_edges",
    "load_layout",
    "manual_edges",
    "normalize_adjacency",
    "DatasetSplit",
    "FoldAssignment",
    "GraspSample",
    "Orientation",
    "SplitKind",
    "count_summary",
    "filter_orientation",
    "load_csv",
    "make_folds",
    "GcnConfig",
    "GcnModel",
    "backward",
    "forward",
    "gcn_layer_forward",
    "init_model",
    "load_model",
    "save_model",
    "Metrics",
    "TrainConfig",
    "TrainResult",
    "evaluate",
    "train",
]
