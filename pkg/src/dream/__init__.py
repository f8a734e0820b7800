"""Label-noise robust node classification with anchor-based reliability weights."""

from dream.anchors import CandidateSets, build_candidates, homogeneity, rescaled_cosine, score_all, select_top_k
from dream.graph import Graph, NormalizedAdjacency, bounded_geodesics, build_graph, normalize_adjacency, spmm
from dream.noise import LabelState, NoiseSpec, corrupt_asymmetric, corrupt_pair, corrupt_uniform
from dream.trainer import TrainConfig, evaluate, train

__version__ = "0.1.0"

__all__ = [
    "CandidateSets",
    "Graph",
    "LabelState",
    "NoiseSpec",
    "NormalizedAdjacency",
    "TrainConfig",
    "bounded_geodesics",
    "build_candidates",
    "build_graph",
    "corrupt_asymmetric",
    "corrupt_pair",
    "corrupt_uniform",
    "evaluate",
    "homogeneity",
    "normalize_adjacency",
    "rescaled_cosine",
    "score_all",
    "select_top_k",
    "spmm",
    "train",
]
