from .dtw import DistanceMatrix, dtw_distance, dtw_matrix, znorm
from .clustering import (
    ClusterAssignment,
    adjusted_rand_index,
    elbow_suggest,
    spectral_cluster,
)
from .granger import CausalityResult, UntestableError, causality_scan, granger_test

__all__ = [
    "DistanceMatrix",
    "dtw_distance",
    "dtw_matrix",
    "znorm",
    "ClusterAssignment",
    "adjusted_rand_index",
    "elbow_suggest",
    "spectral_cluster",
    "CausalityResult",
    "UntestableError",
    "causality_scan",
    "granger_test",
]
