"""Cluster discovery in panel data and inference with the discovered clusters."""

from .art import art_test
from .assignment import ClusterAssignment, clusters_equivalent, purity, refines
from .bcl import bcl_test, bcl_variance
from .cce import cce_t_test, clustered_covariance
from .clustering import ThresholdConfig, connected_components, discover_clusters, threshold_adjacency
from .estimators import AdaptiveClustering, ClusteredTTest, RandomizationTest, ThresholdedHACTest
from .longrun import KernelSpec, LongRunMatrix, longrun_matrix
from .panel import DataSchema, PanelData, from_arrays, load_panel
from .regression import cluster_ols, pooled_ols, score_series
from .results import LinearRestriction, TestResult
from .tuning import TuningGrid, cross_validate, default_grid

__version__ = "0.1.0"
