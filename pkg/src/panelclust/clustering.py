"""Cluster discovery: threshold the long-run correlation graph, take components."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .assignment import ClusterAssignment
from .exceptions import InvalidConfig
from .longrun import KernelSpec, LongRunMatrix, longrun_matrix
from .panel import PanelData
from .regression import pooled_ols, score_series

__all__ = [
    "ThresholdConfig",
    "UnionFind",
    "threshold_adjacency",
    "connected_components",
    "discover_clusters",
]


@dataclass(frozen=True)
class ThresholdConfig:
    """Link-removal threshold.

    ``eta_tilde`` plays the role of ``T**(eta - 1/2)``. With
    ``applied_to="correlation"`` it is compared against the normalized
    matrix and must lie in [0, 1]; ``"raw"`` compares the unnormalized
    magnitudes and accepts any non-negative value.
    """

    eta_tilde: float
    applied_to: str = "correlation"

    def __post_init__(self) -> None:
        if self.applied_to not in ("correlation", "raw"):
            raise InvalidConfig(f"applied_to must be 'correlation' or 'raw', got {self.applied_to!r}")
        eta = float(self.eta_tilde)
        if not eta >= 0 or (self.applied_to == "correlation" and eta > 1):
            raise InvalidConfig(f"eta_tilde must lie in [0, 1], got {self.eta_tilde}")
        object.__setattr__(self, "eta_tilde", eta)


class UnionFind:
    """Disjoint sets over 0..n-1 with path compression and union by size."""

    def __init__(self, n: int):
        self.parent = list(range(n))
        self.size = [1] * n

    def find(self, a: int) -> int:
        root = a
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[a] != root:
            self.parent[a], a = root, self.parent[a]
        return root

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]


def threshold_adjacency(matrix: LongRunMatrix, config: ThresholdConfig) -> np.ndarray:
    """Boolean adjacency keeping links at or above the threshold.

    The diagonal is always True.
    """
    values = matrix.corr if config.applied_to == "correlation" else matrix.sigma
    adjacency = values >= config.eta_tilde
    np.fill_diagonal(adjacency, True)
    return adjacency


def connected_components(adjacency: np.ndarray) -> ClusterAssignment:
    """Label units by the connected component they fall in."""
    adjacency = np.asarray(adjacency, dtype=bool)
    n = adjacency.shape[0]
    uf = UnionFind(n)
    rows, cols = np.nonzero(np.triu(adjacency, 1))
    for a, b in zip(rows.tolist(), cols.tolist()):
        uf.union(a, b)
    return ClusterAssignment(np.array([uf.find(i) for i in range(n)]))


def discover_clusters(
    panel: PanelData, kernel: KernelSpec, config: ThresholdConfig
) -> tuple[ClusterAssignment, LongRunMatrix]:
    """Pooled OLS -> scores -> long-run matrix -> threshold -> components."""
    fit = pooled_ols(panel)
    matrix = longrun_matrix(score_series(panel, fit), kernel)
    return connected_components(threshold_adjacency(matrix, config)), matrix
