"""Exception hierarchy.

Every error raised on bad input derives from :class:`PanelClusterError`;
most also derive from :class:`ValueError` so generic callers can catch them.
"""

from __future__ import annotations


class PanelClusterError(Exception):
    """Base class for all package errors."""


# -- panel ingestion -----------------------------------------------------


class SchemaMismatch(PanelClusterError, ValueError):
    pass


class MissingCell(PanelClusterError, ValueError):
    """The panel is unbalanced or a cell is empty."""


class NonFiniteValue(PanelClusterError, ValueError):
    pass


class DuplicateObservation(PanelClusterError, ValueError):
    pass


class ShapeMismatch(PanelClusterError, ValueError):
    pass


class LengthMismatch(PanelClusterError, ValueError):
    pass


# -- estimation ----------------------------------------------------------


class RankDeficient(PanelClusterError, ValueError):
    pass


class ClusterRankDeficient(RankDeficient):
    """A cluster's own design matrix cannot identify the coefficients.

    Randomization inference needs the coefficients to be estimable
    cluster by cluster.
    """

    def __init__(self, cluster: int, message: str | None = None):
        self.cluster = cluster
        super().__init__(
            message
            or f"cluster {cluster}: design is rank deficient; the randomization "
            "test requires the coefficients to be estimable cluster by cluster"
        )


class BandwidthTooLarge(PanelClusterError, ValueError):
    pass


class BandwidthTooLargeForBlock(BandwidthTooLarge):
    pass


class DegenerateDiagonal(PanelClusterError, ValueError):
    def __init__(self, unit: int, message: str | None = None):
        self.unit = unit
        super().__init__(
            message or f"unit index {unit} has a zero long-run variance (constant-zero scores)"
        )


class TooFewPeriods(PanelClusterError, ValueError):
    pass


# -- inference -----------------------------------------------------------


class OrbitTooLarge(PanelClusterError, ValueError):
    pass


class SingleCluster(PanelClusterError, ValueError):
    def __init__(self, message: str = "single cluster: test undefined"):
        super().__init__(message)


class NonPositiveVariance(PanelClusterError, ValueError):
    pass


class DomainError(PanelClusterError, ValueError):
    pass


class InvalidConfig(PanelClusterError, ValueError):
    pass
