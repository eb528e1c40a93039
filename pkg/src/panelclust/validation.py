"""Input checks shared by the estimator wrappers."""

from __future__ import annotations

import math

import numpy as np

from .assignment import ClusterAssignment
from .exceptions import InvalidConfig, LengthMismatch
from .panel import PanelData, from_arrays
from .results import LinearRestriction

__all__ = ["check_panel", "check_restriction", "check_alpha", "check_clusters"]


def check_panel(X, y=None) -> PanelData:
    """Coerce ``(X, y)`` to a :class:`PanelData`.

    ``X`` is either a ``PanelData`` (``y`` must then be None) or a covariate
    array of shape (N, T, p); a 2-d ``X`` of shape (N, T) is read as a
    single covariate.
    """
    if isinstance(X, PanelData):
        if y is not None:
            raise InvalidConfig("pass y inside the PanelData, not separately")
        return X
    if y is None:
        raise InvalidConfig("y is required when X is an array")
    X = np.asarray(X, dtype=float)
    if X.ndim == 2:
        X = X[:, :, None]
    return from_arrays(y, X)


def check_restriction(r, value: float, n_covariates: int) -> LinearRestriction:
    """Build the restriction; ``r=None`` means the first coefficient."""
    if r is None:
        r = np.eye(n_covariates)[0]
    restriction = LinearRestriction(np.asarray(r, dtype=float), value)
    restriction.check(n_covariates)
    return restriction


def check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not (math.isfinite(alpha) and 0 < alpha < 1):
        raise InvalidConfig(f"alpha must lie in (0, 1), got {alpha}")
    return alpha


def check_clusters(clusters, n_units: int) -> ClusterAssignment:
    """Accept a :class:`ClusterAssignment` or any length-N label array."""
    if clusters is None:
        raise InvalidConfig("cluster labels are required")
    if not isinstance(clusters, ClusterAssignment):
        clusters = ClusterAssignment(np.asarray(clusters).ravel())
    if clusters.n_units != n_units:
        raise LengthMismatch(f"{clusters.n_units} cluster labels for {n_units} units")
    return clusters
