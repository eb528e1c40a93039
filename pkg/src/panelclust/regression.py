"""Pooled and cluster-by-cluster OLS, and the score series they induce."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .assignment import ClusterAssignment
from .exceptions import ClusterRankDeficient, LengthMismatch, RankDeficient, ShapeMismatch
from .panel import PanelData

__all__ = ["OlsFit", "ScoreSeries", "pooled_ols", "cluster_ols", "score_series", "RANK_TOL"]

#: relative singular-value cutoff below which a design is rank deficient
RANK_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class OlsFit:
    """Least-squares fit on a (sub)panel.

    Attributes
    ----------
    beta_hat : ndarray, shape (p,)
    residuals : ndarray, shape (n_units, T)
    gram : ndarray, shape (p, p)
        ``X'X / (n_units * T)``.
    min_singular_value : float
        Smallest singular value of ``gram``.
    """

    beta_hat: np.ndarray
    residuals: np.ndarray
    gram: np.ndarray
    min_singular_value: float


@dataclass(frozen=True, eq=False)
class ScoreSeries:
    """Scores ``w[i, t, a] = x[i, t, a] * residual[i, t]``, shape (N, T, p)."""

    w: np.ndarray

    @property
    def n_units(self) -> int:
        return self.w.shape[0]

    @property
    def n_periods(self) -> int:
        return self.w.shape[1]

    @property
    def n_covariates(self) -> int:
        return self.w.shape[2]


def _lstsq(x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Solve via thin SVD; returns (beta, singular values of x)."""
    if x.shape[0] < x.shape[1]:
        raise RankDeficient(f"{x.shape[0]} observations cannot identify {x.shape[1]} coefficients")
    u, s, vt = np.linalg.svd(x, full_matrices=False)
    if s[0] == 0.0 or s[-1] < RANK_TOL * s[0]:
        raise RankDeficient(
            f"design matrix is rank deficient (singular values {s[-1]:.3g} vs {s[0]:.3g})"
        )
    return vt.T @ ((u.T @ y) / s), s


def _fit(y: np.ndarray, x: np.ndarray) -> OlsFit:
    n, t, p = x.shape
    xs = x.reshape(n * t, p)
    ys = y.reshape(n * t)
    beta, s = _lstsq(xs, ys)
    resid = y - x @ beta
    gram = xs.T @ xs / (n * t)
    beta.setflags(write=False)
    resid.setflags(write=False)
    return OlsFit(beta, resid, gram, float(s[-1] ** 2 / (n * t)))


def pooled_ols(panel: PanelData) -> OlsFit:
    """OLS of y on x over all N*T observations (no degrees-of-freedom correction)."""
    return _fit(panel.y, panel.x)


def cluster_ols(panel: PanelData, clusters: ClusterAssignment) -> tuple[list[OlsFit], np.ndarray]:
    """Separate OLS fits for each cluster, in label order.

    Returns the fits and the unit count of each cluster.
    """
    if clusters.n_units != panel.n_units:
        raise LengthMismatch(f"assignment covers {clusters.n_units} units, panel has {panel.n_units}")
    fits = []
    for j, members in enumerate(clusters.groups(), start=1):
        try:
            fits.append(_fit(panel.y[members], panel.x[members]))
        except RankDeficient:
            raise ClusterRankDeficient(j) from None
    return fits, clusters.sizes.copy()


def score_series(panel: PanelData, fit: OlsFit) -> ScoreSeries:
    if fit.residuals.shape != panel.y.shape:
        raise ShapeMismatch(
            f"residuals have shape {fit.residuals.shape}, panel outcome {panel.y.shape}"
        )
    w = panel.x * fit.residuals[:, :, None]
    w.setflags(write=False)
    return ScoreSeries(w)
