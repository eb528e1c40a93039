"""Cluster-robust covariance and the associated normal t-test."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .assignment import ClusterAssignment
from .exceptions import InvalidConfig, LengthMismatch, NonPositiveVariance, RankDeficient, SingleCluster
from .normal import normal_quantile
from .panel import PanelData
from .regression import RANK_TOL, OlsFit, pooled_ols
from .results import LinearRestriction, TestResult

__all__ = ["CceEstimate", "clustered_covariance", "cce_t_test", "variance_floor", "VARIANTS"]

VARIANTS = ("sandwich", "paper_meat")


@dataclass(frozen=True, eq=False)
class CceEstimate:
    """Clustered covariance pieces.

    Attributes
    ----------
    meat : ndarray, shape (p, p)
        ``(1/q) sum_j (X_j' e_j)(X_j' e_j)'``.
    sandwich : ndarray, shape (p, p)
        ``(X'X)^-1 [sum_j (X_j' e_j)(X_j' e_j)'] (X'X)^-1``, the covariance
        of ``beta_hat``.
    variant : str
        Which of the two feeds the t statistic.
    q_hat : int
    """

    meat: np.ndarray
    sandwich: np.ndarray
    variant: str
    q_hat: int


def _bread_inverse(xtx: np.ndarray) -> np.ndarray:
    s = np.linalg.svd(xtx, compute_uv=False)
    if s[0] == 0.0 or s[-1] < RANK_TOL * s[0]:
        raise RankDeficient("X'X is singular; cannot form the clustered covariance")
    return np.linalg.inv(xtx)


def variance_floor(panel: PanelData, r: np.ndarray, bread_inv: np.ndarray) -> float:
    """Rounding-level size of ``r' V r``.

    The unit-clustered variance with ``|x||y|`` in place of the scores;
    variances below this multiple of machine precision count as zero.
    """
    mags = np.einsum("itp,it->ip", np.abs(panel.x), np.abs(panel.y))
    v = r @ bread_inv @ (mags.T @ mags) @ bread_inv @ r
    return float((64 * np.finfo(float).eps) ** 2 * v)


def clustered_covariance(
    panel: PanelData, fit: OlsFit, clusters: ClusterAssignment, variant: str = "sandwich"
) -> CceEstimate:
    if variant not in VARIANTS:
        raise InvalidConfig(f"variant must be one of {VARIANTS}, got {variant!r}")
    if clusters.n_units != panel.n_units:
        raise LengthMismatch(f"assignment covers {clusters.n_units} units, panel has {panel.n_units}")
    # per-unit score sums, then per-cluster sums in label order
    unit_scores = np.einsum("itp,it->ip", panel.x, fit.residuals)
    p = panel.n_covariates
    cluster_scores = np.zeros((clusters.q_hat, p))
    np.add.at(cluster_scores, clusters.labels - 1, unit_scores)
    outer = cluster_scores.T @ cluster_scores
    meat = outer / clusters.q_hat
    xs = panel.x.reshape(-1, p)
    bread_inv = _bread_inverse(xs.T @ xs)
    sandwich = bread_inv @ outer @ bread_inv
    sandwich = (sandwich + sandwich.T) / 2
    return CceEstimate(meat, sandwich, variant, clusters.q_hat)


def cce_t_test(
    panel: PanelData,
    clusters: ClusterAssignment,
    restriction: LinearRestriction,
    alpha: float = 0.10,
    variant: str = "sandwich",
    fit: OlsFit | None = None,
) -> TestResult:
    """Two-sided normal test of ``r' beta = value`` with clustered errors.

    ``variant="sandwich"`` uses ``(r'b - value) / sqrt(r' V r)`` with the
    sandwich covariance; ``"paper_meat"`` uses
    ``sqrt(q) (r'b - value) / sqrt(r' meat r)``.
    """
    restriction.check(panel.n_covariates)
    if not 0 < alpha < 1:
        raise InvalidConfig(f"alpha must lie in (0, 1), got {alpha}")
    if clusters.q_hat < 2:
        raise SingleCluster()
    if fit is None:
        fit = pooled_ols(panel)
    est = clustered_covariance(panel, fit, clusters, variant)
    r = restriction.r
    diff = float(r @ fit.beta_hat) - restriction.value
    if variant == "sandwich":
        var = float(r @ est.sandwich @ r)
        scale = 1.0
        xs = panel.x.reshape(-1, panel.n_covariates)
        floor = variance_floor(panel, r, np.linalg.inv(xs.T @ xs))
    else:
        var = float(r @ est.meat @ r)
        scale = math.sqrt(est.q_hat)
        floor = variance_floor(panel, r, np.eye(panel.n_covariates)) / est.q_hat
    if not var > floor:
        raise NonPositiveVariance(f"r'Vr = {var:.3g} is not positive")
    stat = scale * diff / math.sqrt(var)
    crit = normal_quantile(1 - alpha / 2)
    return TestResult(
        statistic=stat,
        phi=float(abs(stat) > crit),
        p_value=math.erfc(abs(stat) / math.sqrt(2.0)),
        alpha=alpha,
        method=f"cce_{variant}",
        q_hat=est.q_hat,
        critical_value=crit,
    )
