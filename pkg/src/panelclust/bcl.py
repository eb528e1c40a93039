"""Entrywise-thresholded long-run variance of the pooled OLS estimator.

The comparison method: no cluster structure is estimated; instead each
pairwise Newey-West block ``V_ij`` is kept or dropped by an adaptive
threshold, and the surviving blocks are summed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cce import variance_floor
from .exceptions import InvalidConfig, NonPositiveVariance
from .longrun import KernelSpec, cross_moments
from .normal import normal_quantile
from .panel import PanelData
from .regression import OlsFit, ScoreSeries, pooled_ols, score_series
from .results import LinearRestriction, TestResult

__all__ = [
    "BclEstimate",
    "bcl_pair",
    "bcl_variance",
    "bcl_test",
    "default_bcl_bandwidth",
    "DEFAULT_BCL_CONSTANT",
    "KEEP_RULES",
]

DEFAULT_BCL_CONSTANT = 0.5
KEEP_RULES = ("signed", "absolute")


def default_bcl_bandwidth(n_periods: int) -> int:
    """``floor(sqrt(T))``, capped below T."""
    return max(1, min(math.isqrt(n_periods), n_periods - 1))


@dataclass(frozen=True, eq=False)
class BclEstimate:
    """Thresholded average ``(1/N) sum_ij V_ij 1{kept}``.

    ``kept_pairs`` counts ordered pairs (i, j) with at least one surviving
    entry, diagonal pairs included.
    """

    v_hat: np.ndarray
    kept_pairs: int
    threshold_rule: str


def bcl_pair(scores: ScoreSeries, i: int, j: int, kernel: KernelSpec) -> np.ndarray:
    """Newey-West cross block with every lag term divided by T."""
    w = scores.w
    T = w.shape[1]
    kernel.check(T)
    wi, wj = w[i], w[j]
    out = wi.T @ wj
    for h in range(1, kernel.bandwidth + 1):
        omega = kernel.weight(h)
        if omega == 0.0:
            continue
        out = out + omega * (wi[h:].T @ wj[: T - h] + wi[: T - h].T @ wj[h:])
    return out / T


def _keep_mask(blocks: np.ndarray, constant: float, keep: str, n_units: int, n_periods: int) -> np.ndarray:
    n, p = blocks.shape[:2]
    diag = np.einsum("iaia->ia", blocks)
    if constant == math.inf:
        mask = np.zeros(blocks.shape, dtype=bool)
    else:
        scale = np.sqrt(np.abs(np.einsum("ia,jb->iajb", diag, diag)))
        level = constant * scale * math.sqrt(math.log(n_units) / n_periods) if constant else 0.0
        values = blocks if keep == "signed" else np.abs(blocks)
        mask = values >= level
    idx = np.arange(n)
    mask[idx, :, idx, :] = True
    return mask


def bcl_variance(
    panel: PanelData,
    fit: OlsFit,
    kernel: KernelSpec,
    constant: float = DEFAULT_BCL_CONSTANT,
    keep: str = "signed",
) -> BclEstimate:
    """Sum of thresholded pair blocks, divided by N and symmetrized.

    Entry (a, b) of ``V_ij`` survives when it is at least
    ``constant * sqrt(|V_ii,aa V_jj,bb|) * sqrt(log N / T)``; with
    ``keep="absolute"`` its magnitude is compared instead. Diagonal pairs
    always survive. ``constant=0`` keeps everything that passes the sign
    rule, ``constant=inf`` keeps only diagonal pairs.
    """
    if keep not in KEEP_RULES:
        raise InvalidConfig(f"keep must be one of {KEEP_RULES}, got {keep!r}")
    if not constant >= 0:
        raise InvalidConfig(f"threshold constant must be non-negative, got {constant}")
    scores = score_series(panel, fit)
    n, T = panel.n_units, panel.n_periods
    blocks = cross_moments(scores.w, kernel, lag_divisor="T")
    mask = _keep_mask(blocks, constant, keep, n, T)
    v = np.where(mask, blocks, 0.0).sum(axis=(0, 2)) / n
    v = (v + v.T) / 2
    kept = int(mask.any(axis=(1, 3)).sum())
    rule = f"{keep} >= {constant:g} * sqrt(V_ii V_jj) * sqrt(log N / T)"
    return BclEstimate(v, kept, rule)


def bcl_test(
    panel: PanelData,
    restriction: LinearRestriction,
    alpha: float = 0.10,
    kernel: KernelSpec | None = None,
    constant: float = DEFAULT_BCL_CONSTANT,
    keep: str = "signed",
    fit: OlsFit | None = None,
) -> TestResult:
    """Normal t-test of ``r' beta = value`` using the thresholded variance.

    ``Var(beta_hat) = (X'X)^-1 (N T V) (X'X)^-1``. The bandwidth defaults
    to ``floor(sqrt(T))``.
    """
    restriction.check(panel.n_covariates)
    if not 0 < alpha < 1:
        raise InvalidConfig(f"alpha must lie in (0, 1), got {alpha}")
    if kernel is None:
        kernel = KernelSpec(default_bcl_bandwidth(panel.n_periods))
    if fit is None:
        fit = pooled_ols(panel)
    est = bcl_variance(panel, fit, kernel, constant, keep)
    n, T, p = panel.x.shape
    xs = panel.x.reshape(-1, p)
    bread_inv = np.linalg.inv(xs.T @ xs)
    cov = bread_inv @ (n * T * est.v_hat) @ bread_inv
    r = restriction.r
    var = float(r @ cov @ r)
    if not var > variance_floor(panel, r, bread_inv):
        raise NonPositiveVariance(f"r'Vr = {var:.3g} is not positive")
    stat = (float(r @ fit.beta_hat) - restriction.value) / math.sqrt(var)
    crit = normal_quantile(1 - alpha / 2)
    return TestResult(
        statistic=stat,
        phi=float(abs(stat) > crit),
        p_value=math.erfc(abs(stat) / math.sqrt(2.0)),
        alpha=alpha,
        method="bcl",
        critical_value=crit,
    )
