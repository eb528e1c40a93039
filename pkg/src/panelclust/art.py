"""Approximate randomization test over the group of sign changes.

The test compares a statistic of the cluster-level estimates
``s_j = c_j (r' beta_j - value)`` with its values under every sign flip
``g * s``, ``g`` in ``{-1, 1}^q``. Under the null the cluster estimates are
asymptotically symmetric around the hypothesized value, which makes the
reference distribution exact in the limit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Sequence

import numpy as np

from .assignment import ClusterAssignment
from .exceptions import InvalidConfig, OrbitTooLarge, SingleCluster
from .panel import PanelData
from .regression import OlsFit, cluster_ols
from .results import LinearRestriction, TestResult

__all__ = [
    "StatisticVector",
    "statistic_vector",
    "r_statistic",
    "orbit_statistics",
    "art_decision",
    "art_test",
    "MAX_FULL_CLUSTERS",
]

#: largest cluster count for which the whole sign-change group is enumerated
MAX_FULL_CLUSTERS = 20
_CHUNK = 1 << 16
_ROUNDING = 64 * np.finfo(float).eps


@dataclass(frozen=True, eq=False)
class StatisticVector:
    s: np.ndarray
    scaling: str = "unscaled"
    n_sizes: np.ndarray | None = None

    def __post_init__(self) -> None:
        if self.scaling not in ("unscaled", "sqrt_n"):
            raise InvalidConfig(f"scaling must be 'unscaled' or 'sqrt_n', got {self.scaling!r}")
        s = np.array(self.s, dtype=float).ravel()
        object.__setattr__(self, "s", s)
        if self.scaling == "sqrt_n":
            if self.n_sizes is None:
                raise InvalidConfig("sqrt_n scaling needs the cluster sizes")
            n = np.array(self.n_sizes, dtype=float).ravel()
            if n.shape != s.shape or np.any(n <= 0):
                raise InvalidConfig("cluster sizes must be positive and match the statistic length")
            object.__setattr__(self, "n_sizes", n)

    @property
    def q_hat(self) -> int:
        return self.s.size


def statistic_vector(
    fits: Sequence[OlsFit],
    n_sizes: Sequence[int] | np.ndarray,
    restriction: LinearRestriction,
    scaling: str = "sqrt_n",
) -> StatisticVector:
    """Stack ``c_j (r' beta_j - value)`` with ``c_j = 1`` or ``sqrt(n_j)``."""
    est = np.array([restriction.r @ f.beta_hat for f in fits])
    diffs = est - restriction.value
    # differences at rounding level are exact zeros (noiseless fits)
    scale = np.abs(restriction.r) @ np.abs(np.array([f.beta_hat for f in fits])).T + abs(restriction.value)
    diffs[np.abs(diffs) <= _ROUNDING * scale] = 0.0
    n = np.asarray(n_sizes, dtype=float)
    if scaling == "sqrt_n":
        diffs = np.sqrt(n) * diffs
    return StatisticVector(diffs, scaling, n if scaling == "sqrt_n" else None)


def _r_values(s: np.ndarray, n: np.ndarray | None, form: str) -> np.ndarray:
    """Statistic for each row of ``s`` (shape (M, q))."""
    q = s.shape[1]
    num = math.sqrt(q) * np.abs(s.sum(axis=1))
    if form == "ratio":
        if n is None:
            dev = s - s.mean(axis=1, keepdims=True)
            den = (dev * dev).sum(axis=1)
        else:
            # sum_j n_j (b_j - mean b)^2 with b_j = s_j / sqrt(n_j)
            b = s / np.sqrt(n)
            dev = b - b.mean(axis=1, keepdims=True)
            den = (n * dev * dev).sum(axis=1)
    elif form == "t":
        dev = s - s.mean(axis=1, keepdims=True)
        den = q * np.sqrt((dev * dev).sum(axis=1) / (q - 1))
    else:
        raise InvalidConfig(f"form must be 'ratio' or 't', got {form!r}")
    out = np.zeros_like(num)
    pos = den > 0
    out[pos] = num[pos] / den[pos]
    out[~pos & (num > 0)] = np.inf
    return out


def r_statistic(s: StatisticVector | np.ndarray, form: str = "ratio") -> float:
    """``sqrt(q) |sum_j s_j| / sum_j (s_j - mean s)^2``.

    Under ``sqrt_n`` scaling the denominator is ``sum_j n_j (b_j - mean b)^2``
    with ``b_j = s_j / sqrt(n_j)``. A zero denominator maps to ``inf`` when
    the numerator is positive and to 0 otherwise. ``form="t"`` gives the
    conventional one-sample t statistic of ``s`` instead.
    """
    if not isinstance(s, StatisticVector):
        s = StatisticVector(s)
    if s.q_hat < 2:
        raise SingleCluster()
    return float(_r_values(s.s[None, :], s.n_sizes, form)[0])


def _sign_rows(start: int, stop: int, q: int) -> np.ndarray:
    idx = np.arange(start, stop, dtype=np.int64)
    bits = (idx[:, None] >> np.arange(q, dtype=np.int64)) & 1
    return 1.0 - 2.0 * bits


def orbit_statistics(
    s: StatisticVector | np.ndarray,
    mode: str = "full",
    n_draws: int = 9999,
    random_state: int | np.random.Generator | None = None,
    form: str = "ratio",
) -> np.ndarray:
    """Sorted statistic values over the sign-change orbit of ``s``.

    ``mode="full"`` enumerates all ``2**q`` sign vectors (row 0 is the
    identity). ``mode="sampled"`` uses the identity plus ``n_draws - 1``
    independent uniform draws from the group.
    """
    if not isinstance(s, StatisticVector):
        s = StatisticVector(s)
    q = s.q_hat
    if q < 2:
        raise SingleCluster()
    if mode == "full":
        if q > MAX_FULL_CLUSTERS:
            raise OrbitTooLarge(f"2**{q} sign changes exceed the enumeration cap (q <= {MAX_FULL_CLUSTERS})")
        M = 1 << q
        parts = [
            _r_values(_sign_rows(a, min(a + _CHUNK, M), q) * s.s, s.n_sizes, form)
            for a in range(0, M, _CHUNK)
        ]
        values = np.concatenate(parts)
    elif mode == "sampled":
        if n_draws < 2:
            raise InvalidConfig("sampled orbit needs n_draws >= 2")
        rng = np.random.default_rng(random_state)
        signs = np.empty((n_draws, q))
        signs[0] = 1.0
        signs[1:] = rng.choice(np.array([-1.0, 1.0]), size=(n_draws - 1, q))
        values = _r_values(signs * s.s, s.n_sizes, form)
    else:
        raise InvalidConfig(f"mode must be 'full' or 'sampled', got {mode!r}")
    values.sort()
    return values


def _as_fraction(alpha) -> Fraction:
    if isinstance(alpha, Fraction):
        return alpha
    return Fraction(repr(float(alpha)))


def art_decision(observed: float, orbit: np.ndarray, alpha, deterministic: bool = False) -> TestResult:
    """Randomization test decision against a sorted orbit.

    With ``k = ceil((1 - alpha) M)``, rejects with probability 1 above the
    k-th order statistic, with probability
    ``a = (M alpha - M_plus) / M_zero`` on ties with it (0 when
    ``deterministic``), and never below. ``alpha`` may be a
    :class:`~fractions.Fraction`; the exact rejection probability is kept
    on ``phi_exact``.
    """
    orbit = np.asarray(orbit, dtype=float)
    M = orbit.size
    if M == 0:
        raise InvalidConfig("orbit is empty")
    a_frac = _as_fraction(alpha)
    if not 0 < a_frac < 1:
        raise InvalidConfig(f"alpha must lie in (0, 1), got {alpha}")
    k = math.ceil((1 - a_frac) * M)
    critical = orbit[k - 1]
    m_plus = int(np.count_nonzero(orbit > critical))
    m_zero = int(np.count_nonzero(orbit == critical))
    if observed > critical:
        phi = Fraction(1)
    elif observed == critical and not deterministic:
        phi = (M * a_frac - m_plus) / m_zero
    else:
        phi = Fraction(0)
    p_value = np.count_nonzero(orbit >= observed) / M
    return TestResult(
        statistic=float(observed),
        phi=float(phi),
        p_value=float(p_value),
        alpha=float(alpha),
        method="art",
        critical_value=float(critical),
        critical_index=k,
        orbit_size=M,
        phi_exact=phi,
    )


def art_test(
    panel: PanelData,
    clusters: ClusterAssignment,
    restriction: LinearRestriction,
    alpha: float = 0.10,
    *,
    scaling: str = "sqrt_n",
    mode: str = "auto",
    n_draws: int = 9999,
    deterministic: bool = False,
    random_state: int | np.random.Generator | None = None,
    form: str = "ratio",
) -> TestResult:
    """Cluster-by-cluster OLS followed by the sign-change randomization test.

    ``mode="auto"`` enumerates the group when ``q_hat <= 20`` and samples
    ``n_draws`` elements otherwise.

    Raises
    ------
    SingleCluster
        Fewer than two clusters.
    ClusterRankDeficient
        Some cluster cannot identify the coefficients on its own.
    """
    restriction.check(panel.n_covariates)
    if clusters.q_hat < 2:
        raise SingleCluster()
    fits, n_sizes = cluster_ols(panel, clusters)
    sv = statistic_vector(fits, n_sizes, restriction, scaling)
    if mode == "auto":
        mode = "full" if sv.q_hat <= MAX_FULL_CLUSTERS else "sampled"
    orbit = orbit_statistics(sv, mode, n_draws, random_state, form)
    observed = r_statistic(sv, form)
    result = art_decision(observed, orbit, alpha, deterministic)
    return replace(result, q_hat=sv.q_hat)
