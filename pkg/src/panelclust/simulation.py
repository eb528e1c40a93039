"""Monte Carlo harness: clustered AR(1) panels, recovery and size/power runs.

Replication ``r`` draws from ``SeedSequence(seed, spawn_key=(r,))``, so a
run is reproducible from its master seed whatever the worker count.
"""

from __future__ import annotations

import csv
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .art import art_test
from .assignment import ClusterAssignment, clusters_equivalent, purity
from .bcl import DEFAULT_BCL_CONSTANT, bcl_test, default_bcl_bandwidth
from .cce import cce_t_test
from .clustering import ThresholdConfig, connected_components, threshold_adjacency
from .exceptions import InvalidConfig, PanelClusterError
from .longrun import KernelSpec, longrun_matrix
from .panel import PanelData
from .regression import pooled_ols, score_series
from .results import LinearRestriction
from .tuning import cross_validate

__all__ = [
    "DgpConfig",
    "ExperimentConfig",
    "SimulationSummary",
    "generate",
    "run_experiment",
    "run_recovery",
    "run_size_power",
    "write_table",
    "METHODS",
]

log = logging.getLogger(__name__)

METHODS = ("art_oracle", "art_discovered", "cce_oracle", "cce_discovered", "bcl")


@dataclass(frozen=True)
class DgpConfig:
    """``Y_it = beta + V_g(i),t / 2 + U_it / 2`` with AR(1) ``U`` and ``V``."""

    q: int
    n_units: int
    n_periods: int
    rho: float = 0.2
    phi: float = 0.2
    beta: float = 1.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.q < 1 or self.n_units < 1 or self.n_units % self.q:
            raise InvalidConfig(f"N={self.n_units} must be a positive multiple of q={self.q}")
        if self.n_periods < 2:
            raise InvalidConfig("need at least two periods")
        if not (abs(self.rho) < 1 and abs(self.phi) < 1):
            raise InvalidConfig("AR coefficients must lie in (-1, 1)")


@dataclass(frozen=True)
class ExperimentConfig:
    """One Monte Carlo cell.

    ``tuning`` is ``"cv"`` or ``"fixed"``; the fixed mode reads
    ``bandwidth`` and ``eta_tilde``. Randomized ART decisions are realized
    with one uniform draw unless ``deterministic``.
    """

    dgp: DgpConfig
    replications: int
    alpha: float = 0.10
    beta_null: float = 1.0
    methods: tuple[str, ...] = METHODS
    tuning: str = "cv"
    bandwidth: int | None = None
    eta_tilde: float | None = None
    deterministic: bool = True
    art_draws: int = 9999
    cce_variant: str = "sandwich"
    bcl_constant: float = DEFAULT_BCL_CONSTANT
    bcl_bandwidth: int | None = None
    cv_comparator: str = "signed"
    recovery: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "methods", tuple(self.methods))
        if self.replications < 1:
            raise InvalidConfig("replications must be >= 1")
        unknown = [m for m in self.methods if m not in METHODS]
        if unknown:
            raise InvalidConfig(f"unknown methods {unknown}; choose from {METHODS}")
        if self.tuning not in ("cv", "fixed"):
            raise InvalidConfig(f"tuning must be 'cv' or 'fixed', got {self.tuning!r}")
        if self.tuning == "fixed" and (self.bandwidth is None or self.eta_tilde is None):
            raise InvalidConfig("fixed tuning needs bandwidth and eta_tilde")
        if not 0 < self.alpha < 1:
            raise InvalidConfig("alpha must lie in (0, 1)")

    @property
    def needs_discovery(self) -> bool:
        return self.recovery or any(m.endswith("_discovered") for m in self.methods)


@dataclass
class SimulationSummary:
    experiment: ExperimentConfig
    replications: int
    rejection_rate: dict[str, float] = field(default_factory=dict)
    mc_standard_error: dict[str, float] = field(default_factory=dict)
    undefined: dict[str, int] = field(default_factory=dict)
    min_purity_mean: float | None = None
    avg_purity_mean: float | None = None
    q_hat_mean: float | None = None
    recovery_se: dict[str, float] = field(default_factory=dict)
    perfect_recovery_rate: float | None = None

    def rows(self):
        """(label, estimate, mc_se) triples in a fixed order."""
        for m in self.experiment.methods:
            yield m, self.rejection_rate[m], self.mc_standard_error[m]
        if self.q_hat_mean is not None:
            yield "min_purity", self.min_purity_mean, self.recovery_se["min_purity"]
            yield "avg_purity", self.avg_purity_mean, self.recovery_se["avg_purity"]
            yield "q_hat", self.q_hat_mean, self.recovery_se["q_hat"]
            p = self.perfect_recovery_rate
            yield "perfect_recovery", p, math.sqrt(p * (1 - p) / self.replications)


def generate(config: DgpConfig, rng: np.random.Generator | None = None) -> tuple[PanelData, ClusterAssignment]:
    """Draw one panel and its true clusters (contiguous blocks of N/q units).

    Both AR(1) processes start from their stationary laws. The only
    covariate is the constant, so ``beta`` is the intercept.
    """
    if rng is None:
        rng = np.random.default_rng(config.seed)
    n, T, q = config.n_units, config.n_periods, config.q
    eps = rng.standard_normal((n, T))
    nu = rng.standard_normal((q, T))
    u = np.empty((n, T))
    v = np.empty((q, T))
    u[:, 0] = eps[:, 0] / math.sqrt(1 - config.rho**2)
    v[:, 0] = nu[:, 0] / math.sqrt(1 - config.phi**2)
    for t in range(1, T):
        u[:, t] = config.rho * u[:, t - 1] + eps[:, t]
        v[:, t] = config.phi * v[:, t - 1] + nu[:, t]
    groups = np.repeat(np.arange(q), n // q)
    y = config.beta + 0.5 * v[groups] + 0.5 * u
    panel = PanelData(y, np.ones((n, T, 1)), tuple(str(i) for i in range(n)), ("const",))
    return panel, ClusterAssignment(groups)


def _replicate(args: tuple[ExperimentConfig, int]) -> dict:
    exp, r = args
    rng = np.random.default_rng(np.random.SeedSequence(exp.dgp.seed, spawn_key=(r,)))
    panel, truth = generate(exp.dgp, rng)
    fit = pooled_ols(panel)
    out: dict = {"reject": {}}

    discovered = None
    bandwidth = exp.bandwidth
    if exp.needs_discovery:
        if exp.tuning == "cv":
            cv = cross_validate(panel, comparator=exp.cv_comparator, fit=fit)
            bandwidth, eta = cv.best_bandwidth, cv.best_threshold
        else:
            eta = exp.eta_tilde
        matrix = longrun_matrix(score_series(panel, fit), KernelSpec(bandwidth))
        discovered = connected_components(threshold_adjacency(matrix, ThresholdConfig(eta)))
        out["min_purity"], out["avg_purity"] = purity(discovered, truth)
        out["q_hat"] = discovered.q_hat
        out["perfect"] = clusters_equivalent(discovered, truth)
        out["bandwidth"], out["eta_tilde"] = bandwidth, eta

    restriction = LinearRestriction(np.ones(1), exp.beta_null)
    for method in exp.methods:
        family, _, which = method.partition("_")
        clusters = truth if which == "oracle" else discovered
        try:
            if family == "art":
                res = art_test(
                    panel, clusters, restriction, exp.alpha,
                    mode="auto", n_draws=exp.art_draws, deterministic=exp.deterministic,
                    random_state=rng,
                )
            elif family == "cce":
                res = cce_t_test(panel, clusters, restriction, exp.alpha, exp.cce_variant, fit=fit)
            else:
                L = exp.bcl_bandwidth or default_bcl_bandwidth(panel.n_periods)
                res = bcl_test(panel, restriction, exp.alpha, KernelSpec(L), exp.bcl_constant, fit=fit)
        except PanelClusterError:
            out["reject"][method] = None
            continue
        phi = res.phi
        if 0.0 < phi < 1.0:
            out["reject"][method] = int(rng.random() < phi)
        else:
            out["reject"][method] = int(phi >= 1.0)
    return out


def _mean_se(values: np.ndarray) -> tuple[float, float]:
    n = values.size
    sd = float(values.std(ddof=1)) if n > 1 else 0.0
    return float(values.mean()), sd / math.sqrt(n)


def run_experiment(experiment: ExperimentConfig, workers: int = 1) -> SimulationSummary:
    """Run every replication and aggregate in replication order."""
    log.info("experiment %s workers=%d", asdict(experiment), workers)
    tasks = [(experiment, r) for r in range(experiment.replications)]
    if workers <= 1:
        records = [_replicate(t) for t in tasks]
    else:
        chunk = max(1, len(tasks) // (4 * workers))
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_replicate, tasks, chunksize=chunk))

    reps = experiment.replications
    summary = SimulationSummary(experiment, reps)
    for m in experiment.methods:
        outcomes = [rec["reject"][m] for rec in records]
        hits = sum(o for o in outcomes if o is not None)
        rate = hits / reps
        summary.rejection_rate[m] = rate
        summary.mc_standard_error[m] = math.sqrt(rate * (1 - rate) / reps)
        summary.undefined[m] = sum(o is None for o in outcomes)
    if experiment.needs_discovery:
        for key in ("min_purity", "avg_purity", "q_hat"):
            mean, se = _mean_se(np.array([rec[key] for rec in records], dtype=float))
            setattr(summary, f"{key}_mean", mean)
            summary.recovery_se[key] = se
        summary.perfect_recovery_rate = sum(rec["perfect"] for rec in records) / reps
    return summary


def run_recovery(experiment: ExperimentConfig, workers: int = 1) -> SimulationSummary:
    """Cluster recovery only: purity and cluster counts."""
    return run_experiment(replace(experiment, methods=(), recovery=True), workers)


def run_size_power(experiment: ExperimentConfig, workers: int = 1) -> SimulationSummary:
    """Rejection rates of the requested tests of ``beta = beta_null``."""
    if not experiment.methods:
        raise InvalidConfig("no test methods requested")
    return run_experiment(experiment, workers)


def write_table(summaries, dest) -> None:
    """Delimited table, one row per (cell, method)."""
    if isinstance(dest, (str, os.PathLike)):
        with open(dest, "w", newline="", encoding="utf-8") as fh:
            write_table(summaries, fh)
        return
    writer = csv.writer(dest, lineterminator="\n")
    writer.writerow(["q", "n", "t", "reps", "alpha", "beta0", "method", "estimate", "mc_se"])
    for s in summaries:
        e = s.experiment
        for label, est, se in s.rows():
            writer.writerow(
                [e.dgp.q, e.dgp.n_units, e.dgp.n_periods, s.replications, repr(e.alpha),
                 repr(e.beta_null), label, "%.6f" % est, "%.6f" % se]
            )
