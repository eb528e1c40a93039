"""Block cross-validation of the bandwidth and the link threshold."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .exceptions import BandwidthTooLargeForBlock, InvalidConfig, TooFewPeriods
from .longrun import KernelSpec, LongRunMatrix, longrun_matrix
from .panel import PanelData
from .regression import OlsFit, ScoreSeries, pooled_ols, score_series

__all__ = [
    "TuningGrid",
    "CvResult",
    "default_grid",
    "partition_blocks",
    "block_estimates",
    "threshold_matrix",
    "cv_objective",
    "cross_validate",
]

COMPARATORS = ("signed", "absolute")


def partition_blocks(n_periods: int) -> list[range]:
    """Split 0..T-1 into ``round(ln T)`` contiguous blocks whose sizes differ by at most one."""
    n_blocks = int(round(math.log(n_periods))) if n_periods > 0 else 0
    if n_blocks < 2:
        raise TooFewPeriods(f"T={n_periods} gives {n_blocks} block(s); cross-validation needs 2")
    base, extra = divmod(n_periods, n_blocks)
    blocks, start = [], 0
    for b in range(n_blocks):
        stop = start + base + (1 if b < extra else 0)
        blocks.append(range(start, stop))
        start = stop
    return blocks


@dataclass(frozen=True)
class TuningGrid:
    bandwidths: tuple[int, ...]
    thresholds: tuple[float, ...]

    def __post_init__(self) -> None:
        bw = tuple(int(b) for b in self.bandwidths)
        th = tuple(float(e) for e in self.thresholds)
        if not bw or not th:
            raise InvalidConfig("tuning grid must be non-empty")
        if list(bw) != sorted(set(bw)) or bw[0] < 1:
            raise InvalidConfig(f"bandwidths must be ascending distinct integers >= 1, got {bw}")
        if list(th) != sorted(set(th)) or th[0] < 0 or th[-1] > 1:
            raise InvalidConfig(f"thresholds must be ascending distinct values in [0, 1], got {th}")
        object.__setattr__(self, "bandwidths", bw)
        object.__setattr__(self, "thresholds", th)

    def check(self, n_periods: int) -> None:
        shortest = min(len(b) for b in partition_blocks(n_periods))
        if self.bandwidths[-1] >= shortest:
            raise BandwidthTooLargeForBlock(
                f"bandwidth {self.bandwidths[-1]} needs blocks longer than {shortest} periods"
            )


def default_grid(n_periods: int, max_bandwidths: int = 14, n_thresholds: int = 21) -> TuningGrid:
    """Integers 1..floor(sqrt(T)) (log-spaced down to ``max_bandwidths`` values) x
    ``n_thresholds`` evenly spaced thresholds on [0, 1]."""
    shortest = min(len(b) for b in partition_blocks(n_periods))
    top = max(1, min(math.isqrt(n_periods), shortest - 1))
    if top <= max_bandwidths:
        bw = list(range(1, top + 1))
    else:
        bw = sorted({int(round(v)) for v in np.geomspace(1, top, max_bandwidths)})
    th = np.linspace(0.0, 1.0, n_thresholds)
    return TuningGrid(tuple(bw), tuple(float(v) for v in th))


@dataclass(frozen=True, eq=False)
class CvResult:
    best_bandwidth: int
    best_threshold: float
    grid: TuningGrid
    objective_surface: np.ndarray = field(repr=False)
    """Objective values, shape (len(bandwidths), len(thresholds))."""

    def rows(self):
        for a, L in enumerate(self.grid.bandwidths):
            for b, eta in enumerate(self.grid.thresholds):
                yield L, eta, float(self.objective_surface[a, b])


def block_estimates(
    panel: PanelData, fit: OlsFit, L: int, blocks: Sequence[range] | None = None
) -> list[LongRunMatrix]:
    """Long-run matrices computed on each time block of the full-sample scores."""
    scores = score_series(panel, fit)
    if blocks is None:
        blocks = partition_blocks(panel.n_periods)
    out = []
    for block in blocks:
        if L >= len(block):
            raise BandwidthTooLargeForBlock(f"bandwidth {L} needs blocks longer than {len(block)} periods")
        w = scores.w[:, block.start : block.stop]
        out.append(longrun_matrix(ScoreSeries(w), KernelSpec(L)))
    return out


def _values(m: LongRunMatrix, comparator: str) -> np.ndarray:
    if comparator == "signed":
        return m.signed_corr
    if comparator == "absolute":
        return m.corr
    raise InvalidConfig(f"comparator must be one of {COMPARATORS}, got {comparator!r}")


def threshold_matrix(values: np.ndarray, eta_tilde: float) -> np.ndarray:
    """Zero off-diagonal entries whose magnitude is below ``eta_tilde``."""
    out = np.where(np.abs(values) >= eta_tilde, values, 0.0)
    np.fill_diagonal(out, np.diag(values))
    return out


def cv_objective(
    block_mats: Sequence[LongRunMatrix], L: int | None, eta_tilde: float, comparator: str = "signed"
) -> float:
    """Sum over ordered block pairs p != p' of ||thresholded_p - unthresholded_p'||_F^2.

    ``L`` only documents the bandwidth the blocks were built with.
    ``comparator="absolute"`` uses the correlation matrices as thresholded
    for discovery; ``"signed"`` uses the signed long-run correlations.
    """
    if len(block_mats) < 2:
        raise InvalidConfig("cross-validation needs at least two blocks")
    raw = np.stack([_values(m, comparator) for m in block_mats])
    return float(_objective_curve(raw, [eta_tilde])[0])


def _objective_curve(raw: np.ndarray, thresholds: Sequence[float]) -> np.ndarray:
    """Objective at each threshold for stacked block matrices ``raw`` (P, N, N).

    Expanding ``sum_p sum_{p'!=p} ||A_p - B_p'||^2`` makes it a constant plus
    a sum of per-entry terms ``(P-1) v^2 - 2 v (total - v)`` over the entries
    that survive thresholding, so binning the entries once serves the whole
    grid.
    """
    P, n, _ = raw.shape
    others = raw.sum(axis=0) - raw
    contrib = (P - 1) * raw * raw - 2.0 * raw * others
    diag = np.eye(n, dtype=bool)
    base = (P - 1) * float((raw * raw).sum()) + float(contrib[:, diag].sum())
    thresholds = np.asarray(thresholds, dtype=float)
    order = np.argsort(thresholds, kind="stable")
    # entry e survives threshold k iff bin(e) > k in sorted threshold order
    bins = np.searchsorted(thresholds[order], np.abs(raw[:, ~diag]), side="right")
    weights = np.bincount(bins.ravel(), weights=contrib[:, ~diag].ravel(), minlength=thresholds.size + 1)
    above = np.cumsum(weights[::-1])[::-1]
    out = np.empty(thresholds.size)
    out[order] = base + above[1:]
    return np.maximum(out, 0.0)


def cross_validate(
    panel: PanelData,
    grid: TuningGrid | None = None,
    comparator: str = "signed",
    fit: OlsFit | None = None,
) -> CvResult:
    """Grid search for the (bandwidth, threshold) pair minimizing the CV objective.

    Ties go to the smallest bandwidth, then the smallest threshold.
    """
    if grid is None:
        grid = default_grid(panel.n_periods)
    grid.check(panel.n_periods)
    if fit is None:
        fit = pooled_ols(panel)
    blocks = partition_blocks(panel.n_periods)
    surface = np.empty((len(grid.bandwidths), len(grid.thresholds)))
    for a, L in enumerate(grid.bandwidths):
        raw = np.stack([_values(m, comparator) for m in block_estimates(panel, fit, L, blocks)])
        surface[a] = _objective_curve(raw, grid.thresholds)
    best = np.unravel_index(np.argmin(surface), surface.shape)
    surface.setflags(write=False)
    return CvResult(grid.bandwidths[best[0]], grid.thresholds[best[1]], grid, surface)
