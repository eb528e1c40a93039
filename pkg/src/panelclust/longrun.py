"""Kernel-weighted pairwise long-run covariances of unit score series."""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .exceptions import BandwidthTooLarge, DegenerateDiagonal, InvalidConfig, LengthMismatch
from .regression import ScoreSeries

__all__ = [
    "KernelSpec",
    "LongRunMatrix",
    "bartlett_weight",
    "pair_longrun",
    "longrun_matrix",
    "cross_moments",
    "write_matrix",
]


def bartlett_weight(h: int, L: int) -> float:
    """Triangular lag weight ``(L - h) / L`` for ``h <= L``, else 0."""
    if h < 0 or L < 1:
        raise ValueError(f"need h >= 0 and L >= 1, got h={h}, L={L}")
    return (L - h) / L if h <= L else 0.0


@dataclass(frozen=True)
class KernelSpec:
    bandwidth: int
    kind: str = "bartlett"

    def __post_init__(self) -> None:
        if self.kind != "bartlett":
            raise InvalidConfig(f"unsupported kernel {self.kind!r}")
        if int(self.bandwidth) != self.bandwidth or self.bandwidth < 0:
            raise InvalidConfig(f"bandwidth must be a non-negative integer, got {self.bandwidth}")
        object.__setattr__(self, "bandwidth", int(self.bandwidth))

    def weight(self, h: int) -> float:
        return bartlett_weight(h, self.bandwidth) if self.bandwidth else 0.0

    def check(self, n_periods: int) -> None:
        if self.bandwidth >= n_periods:
            raise BandwidthTooLarge(f"bandwidth {self.bandwidth} must be below T={n_periods}")


@dataclass(frozen=True, eq=False)
class LongRunMatrix:
    """Aggregated long-run magnitudes and their correlation normalization.

    Attributes
    ----------
    sigma : ndarray, shape (N, N)
        ``sum_ab |sigma_ij^{ab}|``.
    corr : ndarray, shape (N, N)
        ``sigma_ij / sqrt(sigma_ii * sigma_jj)``.
    bandwidth : int
    signed : ndarray, shape (N, N)
        ``sum_ab sigma_ij^{ab}`` without absolute values.
    signed_corr : ndarray, shape (N, N)
        ``signed / sqrt(sigma_ii * sigma_jj)``; equals ``corr`` up to sign
        when p = 1.
    """

    sigma: np.ndarray
    corr: np.ndarray
    bandwidth: int
    signed: np.ndarray
    signed_corr: np.ndarray

    @property
    def n_units(self) -> int:
        return self.sigma.shape[0]


def _lag_product(wi: np.ndarray, wj: np.ndarray, h: int) -> np.ndarray:
    """``sum_{t>h} wi[t] wj[t-h]'`` for (T, p) arrays."""
    return wi[h:].T @ wj[: wj.shape[0] - h]


def pair_longrun(scores: ScoreSeries, i: int, j: int, kernel: KernelSpec) -> tuple[np.ndarray, float]:
    """Long-run cross-covariance block of units ``i`` and ``j``.

    Returns the p x p matrix with entries

        (1/T) sum_t W_it^a W_jt^b
        + sum_{h=1}^{L} w(h, L)/(T-h) [sum_{t>h} W_it^a W_j,t-h^b + W_i,t-h^a W_jt^b]

    and the sum of its absolute entries.
    """
    w = scores.w
    T = w.shape[1]
    kernel.check(T)
    wi, wj = w[i], w[j]
    block = wi.T @ wj / T
    for h in range(1, kernel.bandwidth + 1):
        omega = kernel.weight(h)
        if omega == 0.0:
            continue
        block = block + omega / (T - h) * (_lag_product(wi, wj, h) + _lag_product(wj, wi, h).T)
    return block, float(np.abs(block).sum())


def cross_moments(w: np.ndarray, kernel: KernelSpec, lag_divisor: str = "T-h") -> np.ndarray:
    """All pairwise kernel-weighted cross moments at once.

    ``w`` has shape (N, T, p). The result has shape (N, p, N, p) and holds
    the block of :func:`pair_longrun` for every (i, j). ``lag_divisor``
    selects ``T - h`` or ``T`` as the lag normalization.
    """
    n, T, p = w.shape
    kernel.check(T)
    z = np.ascontiguousarray(w.transpose(0, 2, 1).reshape(n * p, T))
    out = z @ z.T / T
    for h in range(1, kernel.bandwidth + 1):
        omega = kernel.weight(h)
        if omega == 0.0:
            continue
        c = z[:, h:] @ z[:, : T - h].T
        out += omega / ((T - h) if lag_divisor == "T-h" else T) * (c + c.T)
    return out.reshape(n, p, n, p)


def _symmetrize(m: np.ndarray) -> np.ndarray:
    upper = np.triu(m)
    return upper + np.triu(m, 1).T


def longrun_matrix(scores: ScoreSeries, kernel: KernelSpec) -> LongRunMatrix:
    """The N x N matrix of long-run magnitudes and its correlation form.

    Raises
    ------
    BandwidthTooLarge
        ``kernel.bandwidth >= T``.
    DegenerateDiagonal
        Some unit has a zero long-run magnitude.
    """
    blocks = cross_moments(scores.w, kernel)
    sigma = _symmetrize(np.abs(blocks).sum(axis=(1, 3)))
    signed = _symmetrize(blocks.sum(axis=(1, 3)))
    diag = np.diag(sigma)
    bad = np.flatnonzero(~(diag > 0))
    if bad.size:
        raise DegenerateDiagonal(int(bad[0]))
    scale = np.sqrt(diag)
    denom = np.outer(scale, scale)
    corr = sigma / denom
    np.fill_diagonal(corr, 1.0)
    signed_corr = signed / denom
    np.fill_diagonal(signed_corr, np.diag(signed) / diag)
    for arr in (sigma, corr, signed, signed_corr):
        arr.setflags(write=False)
    return LongRunMatrix(sigma, corr, kernel.bandwidth, signed, signed_corr)


def write_matrix(matrix: np.ndarray, dest, delimiter: str = ",") -> None:
    """Row-major text dump with 17 significant digits."""
    if isinstance(dest, (str, os.PathLike)):
        with open(dest, "w", encoding="utf-8") as fh:
            write_matrix(matrix, fh, delimiter)
        return
    matrix = np.asarray(matrix)
    if matrix.ndim != 2:
        raise LengthMismatch("matrix must be 2-D")
    for row in matrix:
        dest.write(delimiter.join("%.17g" % v for v in row) + "\n")
