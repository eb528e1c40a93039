"""Cluster assignments: canonical labels, equivalence, purity, file I/O."""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .exceptions import LengthMismatch, SchemaMismatch

__all__ = [
    "ClusterAssignment",
    "clusters_equivalent",
    "purity",
    "refines",
    "write_assignment",
    "read_assignment",
]


def _canonical(labels: np.ndarray) -> np.ndarray:
    _, first, inverse = np.unique(labels, return_index=True, return_inverse=True)
    # rank of each distinct label by its first position
    order = np.argsort(np.argsort(first))
    return order[inverse.ravel()] + 1


@dataclass(frozen=True, eq=False)
class ClusterAssignment:
    """Surjective map unit -> cluster label in 1..q_hat.

    Any hashable labels are accepted; they are renumbered by order of first
    appearance, so two assignments describing the same partition with the
    same unit order have identical ``labels``.
    """

    labels: np.ndarray

    def __post_init__(self) -> None:
        raw = np.asarray(self.labels)
        if raw.ndim != 1 or raw.size == 0:
            raise LengthMismatch("labels must be a non-empty 1-D sequence")
        canon = _canonical(raw).astype(np.int64)
        canon.setflags(write=False)
        object.__setattr__(self, "labels", canon)

    @property
    def n_units(self) -> int:
        return self.labels.size

    @property
    def q_hat(self) -> int:
        return int(self.labels.max())

    @property
    def sizes(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.q_hat + 1)[1:]

    def members(self, label: int) -> np.ndarray:
        return np.flatnonzero(self.labels == label)

    def groups(self) -> list[np.ndarray]:
        return [self.members(j) for j in range(1, self.q_hat + 1)]

    @classmethod
    def single(cls, n_units: int) -> "ClusterAssignment":
        return cls(np.ones(n_units, dtype=int))

    @classmethod
    def singletons(cls, n_units: int) -> "ClusterAssignment":
        return cls(np.arange(n_units))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ClusterAssignment):
            return NotImplemented
        return self.labels.shape == other.labels.shape and bool(np.all(self.labels == other.labels))

    def __hash__(self) -> int:
        return hash(self.labels.tobytes())

    def __repr__(self) -> str:
        return f"ClusterAssignment(q_hat={self.q_hat}, N={self.n_units})"

    def summary(self) -> str:
        sizes = ",".join(str(int(s)) for s in self.sizes)
        return f"q_hat={self.q_hat}\nsizes={sizes}\n"


def clusters_equivalent(g: ClusterAssignment, g2: ClusterAssignment) -> bool:
    """True iff the two partitions coincide up to relabeling."""
    if g.n_units != g2.n_units:
        raise LengthMismatch(f"assignments cover {g.n_units} and {g2.n_units} units")
    return bool(np.array_equal(g.labels, g2.labels))


def refines(fine: ClusterAssignment, coarse: ClusterAssignment) -> bool:
    """True iff every cluster of ``fine`` lies inside one cluster of ``coarse``."""
    if fine.n_units != coarse.n_units:
        raise LengthMismatch(f"assignments cover {fine.n_units} and {coarse.n_units} units")
    pairs = np.unique(np.stack([fine.labels, coarse.labels]), axis=1)
    return pairs.shape[1] == fine.q_hat


def purity(estimated: ClusterAssignment, truth: ClusterAssignment) -> tuple[float, float]:
    """Minimum and unweighted mean purity of the estimated clusters.

    The purity of an estimated cluster is the largest share of its members
    that belong to a single true cluster.
    """
    if estimated.n_units != truth.n_units:
        raise LengthMismatch(f"assignments cover {estimated.n_units} and {truth.n_units} units")
    q_est, q_true = estimated.q_hat, truth.q_hat
    table = np.zeros((q_est, q_true), dtype=np.int64)
    np.add.at(table, (estimated.labels - 1, truth.labels - 1), 1)
    scores = table.max(axis=1) / table.sum(axis=1)
    return float(scores.min()), float(scores.mean())


def write_assignment(assignment: ClusterAssignment, unit_ids: Sequence, dest, delimiter: str = ",") -> None:
    """Two-column file ``unit_id, cluster``."""
    if len(unit_ids) != assignment.n_units:
        raise LengthMismatch(f"{len(unit_ids)} unit ids for {assignment.n_units} units")
    if isinstance(dest, (str, os.PathLike)):
        with open(dest, "w", newline="", encoding="utf-8") as fh:
            write_assignment(assignment, unit_ids, fh, delimiter)
        return
    writer = csv.writer(dest, delimiter=delimiter, lineterminator="\n")
    writer.writerow(["unit_id", "cluster"])
    for uid, lab in zip(unit_ids, assignment.labels):
        writer.writerow([uid, int(lab)])


def read_assignment(source, unit_ids: Iterable, delimiter: str = ",") -> ClusterAssignment:
    """Read a file written by :func:`write_assignment`, ordered as ``unit_ids``."""
    with open(source, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh, delimiter=delimiter))
    if not rows:
        raise SchemaMismatch("cluster file is empty")
    mapping = {r[0].strip(): r[1].strip() for r in rows[1:] if len(r) >= 2}
    ids = [str(u) for u in unit_ids]
    absent = [u for u in ids if u not in mapping]
    if absent:
        raise SchemaMismatch(f"cluster file has no label for units {absent[:5]}")
    return ClusterAssignment(np.array([mapping[u] for u in ids]))
