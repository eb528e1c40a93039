"""Balanced panel container and delimited-text ingestion."""

from __future__ import annotations

import csv
import io
import math
import os
from dataclasses import dataclass, field
from typing import IO, Any, Iterable, Sequence

import numpy as np

from .exceptions import (
    DuplicateObservation,
    MissingCell,
    NonFiniteValue,
    SchemaMismatch,
    ShapeMismatch,
)

__all__ = ["PanelData", "DataSchema", "from_arrays", "load_panel", "dump_panel"]


@dataclass(frozen=True, eq=False)
class PanelData:
    """Balanced N x T panel with p covariates.

    Parameters
    ----------
    y : ndarray, shape (N, T)
        Outcomes indexed by (unit, time).
    x : ndarray, shape (N, T, p)
        Covariates indexed by (unit, time, covariate).
    unit_ids : sequence
        External unit labels, unique, length N.
    covariate_names : sequence of str, optional
    time_labels : sequence, optional
        Original time labels in rank order, length T.

    Arrays are copied and marked read-only, so a panel can be shared freely.
    """

    y: np.ndarray
    x: np.ndarray
    unit_ids: tuple = ()
    covariate_names: tuple = ()
    time_labels: tuple = field(default=())

    def __post_init__(self) -> None:
        y = np.array(self.y, dtype=float)
        x = np.array(self.x, dtype=float)
        if y.ndim != 2:
            raise ShapeMismatch(f"y must be 2-D (units, periods), got shape {y.shape}")
        if x.ndim != 3:
            raise ShapeMismatch(f"x must be 3-D (units, periods, covariates), got shape {x.shape}")
        if x.shape[:2] != y.shape:
            raise ShapeMismatch(f"x has shape {x.shape} but y has shape {y.shape}")
        n, t = y.shape
        p = x.shape[2]
        if n < 1 or t < 2 or p < 1:
            raise ShapeMismatch(f"need N >= 1, T >= 2, p >= 1; got N={n}, T={t}, p={p}")
        if not np.all(np.isfinite(y)):
            i, s = np.argwhere(~np.isfinite(y))[0]
            raise NonFiniteValue(f"non-finite outcome at unit index {i}, period {s}")
        if not np.all(np.isfinite(x)):
            i, s, a = np.argwhere(~np.isfinite(x))[0]
            raise NonFiniteValue(f"non-finite covariate {a} at unit index {i}, period {s}")

        ids = tuple(self.unit_ids) if len(self.unit_ids) else tuple(str(i) for i in range(n))
        if len(ids) != n:
            raise ShapeMismatch(f"{len(ids)} unit ids for {n} units")
        if len(set(ids)) != n:
            raise DuplicateObservation("unit ids are not unique")
        names = tuple(self.covariate_names) if len(self.covariate_names) else tuple(
            f"x{a + 1}" for a in range(p)
        )
        if len(names) != p:
            raise ShapeMismatch(f"{len(names)} covariate names for {p} covariates")
        times = tuple(self.time_labels) if len(self.time_labels) else tuple(range(t))
        if len(times) != t:
            raise ShapeMismatch(f"{len(times)} time labels for {t} periods")

        y.setflags(write=False)
        x.setflags(write=False)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "unit_ids", ids)
        object.__setattr__(self, "covariate_names", names)
        object.__setattr__(self, "time_labels", times)

    @property
    def n_units(self) -> int:
        return self.y.shape[0]

    @property
    def n_periods(self) -> int:
        return self.y.shape[1]

    @property
    def n_covariates(self) -> int:
        return self.x.shape[2]

    def subset_units(self, index: Sequence[int] | np.ndarray) -> "PanelData":
        index = np.asarray(index, dtype=int)
        return PanelData(
            self.y[index],
            self.x[index],
            tuple(self.unit_ids[i] for i in index),
            self.covariate_names,
            self.time_labels,
        )

    def slice_periods(self, start: int, stop: int) -> "PanelData":
        return PanelData(
            self.y[:, start:stop],
            self.x[:, start:stop],
            self.unit_ids,
            self.covariate_names,
            self.time_labels[start:stop],
        )

    def __repr__(self) -> str:
        return f"PanelData(N={self.n_units}, T={self.n_periods}, p={self.n_covariates})"


@dataclass(frozen=True)
class DataSchema:
    """Column layout of a long-format panel file."""

    unit_column: str = "unit"
    time_column: str = "time"
    outcome_column: str = "y"
    covariate_columns: tuple[str, ...] = ()
    intercept: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "covariate_columns", tuple(self.covariate_columns))
        if not self.covariate_columns and not self.intercept:
            raise SchemaMismatch("schema needs at least one covariate column or intercept=True")

    @classmethod
    def parse(cls, spec: str, intercept: bool = False) -> "DataSchema":
        """Build a schema from ``"unit,time,y,x1,x2"``."""
        parts = [p.strip() for p in spec.split(",") if p.strip()]
        if len(parts) < 3:
            raise SchemaMismatch("schema must name unit, time and outcome columns")
        return cls(parts[0], parts[1], parts[2], tuple(parts[3:]), intercept)


def from_arrays(
    y: Any,
    x: Any,
    unit_ids: Iterable | None = None,
    covariate_names: Iterable[str] | None = None,
) -> PanelData:
    """Validate raw arrays into a :class:`PanelData`.

    ``y`` must be (N, T) and ``x`` must be (N, T, p).
    """
    y = np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float)
    return PanelData(
        y,
        x,
        tuple(unit_ids) if unit_ids is not None else (),
        tuple(covariate_names) if covariate_names is not None else (),
    )


def _sort_key(labels: Iterable[str]):
    labels = list(labels)
    try:
        numeric = {lab: float(lab) for lab in labels}
    except ValueError:
        return lambda lab: lab
    if any(math.isnan(v) for v in numeric.values()):
        return lambda lab: lab
    return lambda lab: (numeric[lab], lab)


def _open_text(source) -> tuple[IO[str], bool]:
    if isinstance(source, (str, os.PathLike)):
        return open(source, newline="", encoding="utf-8"), True
    if isinstance(source, (bytes, bytearray)):
        return io.StringIO(bytes(source).decode("utf-8")), False
    if isinstance(source, io.TextIOBase):
        return source, False
    # binary stream
    return io.TextIOWrapper(source, encoding="utf-8", newline=""), False


def _parse_float(text: str, unit: str, time: str, column: str) -> float:
    text = text.strip()
    if text == "":
        raise MissingCell(f"empty cell in column {column!r} for unit {unit!r}, time {time!r}")
    try:
        value = float(text)
    except ValueError:
        raise SchemaMismatch(
            f"column {column!r} holds non-numeric value {text!r} (unit {unit!r}, time {time!r})"
        ) from None
    if not math.isfinite(value):
        raise NonFiniteValue(f"non-finite value in column {column!r} for unit {unit!r}, time {time!r}")
    return value


def load_panel(source, schema: DataSchema, delimiter: str = ",") -> PanelData:
    """Read a long-format delimited file into a :class:`PanelData`.

    Rows may appear in any order; the result is sorted by (unit, time) and the
    time labels are replaced by their ranks 0..T-1 (the labels are kept on
    ``time_labels``). Labels that all parse as numbers sort numerically,
    otherwise lexicographically.

    Raises
    ------
    SchemaMismatch
        Header lacks a schema column, or a value does not parse.
    DuplicateObservation
        The same (unit, time) pair appears twice.
    MissingCell
        A cell is empty or some unit misses some period.
    NonFiniteValue
        A value parses to inf or nan.
    """
    stream, close = _open_text(source)
    try:
        reader = csv.reader(stream, delimiter=delimiter)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise SchemaMismatch("input is empty") from None
        needed = [schema.unit_column, schema.time_column, schema.outcome_column, *schema.covariate_columns]
        missing = [c for c in needed if c not in header]
        if missing:
            raise SchemaMismatch(f"header {header} lacks columns {missing}")
        idx = [header.index(c) for c in needed]

        cells: dict[tuple[str, str], list[float]] = {}
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) < len(header):
                raise MissingCell(f"line {lineno}: expected {len(header)} fields, found {len(row)}")
            unit, time = row[idx[0]].strip(), row[idx[1]].strip()
            if (unit, time) in cells:
                raise DuplicateObservation(f"unit {unit!r} observed twice at time {time!r}")
            cells[(unit, time)] = [
                _parse_float(row[k], unit, time, c) for k, c in zip(idx[2:], needed[2:])
            ]
    finally:
        if close:
            stream.close()

    if not cells:
        raise SchemaMismatch("input has a header but no observations")
    units = sorted({u for u, _ in cells}, key=_sort_key(u for u, _ in cells))
    times = sorted({t for _, t in cells}, key=_sort_key(t for _, t in cells))
    n, t_count, k = len(units), len(times), len(schema.covariate_columns)
    p = k + int(schema.intercept)

    y = np.empty((n, t_count))
    x = np.empty((n, t_count, p))
    if schema.intercept:
        x[:, :, 0] = 1.0
    for i, unit in enumerate(units):
        for s, time in enumerate(times):
            values = cells.get((unit, time))
            if values is None:
                raise MissingCell(f"unit {unit!r} has no observation at time {time!r} (unbalanced panel)")
            y[i, s] = values[0]
            x[i, s, int(schema.intercept):] = values[1:]

    names = (("const",) if schema.intercept else ()) + schema.covariate_columns
    return PanelData(y, x, tuple(units), names, tuple(times))


def dump_panel(panel: PanelData, dest, delimiter: str = ",") -> None:
    """Write ``panel`` in the long format read by :func:`load_panel`.

    Values are written with 17 significant digits so that reading the file
    back reproduces the arrays exactly.
    """
    if isinstance(dest, (str, os.PathLike)):
        with open(dest, "w", newline="", encoding="utf-8") as fh:
            dump_panel(panel, fh, delimiter)
        return
    writer = csv.writer(dest, delimiter=delimiter, lineterminator="\n")
    writer.writerow(["unit", "time", "y", *panel.covariate_names])
    for i, unit in enumerate(panel.unit_ids):
        for s in range(panel.n_periods):
            writer.writerow(
                [unit, s, "%.17g" % panel.y[i, s], *("%.17g" % v for v in panel.x[i, s])]
            )
