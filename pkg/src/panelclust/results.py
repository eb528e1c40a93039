from __future__ import annotations

from dataclasses import dataclass, fields
from fractions import Fraction

import numpy as np

from .exceptions import InvalidConfig

__all__ = ["LinearRestriction", "TestResult"]


@dataclass(frozen=True, eq=False)
class LinearRestriction:
    """Null hypothesis ``r' beta = value``."""

    r: np.ndarray
    value: float = 0.0

    def __post_init__(self) -> None:
        r = np.array(self.r, dtype=float).ravel()
        if r.size == 0 or not np.all(np.isfinite(r)) or not np.any(r != 0):
            raise InvalidConfig("restriction vector r must be finite and non-zero")
        if not np.isfinite(self.value):
            raise InvalidConfig("restriction value must be finite")
        r.setflags(write=False)
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "value", float(self.value))

    def check(self, n_covariates: int) -> None:
        if self.r.size != n_covariates:
            raise InvalidConfig(f"r has {self.r.size} entries but the model has {n_covariates} coefficients")


@dataclass(frozen=True)
class TestResult:
    """Outcome of a test of a linear restriction.

    ``phi`` is the rejection probability: 0 or 1 for deterministic tests,
    possibly fractional for the randomized randomization test.
    """

    __test__ = False  # keep pytest from collecting this class

    statistic: float
    phi: float
    p_value: float
    alpha: float
    method: str
    q_hat: int | None = None
    critical_value: float | None = None
    critical_index: int | None = None
    orbit_size: int | None = None
    phi_exact: Fraction | None = None

    @property
    def reject(self) -> bool:
        """True when the test rejects with certainty."""
        return self.phi >= 1.0

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            value = getattr(self, f.name)
            if value is None or f.name == "phi_exact":
                continue
            if isinstance(value, float):
                value = repr(value)
            lines.append(f"{f.name}={value}")
        return "\n".join(lines) + "\n"
