"""
Ishikawa step sizes alpha_n = (n + shift)^-a and beta_n = (n + shift)^-b.

The shift defaults to 2: with shift 1 the first pair is alpha_0 = beta_0 = 1,
which breaks beta_n < 1.
"""
from dataclasses import dataclass

import numpy as np

from app.config import INDEX_SHIFT, SCHEDULE_HORIZON, SCHEDULES
from app.errors import ConstructionError


@dataclass(frozen=True)
class Schedule:
    a: float
    b: float
    index_shift: int = INDEX_SHIFT

    def __post_init__(self):
        if not 0.0 < self.b < self.a < 1.0:
            raise ConstructionError(f"schedule needs 0 < b < a < 1, got a={self.a}, b={self.b}")
        if self.a + self.b >= 1.0:
            raise ConstructionError(f"schedule needs a + b < 1, got a + b = {self.a + self.b}")
        if self.index_shift < 2:
            raise ConstructionError(f"index shift must be >= 2, got {self.index_shift}")

    @classmethod
    def for_solver(cls, kind):
        """Default (a, b) for 'gd', 'hqs' or 'fbs' (solver names like 'pnpi-hqs' work too)."""
        key = kind.split("-")[-1]
        if key not in SCHEDULES:
            raise ConstructionError(f"no default schedule for solver '{kind}'")
        a, b = SCHEDULES[key]
        return cls(a, b)

    def alpha(self, n):
        return float((n + self.index_shift) ** (-self.a))

    def beta(self, n):
        return float((n + self.index_shift) ** (-self.b))

    def validate(self, horizon=SCHEDULE_HORIZON):
        """Check 0 <= alpha_n <= beta_n < 1 numerically on [0, horizon]."""
        n = np.arange(horizon + 1, dtype=np.float64) + self.index_shift
        alpha = n ** (-self.a)
        beta = n ** (-self.b)
        ok = bool(np.all(alpha >= 0) and np.all(alpha <= beta) and np.all(beta < 1.0))
        return {
            "ordered": ok,
            "beta_at_horizon": float(beta[-1]),
            "sum_diverges": self.a + self.b < 1.0,
        }

    def to_dict(self):
        return {"a": self.a, "b": self.b, "index_shift": self.index_shift}
