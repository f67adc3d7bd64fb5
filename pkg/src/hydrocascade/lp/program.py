"""Linear program container and solution record."""
from __future__ import annotations

import copy
import enum
import math
from dataclasses import dataclass, field

import numpy as np

SENSES = ("<=", "=", ">=")


class Status(str, enum.Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"


@dataclass(frozen=True)
class Tolerances:
    pivot: float = 1e-9
    feasibility: float = 1e-7
    optimality: float = 1e-9
    integrality: float = 1e-6
    bland_after: int = 1000


DEFAULT_TOLERANCES = Tolerances()


@dataclass
class Row:
    coeffs: dict
    sense: str
    rhs: float
    name: str = ""


@dataclass
class LinearProgram:
    """``maximize c @ z`` subject to sparse rows and per-variable bounds.

    Variables are added with :meth:`add_var`; rows reference them by index.
    Lower bounds must be finite unless the upper bound is.
    """

    objective: list = field(default_factory=list)
    lo: list = field(default_factory=list)
    hi: list = field(default_factory=list)
    rows: list = field(default_factory=list)
    names: list = field(default_factory=list)

    @property
    def n_vars(self) -> int:
        return len(self.objective)

    def add_var(self, lo: float = 0.0, hi: float = math.inf, obj: float = 0.0, name: str = "") -> int:
        if lo > hi:
            raise ValueError(f"variable {name or len(self.objective)}: lo {lo} > hi {hi}")
        if math.isinf(lo) and math.isinf(hi):
            raise ValueError("free variables are not supported")
        self.objective.append(float(obj))
        self.lo.append(float(lo))
        self.hi.append(float(hi))
        self.names.append(name)
        return len(self.objective) - 1

    def add_row(self, coeffs, sense: str, rhs: float, name: str = "") -> int:
        if sense not in SENSES:
            raise ValueError(f"unknown relation {sense!r}")
        coeffs = dict(coeffs)
        for j in coeffs:
            if not 0 <= j < self.n_vars:
                raise IndexError(f"row {name!r} references variable {j} of {self.n_vars}")
        self.rows.append(Row(coeffs, sense, float(rhs), name))
        return len(self.rows) - 1

    def copy(self) -> "LinearProgram":
        return copy.deepcopy(self)

    def dense(self):
        """``(A, senses, b)`` with A as a dense ``(m, n)`` array."""
        A = np.zeros((len(self.rows), self.n_vars))
        for i, row in enumerate(self.rows):
            for j, a in row.coeffs.items():
                A[i, j] += a
        return A, [r.sense for r in self.rows], np.array([r.rhs for r in self.rows])

    def activities(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        return np.array([sum(a * z[j] for j, a in row.coeffs.items()) for row in self.rows])

    def max_violation(self, z, normalized: bool = True) -> float:
        """Largest bound or row violation at ``z``; rows scaled by their largest coefficient."""
        z = np.asarray(z, dtype=float)
        worst = 0.0
        lo, hi = np.array(self.lo), np.array(self.hi)
        if z.size:
            worst = max(worst, float(np.max(lo - z, initial=0.0)), float(np.max(z - hi, initial=0.0)))
        for row, act in zip(self.rows, self.activities(z)):
            scale = max((abs(a) for a in row.coeffs.values()), default=1.0) if normalized else 1.0
            scale = scale or 1.0
            gap = (act - row.rhs) / scale
            if row.sense == "<=":
                worst = max(worst, gap)
            elif row.sense == ">=":
                worst = max(worst, -gap)
            else:
                worst = max(worst, abs(gap))
        return worst


@dataclass
class LpSolution:
    status: Status
    values: np.ndarray
    objective_value: float
    iterations: int = 0
    nodes: int = 0

    @property
    def optimal(self) -> bool:
        return self.status is Status.OPTIMAL
