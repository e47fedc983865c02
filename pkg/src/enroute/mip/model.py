"""A small, solver-agnostic container for mixed-integer linear models.

Variables, linear rows and SOS2 groups are stored declaratively so that the
same model can be handed to an in-process solver, written to MPS, or checked
against a candidate assignment without any solver at all.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Any, Iterable, Literal, Mapping

import numpy as np
from scipy import sparse

Sense = Literal["<=", ">=", "=="]
VarKind = Literal["C", "B"]


@dataclass(frozen=True)
class Variable:
    index: int
    name: str
    kind: VarKind
    lb: float
    ub: float
    symbol: str
    key: tuple[int, ...]


@dataclass(frozen=True)
class Constraint:
    name: str
    family: str
    coeffs: tuple[tuple[int, float], ...]
    sense: Sense
    rhs: float

    def activity(self, values: np.ndarray | list[float]) -> float:
        return math.fsum(c * values[j] for j, c in self.coeffs)

    def violation(self, values: np.ndarray | list[float]) -> float:
        lhs = self.activity(values)
        if self.sense == "<=":
            return max(0.0, lhs - self.rhs)
        if self.sense == ">=":
            return max(0.0, self.rhs - lhs)
        return abs(lhs - self.rhs)


@dataclass(frozen=True)
class Sos2Group:
    """Ordered weights of which at most two adjacent ones may be non-zero.

    ``relaxable`` marks groups whose interpolated value enters the objective
    only through a convex function being minimised, so dropping the adjacency
    requirement cannot change any optimum.
    """

    name: str
    members: tuple[int, ...]
    weights: tuple[float, ...]
    relaxable: bool = False


@dataclass
class MipModel:
    name: str = "enroute"
    variables: list[Variable] = field(default_factory=list)
    constraints: list[Constraint] = field(default_factory=list)
    sos2: list[Sos2Group] = field(default_factory=list)
    objective: dict[int, float] = field(default_factory=dict)
    objective_offset: float = 0.0
    big_m_time: float = 0.0
    meta: dict[str, Any] = field(default_factory=dict)
    _lookup: dict[tuple[str, tuple[int, ...]], int] = field(default_factory=dict, repr=False)

    # -- construction -----------------------------------------------------

    def add_var(self, symbol: str, key: tuple[int, ...], kind: VarKind = "C",
                lb: float = 0.0, ub: float = math.inf, name: str | None = None) -> int:
        if kind == "B":
            lb, ub = max(lb, 0.0), min(ub, 1.0)
        if not lb <= ub:
            raise ValueError(f"empty domain for {symbol}{key}: [{lb}, {ub}]")
        j = len(self.variables)
        if name is None:
            name = symbol + "".join(f"_{k}" for k in key)
        if (symbol, key) in self._lookup:
            raise ValueError(f"duplicate variable {symbol}{key}")
        self.variables.append(Variable(j, name, kind, float(lb), float(ub), symbol, key))
        self._lookup[(symbol, key)] = j
        return j

    def var(self, symbol: str, *key: int) -> int:
        return self._lookup[(symbol, tuple(key))]

    def has_var(self, symbol: str, *key: int) -> bool:
        return (symbol, tuple(key)) in self._lookup

    def add_constraint(self, family: str, coeffs: Mapping[int, float] | Iterable[tuple[int, float]],
                       sense: Sense, rhs: float, name: str | None = None) -> None:
        items = coeffs.items() if isinstance(coeffs, Mapping) else coeffs
        merged: dict[int, float] = {}
        for j, c in items:
            merged[j] = merged.get(j, 0.0) + float(c)
        terms = tuple((j, c) for j, c in merged.items() if c != 0.0)
        if name is None:
            name = f"{family}_{len(self.constraints)}"
        self.constraints.append(Constraint(name, family, terms, sense, float(rhs)))

    def add_sos2(self, name: str, members: Iterable[int], weights: Iterable[float],
                 relaxable: bool = False) -> None:
        self.sos2.append(Sos2Group(name, tuple(members), tuple(weights), relaxable))

    def set_bounds(self, j: int, lb: float, ub: float) -> None:
        self.variables[j] = replace(self.variables[j], lb=float(lb), ub=float(ub))

    def copy(self) -> MipModel:
        return MipModel(
            name=self.name,
            variables=list(self.variables),
            constraints=list(self.constraints),
            sos2=list(self.sos2),
            objective=dict(self.objective),
            objective_offset=self.objective_offset,
            big_m_time=self.big_m_time,
            meta=dict(self.meta),
            _lookup=dict(self._lookup),
        )

    # -- inspection -------------------------------------------------------

    @property
    def num_vars(self) -> int:
        return len(self.variables)

    def census(self) -> dict[str, Any]:
        by_symbol: dict[str, int] = {}
        for v in self.variables:
            by_symbol[v.symbol] = by_symbol.get(v.symbol, 0) + 1
        by_family: dict[str, int] = {}
        for c in self.constraints:
            by_family[c.family] = by_family.get(c.family, 0) + 1
        return {
            "variables": len(self.variables),
            "binary": sum(v.kind == "B" for v in self.variables),
            "continuous": sum(v.kind == "C" for v in self.variables),
            "constraints": len(self.constraints),
            "sos2_groups": len(self.sos2),
            "by_symbol": dict(sorted(by_symbol.items())),
            "by_family": dict(sorted(by_family.items())),
        }

    def objective_value(self, values: np.ndarray | list[float]) -> float:
        return self.objective_offset + math.fsum(c * values[j] for j, c in self.objective.items())

    def check_assignment(self, values: np.ndarray | list[float], tol: float = 1e-6) -> list[str]:
        """Names of bounds, integrality, rows and SOS2 groups violated beyond ``tol``."""
        bad = []
        for v in self.variables:
            x = values[v.index]
            if not math.isfinite(x):
                bad.append(f"{v.name}: not finite")
                continue
            if x < v.lb - tol or x > v.ub + tol:
                bad.append(f"{v.name}: {x} outside [{v.lb}, {v.ub}]")
            if v.kind == "B" and min(abs(x), abs(1 - x)) > tol:
                bad.append(f"{v.name}: {x} not binary")
        for c in self.constraints:
            gap = c.violation(values)
            if gap > tol:
                bad.append(f"{c.name} ({c.family}): violated by {gap:.3g}")
        for g in self.sos2:
            support = [r for r, j in enumerate(g.members) if abs(values[j]) > tol]
            if support and support[-1] - support[0] > 1:
                bad.append(f"{g.name}: non-adjacent support {support}")
        return bad

    def to_arrays(self) -> dict[str, Any]:
        """Column bounds, objective and a CSC constraint matrix with row bounds."""
        n, m = len(self.variables), len(self.constraints)
        rows, cols, vals = [], [], []
        row_lo = np.full(m, -np.inf)
        row_hi = np.full(m, np.inf)
        for r, c in enumerate(self.constraints):
            for j, a in c.coeffs:
                rows.append(r)
                cols.append(j)
                vals.append(a)
            if c.sense in ("<=", "=="):
                row_hi[r] = c.rhs
            if c.sense in (">=", "=="):
                row_lo[r] = c.rhs
        cost = np.zeros(n)
        for j, a in self.objective.items():
            cost[j] = a
        matrix = sparse.csc_matrix((vals, (rows, cols)), shape=(m, n))
        matrix.sort_indices()
        return {
            "cost": cost,
            "col_lo": np.array([v.lb for v in self.variables]),
            "col_hi": np.array([v.ub for v in self.variables]),
            "integer": np.array([v.kind == "B" for v in self.variables]),
            "matrix": matrix,
            "row_lo": row_lo,
            "row_hi": row_hi,
            "offset": self.objective_offset,
        }
