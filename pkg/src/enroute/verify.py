"""Solver-independent feasibility checks and cost evaluation.

Every check is re-derived from the visit records; nothing reported by a solver
is trusted.  Constraint families are named after the model blocks they mirror
(``eq1a`` energy recursion ... ``eq4`` deadline indicator).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Literal

from .degradation import DegradationModel, charge_event_cost, pwl_eval
from .domain import (
    CostBreakdown,
    Scenario,
    Solution,
    Truck,
    VisitRecord,
    effective_power,
    station_order,
)

CostMode = Literal["exact", "pwl"]


class StructureError(ValueError):
    """The solution does not line up with the scenario (missing truck, wrong station order)."""


@dataclass(frozen=True)
class Violation:
    family: str
    truck: int | None
    station: int | None
    charger: int | None
    magnitude: float
    message: str

    def as_dict(self) -> dict[str, Any]:
        return {
            "family": self.family,
            "truck": self.truck,
            "station": self.station,
            "charger": self.charger,
            "magnitude": self.magnitude if math.isfinite(self.magnitude) else str(self.magnitude),
            "message": self.message,
        }


@dataclass
class ViolationReport:
    tolerance: float
    violations: list[Violation] = field(default_factory=list)

    @property
    def worst(self) -> float:
        return max((v.magnitude for v in self.violations), default=0.0)

    @property
    def passed(self) -> bool:
        return all(v.magnitude <= self.tolerance for v in self.violations)

    def families(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for v in self.violations:
            out[v.family] = out.get(v.family, 0) + 1
        return out

    def as_dict(self) -> dict[str, Any]:
        worst = self.worst
        return {
            "passed": self.passed,
            "tolerance": self.tolerance,
            "worst": worst if math.isfinite(worst) else str(worst),
            "violations": [v.as_dict() for v in self.violations],
        }


def _check_structure(solution: Solution, scenario: Scenario) -> None:
    ids = {t.id for t in scenario.trucks}
    if set(solution.itineraries) != ids:
        raise StructureError(
            f"itineraries cover trucks {sorted(solution.itineraries)}, scenario has {sorted(ids)}"
        )
    for truck in scenario.trucks:
        expected = [s.id for s in station_order(truck, scenario)]
        got = [v.station_id for v in solution.itineraries[truck.id]]
        if got != expected:
            raise StructureError(f"truck {truck.id}: station order {got}, expected {expected}")


class _Collector:
    def __init__(self, tol: float) -> None:
        self.tol = tol
        self.found: list[Violation] = []

    def over(self, family: str, excess: float, truck: int | None, station: int | None,
             message: str, charger: int | None = None) -> None:
        """Record ``excess`` if it is positive beyond tolerance or not a number."""
        if math.isnan(excess):
            excess = math.inf
        if excess > self.tol:
            self.found.append(Violation(family, truck, station, charger, excess, message))

    def gap(self, family: str, lhs: float, rhs: float, truck: int | None, station: int | None,
            message: str) -> None:
        self.over(family, abs(lhs - rhs), truck, station, message)


def _check_truck(truck: Truck, visits: tuple[VisitRecord, ...], scenario: Scenario,
                 delayed: bool | None, c: _Collector) -> None:
    order = station_order(truck, scenario)
    n = truck.id
    cap = truck.capacity
    c.gap("init", visits[0].energy_on_arrival, truck.initial_energy, n, order[0].id,
          "energy at entry differs from the initial energy")
    c.gap("init", visits[0].arrival, truck.entry_time, n, order[0].id,
          "arrival at entry differs from the entry time")
    for p, (st, v) in enumerate(zip(order, visits)):
        i = st.id
        E, de = v.energy_on_arrival, v.energy_added
        x, y, z = bool(v.charging), bool(v.resting), bool(v.visited)
        power = effective_power(truck, st)
        if p + 1 < len(order):
            nxt = visits[p + 1]
            dist = abs(order[p + 1].position - st.position)
            c.gap("eq1a", nxt.energy_on_arrival, E - dist * truck.consumption + de, n, i,
                  "energy recursion broken")
            c.gap("eq2a", nxt.arrival, v.departure + dist / truck.speed, n, i,
                  "arrival does not follow departure plus driving time")
        c.over("eq1b", truck.min_energy - E, n, i, "energy below the SoC floor")
        c.over("eq1b", E - cap, n, i, "energy above capacity")
        c.gap("eq1c", de, v.charge_duration * power, n, i, "energy differs from duration x power")
        c.over("eq1d", de - cap * x, n, i, "energy added without the charging flag")
        c.over("eq1e", -de, n, i, "negative charged energy")
        c.over("eq1e", de - (cap - E), n, i, "charging beyond capacity")
        c.gap("eq6", v.soc_before, E / cap, n, i, "soc_before inconsistent with energy")
        c.gap("eq6", v.soc_after, (E + de) / cap, n, i, "soc_after inconsistent with energy")
        c.gap("eq2b", v.departure,
              v.charge_start + v.occupation + st.charge_overhead * x, n, i,
              "departure differs from charge start + occupation + overhead")
        c.over("eq2c", v.arrival + st.visit_overhead * z - v.charge_start, n, i,
               "charging starts before arrival plus visit overhead")
        c.over("eq2d", v.charge_duration - v.occupation, n, i, "occupation shorter than charging")
        c.over("eq2e", truck.rest_duration * y - v.occupation, n, i, "occupation shorter than rest")
        c.gap("zeta", v.occupation, max(v.charge_duration, truck.rest_duration * y), n, i,
              "occupation is not max(charge time, rest time)")
        c.over("eq2g", float(x and not z), n, i, "charging without a visit")
        c.over("eq2g", float(y and not z), n, i, "resting without a visit")
        k = v.charger_index
        if x and (k is None or not 0 <= k < st.charger_count):
            c.over("eq3b", 1.0, n, i, f"charging without a valid charger index ({k})")
        if not x and k is not None:
            c.over("eq3b", 1.0, n, i, "charger index set on a non-charging visit")
    c.over("eq2f", float(not any(v.resting for v in visits)), n, None, "no rest stop")
    exit_time = visits[-1].departure
    if delayed is None:
        c.over("eq4", 1.0, n, None, "missing delay flag")
    elif delayed:
        c.over("eq4", truck.deadline - exit_time, n, order[-1].id, "delay flagged but exit on time")
    else:
        c.over("eq4", exit_time - truck.deadline, n, order[-1].id, "exit after deadline, no delay flag")


def _number(x: Any) -> float:
    try:
        return float(x)
    except (TypeError, ValueError):
        return math.nan


def _timelines(solution: Solution) -> dict[tuple[int, int], list[tuple[float, float, int]]]:
    # like Solution.charger_timelines, but unreadable times become NaN instead of raising
    out: dict[tuple[int, int], list[tuple[float, float, int]]] = {}
    for truck_id, visits in solution.itineraries.items():
        for v in visits:
            if v.charging and isinstance(v.charger_index, int):
                out.setdefault((v.station_id, v.charger_index), []).append(
                    (_number(v.charge_start), _number(v.departure), truck_id))
    return out


def check_feasibility(solution: Solution, scenario: Scenario,
                      tolerance: float = 1e-6) -> ViolationReport:
    _check_structure(solution, scenario)
    c = _Collector(tolerance)
    for truck in scenario.trucks:
        try:
            _check_truck(truck, solution.itineraries[truck.id], scenario,
                         solution.delayed.get(truck.id), c)
        except (TypeError, ValueError, ArithmeticError) as exc:
            c.over("data", math.inf, truck.id, None, f"unreadable record: {exc}")
    for (station, charger), intervals in _timelines(solution).items():
        for a in range(len(intervals)):
            for b in range(a + 1, len(intervals)):
                s1, e1, n1 = intervals[a]
                s2, e2, n2 = intervals[b]
                overlap = min(e1 - s2, e2 - s1)
                c.over("eq3a", overlap, n1, station,
                       f"trucks {n1} and {n2} overlap on the charger", charger=charger)
    return ViolationReport(tolerance, c.found)


@dataclass(frozen=True)
class CostReport:
    per_truck: dict[int, CostBreakdown]
    mode: CostMode

    @property
    def aggregate(self) -> CostBreakdown:
        total = CostBreakdown(scope="aggregate")
        for cb in self.per_truck.values():
            total = total + cb
        return total

    @property
    def mean(self) -> CostBreakdown:
        if not self.per_truck:
            return CostBreakdown(scope="per-truck-mean")
        return self.aggregate.scaled(1.0 / len(self.per_truck), "per-truck-mean")


def is_delayed(truck: Truck, visits: tuple[VisitRecord, ...]) -> bool:
    return visits[-1].departure > truck.deadline


def truck_cost(truck: Truck, visits: tuple[VisitRecord, ...], scenario: Scenario,
               degradation: DegradationModel, mode: CostMode = "exact") -> CostBreakdown:
    prices = {s.id: s.electricity_price for s in scenario.stations}
    charging = sum(prices[v.station_id] * v.energy_added for v in visits)
    operating = truck.operating_rate * (visits[-1].departure - visits[0].arrival)
    battery = 0.0
    table = degradation.table if mode == "pwl" else None
    for v in visits:
        before = v.energy_on_arrival / truck.capacity
        after = (v.energy_on_arrival + v.energy_added) / truck.capacity
        if table is not None:
            battery += pwl_eval(table, before) - pwl_eval(table, after)
        elif after > before:
            battery += charge_event_cost(before, after, degradation)
    delay = truck.delay_penalty if is_delayed(truck, visits) else 0.0
    return CostBreakdown(charging, operating, battery, delay)


def evaluate_cost(solution: Solution, scenario: Scenario, degradation: DegradationModel,
                  mode: CostMode = "exact") -> CostReport:
    if mode not in ("exact", "pwl"):
        raise ValueError(f"unknown cost mode {mode!r}")
    return CostReport(
        {
            t.id: truck_cost(t, solution.itineraries[t.id], scenario, degradation, mode)
            for t in scenario.trucks
        },
        mode,
    )
