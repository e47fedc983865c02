"""From model to verified-ready schedule.

``solve`` runs in three steps:

1. Lower the SOS2 groups for the backend and run it, optionally from a warm
   start (usually the reference schedule).
2. Polish: fix every structural binary (charge/rest/visit, charger, order,
   delay) at its rounded value and re-solve the remaining, much smaller
   problem to a tight gap.  Energies and the interpolated battery cost become
   optimal for the chosen structure, so a loose main gap never leaves
   surplus charging behind.
3. Normalise: rebuild the schedule from the binaries and energies, with every
   visit started as early as its arrival and charger allow, taking charging
   visits in the solver's start order.  Times can only move earlier, so the
   order on every charger and the delay indicators stay valid, and the
   recomputed schedule satisfies every row exactly rather than up to the
   solver's tolerances.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import asdict, dataclass, field
from typing import Any, Sequence

from ..domain import Scenario, Solution, VisitRecord, effective_power, station_order
from ..verify import evaluate_cost
from .backends import Limits, RawResult, SolverBackend
from .model import MipModel
from .sos2 import Encoding, lower

log = logging.getLogger(__name__)

STRUCTURAL = ("x", "y", "z", "chi", "o", "w")

# the incremental encoding is ideal (its LP relaxation has integral SOS2 vertices)
# and solved several times faster than the logarithmic one in benchmarks
DEFAULT_ENCODING: Encoding = "incremental"

STATUSES = ("optimal", "feasible-with-gap", "infeasible", "timeout-no-solution", "error")


@dataclass
class SolveReport:
    status: str
    objective: float | None
    bound: float | None
    gap: float | None
    wall_time: float
    backend: str
    encoding: str
    big_m_time: float
    pair_m: tuple[float, float] | None
    variables: int
    binaries: int
    constraints: int
    warm_start: str
    polished: bool = False
    mip_objective: float | None = None
    message: str = ""
    limits: dict[str, Any] = field(default_factory=dict)

    @property
    def has_solution(self) -> bool:
        return self.status in ("optimal", "feasible-with-gap")

    def as_dict(self) -> dict[str, Any]:
        out = asdict(self)
        out["pair_m"] = list(self.pair_m) if self.pair_m else None
        return out


def relative_gap(objective: float, bound: float) -> float:
    return max(0.0, objective - bound) / max(abs(objective), 1e-9)


def _round_structure(model: MipModel, values: Sequence[float]) -> MipModel:
    fixed = model.copy()
    for v in model.variables:
        if v.symbol in STRUCTURAL:
            b = float(round(values[v.index]))
            fixed.set_bounds(v.index, b, b)
    return fixed


def _polish(model: MipModel, values: list[float], backend: SolverBackend, encoding: Encoding,
            limits: Limits) -> list[float] | None:
    fixed = _round_structure(model, values)
    low = lower(fixed, encoding)
    tight = Limits(time_limit=max(10.0, limits.time_limit / 4), rel_gap=1e-9, seed=limits.seed)
    start = low.lift([_clip(fixed, j, x) for j, x in enumerate(values)])
    try:
        raw = backend.solve(low.model, tight, start)
    except Exception as exc:  # pragma: no cover - defensive, keeps the main result
        log.warning("polish failed: %s", exc)
        return None
    if raw.values is None:
        log.warning("polish found no solution (%s); keeping the main result", raw.message)
        return None
    return low.project(raw.values)


def _clip(model: MipModel, j: int, x: float) -> float:
    v = model.variables[j]
    return min(max(x, v.lb), v.ub)


def extract(model: MipModel, values: Sequence[float], method: str = "coordinated") -> Solution:
    """Schedule encoded by ``values``, normalised to earliest start times."""
    scenario: Scenario = model.meta["scenario"]
    var = model.var

    def b(sym: str, *key: int) -> bool:
        return values[var(sym, *key)] > 0.5

    plan: dict[int, list[dict[str, Any]]] = {}
    for t in scenario.trucks:
        n = t.id
        order = station_order(t, scenario)
        energy = t.initial_energy
        stops = []
        for p, s in enumerate(order):
            i = s.id
            x, y = b("x", n, i), b("y", n, i)
            z = b("z", n, i) or x or y
            de = values[var("de", n, i)] if x else 0.0
            de = min(max(de, 0.0), t.capacity - energy)
            if de <= 1e-9:
                de, x = 0.0, False
            charger = None
            if x:
                charger = next(k for k in range(s.charger_count) if b("chi", n, i, k))
            tau = de / effective_power(t, s)
            stops.append({
                "station": s, "x": x, "y": y, "z": z, "charger": charger, "E": energy, "de": de,
                "tau": tau, "zeta": max(tau, t.rest_duration if y else 0.0),
                "key": values[var("t_start", n, i)],
            })
            if p + 1 < len(order):
                energy = energy - abs(order[p + 1].position - s.position) * t.consumption + de
        plan[n] = stops

    # every visit in solver start order; a truck's own visits are increasing in it
    queue = sorted(
        ((stop["key"], n, p) for n, stops in plan.items() for p, stop in enumerate(stops)),
    )
    free_at: dict[tuple[int, int], float] = {}
    trucks = {t.id: t for t in scenario.trucks}
    for _, n, p in queue:
        t = trucks[n]
        stop = plan[n][p]
        s = stop["station"]
        if p == 0:
            arrival = t.entry_time
        else:
            prev = plan[n][p - 1]
            arrival = prev["dep"] + abs(s.position - prev["station"].position) / t.speed
        ready = arrival + (s.visit_overhead if stop["z"] else 0.0)
        if stop["x"]:
            slot = (s.id, stop["charger"])
            start = max(ready, free_at.get(slot, -math.inf))
            dep = start + stop["zeta"] + s.charge_overhead
            free_at[slot] = dep
        else:
            start = ready
            dep = start + stop["zeta"]
        stop.update(arr=arrival, start=start, dep=dep)

    itineraries = {}
    delayed = {}
    for t in scenario.trucks:
        visits = []
        for stop in plan[t.id]:
            cap = t.capacity
            visits.append(VisitRecord(
                station_id=stop["station"].id,
                charging=stop["x"],
                resting=stop["y"],
                visited=stop["z"],
                charger_index=stop["charger"],
                arrival=stop["arr"],
                charge_start=stop["start"],
                departure=stop["dep"],
                charge_duration=stop["tau"],
                occupation=stop["zeta"],
                energy_added=stop["de"],
                energy_on_arrival=stop["E"],
                soc_before=stop["E"] / cap,
                soc_after=(stop["E"] + stop["de"]) / cap,
            ))
        itineraries[t.id] = tuple(visits)
        delayed[t.id] = visits[-1].departure > t.deadline
    return Solution(itineraries, delayed, method)


def solve(model: MipModel, backend: SolverBackend, limits: Limits = Limits(),
          warm_start: Sequence[float] | None = None, encoding: Encoding | None = None,
          polish: bool = True) -> tuple[Solution | None, SolveReport]:
    if encoding is None:
        encoding = DEFAULT_ENCODING
    if encoding == "native" and not backend.supports_sos2:
        raise ValueError(f"backend {backend.name} cannot take native SOS2 groups")
    t0 = time.perf_counter()
    if model.num_vars == 0:
        # nothing to decide; backends differ on how they treat an empty model
        return Solution({}, {}, "coordinated"), SolveReport(
            status="optimal", objective=model.objective_offset, bound=model.objective_offset,
            gap=0.0, wall_time=time.perf_counter() - t0, backend=backend.name, encoding=encoding,
            big_m_time=model.big_m_time, pair_m=None, variables=0, binaries=0, constraints=0,
            warm_start="none", mip_objective=model.objective_offset, limits=asdict(limits),
        )
    low = lower(model, encoding)
    start = low.lift(list(warm_start)) if warm_start is not None else None
    raw: RawResult = backend.solve(low.model, limits, start)
    census = low.model.census()
    report = SolveReport(
        status="error", objective=None, bound=raw.bound, gap=None, wall_time=0.0,
        backend=backend.name, encoding=encoding, big_m_time=model.big_m_time,
        pair_m=model.meta.get("pair_m"), variables=census["variables"],
        binaries=census["binary"], constraints=census["constraints"],
        warm_start=raw.warm_start, mip_objective=raw.objective, message=raw.message,
        limits=asdict(limits),
    )
    if raw.values is None:
        report.status = {"infeasible": "infeasible", "time-limit": "timeout-no-solution"}.get(
            raw.status, "error")
        report.wall_time = time.perf_counter() - t0
        return None, report

    values = low.project(raw.values)
    if polish:
        polished = _polish(model, values, backend, encoding, limits)
        if polished is not None:
            values = polished
            report.polished = True
    solution = extract(model, values)
    scenario = model.meta["scenario"]
    cost = evaluate_cost(solution, scenario, model.meta["degradation"], "pwl").aggregate.total
    report.objective = cost
    if report.bound is not None:
        report.bound = min(report.bound, cost)
        report.gap = relative_gap(cost, report.bound)
    within = report.gap is not None and report.gap <= limits.rel_gap + 1e-9
    report.status = "optimal" if raw.status == "optimal" or within else "feasible-with-gap"
    report.wall_time = time.perf_counter() - t0
    return solution, report
