"""Coordinated charging MIP: variables, constraint blocks and objective.

Per (truck n, station i) the model carries three decision binaries (charge x,
rest y, visit z), one charger binary per charger, nine continuous quantities
(E, de, tau, zeta, t_arr, t_start, t_dep, C_before, C_after) and two SOS2
weight groups that interpolate the degradation cost before and after charging.
Each truck adds one delay binary ``w``; each pair of trucks that can meet at a
station adds one ordering binary per charger there.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Any

from ..degradation import DegradationModel, pwl_eval
from ..domain import Scenario, Solution, Truck, effective_power, station_order
from ..verify import is_delayed
from .model import MipModel

CONTINUOUS = ("E", "de", "tau", "zeta", "t_arr", "t_start", "t_dep", "C_before", "C_after")


class ModelTooLarge(RuntimeError):
    pass


class WarmStartRejected(ValueError):
    def __init__(self, violated: list[str]):
        self.violated = violated
        preview = "; ".join(violated[:5])
        more = f" (+{len(violated) - 5} more)" if len(violated) > 5 else ""
        super().__init__(f"warm start violates the model: {preview}{more}")


@dataclass(frozen=True)
class BuildOptions:
    prune_pairs: bool = True
    symmetry_breaking: bool = False
    tight_pair_m: bool = True
    variable_budget: int = 250_000


def _stop_bound(truck: Truck, scenario: Scenario) -> float:
    """Longest a single station visit can take for this truck."""
    return max(
        truck.rest_duration + s.charge_overhead + s.visit_overhead
        + truck.capacity / effective_power(truck, s)
        for s in scenario.stations
    )


def truck_horizon(truck: Truck, scenario: Scenario) -> float:
    """Latest admissible event time of a truck: its deadline plus one worst-case
    stop per station.

    A visit lasts at most rest + both overheads + a full recharge, so any
    schedule in which a truck waits less in total than that worst-case stop
    time finishes before this horizon.  Schedules beyond it are excluded from
    the model by construction.
    """
    return truck.deadline + len(scenario.stations) * _stop_bound(truck, scenario)


def choose_big_m(scenario: Scenario) -> float:
    """Horizon bounding every event time of every truck.

    With deadlines anchored at ``entry + (1 + margin) * traversal`` this is
    latest entry + (1 + margin) * longest traversal + |I| * worst-case stop.
    Every time variable lies in ``[0, M]``, so M bounds any difference of two
    event times, which is what the disjunctive rows need.
    """
    if not scenario.trucks:
        return 0.0
    return max(truck_horizon(t, scenario) for t in scenario.trucks)


def _earliest(truck: Truck, scenario: Scenario) -> list[float]:
    order = station_order(truck, scenario)
    out = [truck.entry_time]
    for a, b in zip(order, order[1:]):
        out.append(out[-1] + abs(b.position - a.position) / truck.speed)
    return out


def _latest(truck: Truck, scenario: Scenario) -> list[float]:
    order = station_order(truck, scenario)
    horizon = truck_horizon(truck, scenario)
    out = [horizon]
    for a, b in reversed(list(zip(order, order[1:]))):
        out.append(out[-1] - abs(b.position - a.position) / truck.speed)
    return out[::-1]


def census(scenario: Scenario, degradation: DegradationModel,
           options: BuildOptions = BuildOptions()) -> dict[str, int]:
    """Closed-form size of :func:`build_model` without building it.

    Per (n, i): 3 + K_i binaries, 9 continuous, 2R SOS2 weights, 16 rows.
    Per truck: 1 delay binary, 2(S - 1) recursion rows, rest row, deadline row.
    Per ordering binary: 2 rows.  Symmetry cuts: K_i - 1 rows per (n, i).
    """
    R = degradation.breakpoint_count
    S = len(scenario.stations)
    N = len(scenario.trucks)
    K = sum(s.charger_count for s in scenario.stations)
    ordering = sum(s.charger_count for _, _, s in _pairs(scenario, options))
    binary = N * (3 * S + K) + N + ordering
    continuous = N * S * (9 + 2 * R)
    rows = N * (2 * (S - 1) + 16 * S + 2) + 2 * ordering
    if options.symmetry_breaking:
        rows += N * (K - S)
    return {
        "variables": binary + continuous,
        "binary": binary,
        "continuous": continuous,
        "constraints": rows,
        "sos2_groups": 2 * N * S,
        "ordering": ordering,
    }


def _pairs(scenario: Scenario, options: BuildOptions):
    """(n, m, station) triples whose charging windows can intersect."""
    windows = {}
    for t in scenario.trucks:
        order = station_order(t, scenario)
        early, late = _earliest(t, scenario), _latest(t, scenario)
        windows[t.id] = {s.id: (early[p], late[p]) for p, s in enumerate(order)}
    for a, b in combinations(scenario.trucks, 2):
        for s in scenario.stations:
            lo_a, hi_a = windows[a.id][s.id]
            lo_b, hi_b = windows[b.id][s.id]
            if options.prune_pairs and (hi_a < lo_b or hi_b < lo_a):
                continue
            yield a, b, s


def build_model(scenario: Scenario, degradation: DegradationModel,
                options: BuildOptions = BuildOptions()) -> MipModel:
    size = census(scenario, degradation, options)
    if size["variables"] > options.variable_budget:
        raise ModelTooLarge(
            f"model would have {size['variables']} variables ({size['binary']} binary), "
            f"budget is {options.variable_budget}"
        )
    table = degradation.table
    R = len(table)
    big_m = choose_big_m(scenario)
    model = MipModel(big_m_time=big_m)
    model.meta.update(scenario=scenario, degradation=degradation, options=options)
    c_max = max(table.values)

    for t in scenario.trucks:
        n = t.id
        order = station_order(t, scenario)
        early, late = _earliest(t, scenario), _latest(t, scenario)
        for p, s in enumerate(order):
            i = s.id
            power = effective_power(t, s)
            for sym in ("x", "y", "z"):
                model.add_var(sym, (n, i), "B")
            for k in range(s.charger_count):
                model.add_var("chi", (n, i, k), "B")
            first = p == 0
            usable = t.capacity - t.min_energy
            model.add_var("E", (n, i), lb=t.initial_energy if first else t.min_energy,
                          ub=t.initial_energy if first else t.capacity)
            model.add_var("de", (n, i), ub=usable)
            model.add_var("tau", (n, i), ub=usable / power)
            model.add_var("zeta", (n, i), ub=max(usable / power, t.rest_duration))
            model.add_var("t_arr", (n, i), lb=early[p], ub=t.entry_time if first else late[p])
            model.add_var("t_start", (n, i), lb=early[p], ub=late[p])
            model.add_var("t_dep", (n, i), lb=early[p], ub=late[p])
            model.add_var("C_before", (n, i), ub=c_max)
            model.add_var("C_after", (n, i), ub=c_max)
            for side in ("before", "after"):
                for r in range(R):
                    model.add_var(f"lam_{side}", (n, i, r), ub=1.0)
        model.add_var("w", (n,), "B")

    for t in scenario.trucks:
        _truck_blocks(model, t, scenario, table)

    _non_overlap(model, scenario, options)
    if options.symmetry_breaking:
        _symmetry_cuts(model, scenario)

    for t in scenario.trucks:
        n = t.id
        order = station_order(t, scenario)
        last = order[-1].id
        obj = model.objective
        obj[model.var("t_dep", n, last)] = obj.get(model.var("t_dep", n, last), 0.0) + t.operating_rate
        model.objective_offset -= t.operating_rate * t.entry_time
        obj[model.var("w", n)] = t.delay_penalty
        for s in order:
            obj[model.var("de", n, s.id)] = s.electricity_price
            obj[model.var("C_before", n, s.id)] = 1.0
            obj[model.var("C_after", n, s.id)] = -1.0
    return model


def _truck_blocks(model: MipModel, t: Truck, scenario: Scenario, table) -> None:
    n = t.id
    order = station_order(t, scenario)
    v = model.var
    for p, s in enumerate(order):
        i = s.id
        power = effective_power(t, s)
        if p + 1 < len(order):
            j = order[p + 1].id
            dist = abs(order[p + 1].position - s.position)
            # E[j] = E[i] - d * consumption + de[i]
            model.add_constraint("eq1a", {v("E", n, j): 1, v("E", n, i): -1, v("de", n, i): -1},
                                 "==", -dist * t.consumption, f"eq1a_{n}_{i}")
            model.add_constraint("eq2a", {v("t_arr", n, j): 1, v("t_dep", n, i): -1},
                                 "==", dist / t.speed, f"eq2a_{n}_{i}")
        model.add_constraint("eq1c", {v("de", n, i): 1, v("tau", n, i): -power}, "==", 0,
                             f"eq1c_{n}_{i}")
        model.add_constraint("eq1d", {v("de", n, i): 1, v("x", n, i): -t.capacity}, "<=", 0,
                             f"eq1d_{n}_{i}")
        model.add_constraint("eq1e", {v("de", n, i): 1, v("E", n, i): 1}, "<=", t.capacity,
                             f"eq1e_{n}_{i}")
        model.add_constraint(
            "eq2b",
            {v("t_dep", n, i): 1, v("t_start", n, i): -1, v("zeta", n, i): -1,
             v("x", n, i): -s.charge_overhead},
            "==", 0, f"eq2b_{n}_{i}",
        )
        model.add_constraint(
            "eq2c", {v("t_start", n, i): 1, v("t_arr", n, i): -1, v("z", n, i): -s.visit_overhead},
            ">=", 0, f"eq2c_{n}_{i}",
        )
        model.add_constraint("eq2d", {v("zeta", n, i): 1, v("tau", n, i): -1}, ">=", 0,
                             f"eq2d_{n}_{i}")
        model.add_constraint("eq2e", {v("zeta", n, i): 1, v("y", n, i): -t.rest_duration}, ">=", 0,
                             f"eq2e_{n}_{i}")
        model.add_constraint("eq2g", {v("z", n, i): 1, v("x", n, i): -1}, ">=", 0, f"eq2g_x_{n}_{i}")
        model.add_constraint("eq2g", {v("z", n, i): 1, v("y", n, i): -1}, ">=", 0, f"eq2g_y_{n}_{i}")
        chi = {v("chi", n, i, k): -1 for k in range(s.charger_count)}
        model.add_constraint("eq3b", {v("x", n, i): 1, **chi}, "==", 0, f"eq3b_{n}_{i}")
        _degradation_block(model, t, i, table)
    model.add_constraint("eq2f", {v("y", n, s.id): 1 for s in order}, ">=", 1, f"eq2f_{n}")
    last = order[-1].id
    slack = max(model.variables[v("t_dep", n, last)].ub - t.deadline, 0.0)
    model.meta.setdefault("deadline_m", {})[n] = slack
    model.add_constraint("eq4", {v("t_dep", n, last): 1, v("w", n): -slack}, "<=", t.deadline,
                         f"eq4_{n}")


def _degradation_block(model: MipModel, t: Truck, i: int, table) -> None:
    n = t.id
    v = model.var
    R = len(table)
    cap = t.capacity
    # convexity decides whether each side needs true SOS2 adjacency: C_before is
    # minimised (+1), C_after maximised (-1)
    relax = {"before": table.is_convex(), "after": table.is_concave()}
    soc_terms = {
        "before": {v("E", n, i): -1.0 / cap},
        "after": {v("E", n, i): -1.0 / cap, v("de", n, i): -1.0 / cap},
    }
    for side in ("before", "after"):
        lam = [v(f"lam_{side}", n, i, r) for r in range(R)]
        cost = v(f"C_{side}", n, i)
        model.add_constraint("eq6", {j: 1.0 for j in lam}, "==", 1, f"eq6_sum_{side}_{n}_{i}")
        coeffs = {j: b for j, b in zip(lam, table.socs)}
        coeffs.update(soc_terms[side])
        model.add_constraint("eq6", coeffs, "==", 0, f"eq6_soc_{side}_{n}_{i}")
        coeffs = {j: -val for j, val in zip(lam, table.values)}
        coeffs[cost] = 1.0
        model.add_constraint("eq6", coeffs, "==", 0, f"eq6_cost_{side}_{n}_{i}")
        model.add_sos2(f"sos_{side}_{n}_{i}", lam, table.socs, relaxable=relax[side])


def _non_overlap(model: MipModel, scenario: Scenario, options: BuildOptions) -> None:
    v = model.var
    pair_m = []
    for a, b, s in _pairs(scenario, options):
        n, m, i = a.id, b.id, s.id
        if options.tight_pair_m:
            ub = lambda sym, who: model.variables[v(sym, who, i)].ub  # noqa: E731
            lb = lambda sym, who: model.variables[v(sym, who, i)].lb  # noqa: E731
            M = max(ub("t_dep", n) - lb("t_start", m), ub("t_dep", m) - lb("t_start", n), 0.0)
        else:
            M = model.big_m_time
        pair_m.append(M)
        for k in range(s.charger_count):
            o = model.add_var("o", (n, m, i, k), "B")
            cn, cm = v("chi", n, i, k), v("chi", m, i, k)
            # o = 1: n charges first; o = 0: m charges first
            model.add_constraint(
                "eq3a", {v("t_dep", n, i): 1, v("t_start", m, i): -1, cn: M, cm: M, o: M},
                "<=", 3 * M, f"eq3a_{n}_{m}_{i}_{k}_a",
            )
            model.add_constraint(
                "eq3a", {v("t_dep", m, i): 1, v("t_start", n, i): -1, cn: M, cm: M, o: -M},
                "<=", 2 * M, f"eq3a_{n}_{m}_{i}_{k}_b",
            )
    model.meta["pair_m"] = (min(pair_m), max(pair_m)) if pair_m else None


def _symmetry_cuts(model: MipModel, scenario: Scenario) -> None:
    """Charger k at a station is used by truck n only if charger k-1 there is
    used by some truck with a smaller id."""
    ids = [t.id for t in scenario.trucks]
    for s in scenario.stations:
        for pos, n in enumerate(ids):
            for k in range(1, s.charger_count):
                coeffs = {model.var("chi", n, s.id, k): 1.0}
                for m in ids[:pos]:
                    coeffs[model.var("chi", m, s.id, k - 1)] = -1.0
                model.add_constraint("sym", coeffs, "<=", 0, f"sym_{n}_{s.id}_{k}")


def warm_start_from(model: MipModel, reference: Solution, tol: float = 1e-6) -> list[float]:
    """Assignment of every model variable reproducing ``reference``.

    Raises :class:`WarmStartRejected` naming each model row or bound the
    reference schedule violates.
    """
    scenario: Scenario = model.meta["scenario"]
    degradation: DegradationModel = model.meta["degradation"]
    table = degradation.table
    values = [0.0] * model.num_vars
    v = model.var
    starts: dict[tuple[int, int], float] = {}
    for t in scenario.trucks:
        n = t.id
        visits = reference.itineraries[n]
        for visit in visits:
            i = visit.station_id
            starts[(n, i)] = visit.charge_start
            values[v("x", n, i)] = float(visit.charging)
            values[v("y", n, i)] = float(visit.resting)
            values[v("z", n, i)] = float(visit.visited)
            if visit.charging and visit.charger_index is not None:
                values[v("chi", n, i, visit.charger_index)] = 1.0
            E, de = visit.energy_on_arrival, visit.energy_added
            values[v("E", n, i)] = E
            values[v("de", n, i)] = de
            values[v("tau", n, i)] = visit.charge_duration
            values[v("zeta", n, i)] = visit.occupation
            values[v("t_arr", n, i)] = visit.arrival
            values[v("t_start", n, i)] = visit.charge_start
            values[v("t_dep", n, i)] = visit.departure
            for side, soc in (("before", E / t.capacity), ("after", (E + de) / t.capacity)):
                values[v(f"C_{side}", n, i)] = pwl_eval(table, soc)
                for r, wgt in table.weights(soc).items():
                    values[v(f"lam_{side}", n, i, r)] = wgt
        values[v("w", n)] = float(is_delayed(t, visits))
    for var in model.variables:
        if var.symbol == "o":
            n, m, i, _ = var.key
            values[var.index] = float(starts[(n, i)] <= starts[(m, i)])
    violated = model.check_assignment(values, tol)
    if violated:
        raise WarmStartRejected(violated)
    return values


def describe(model: MipModel) -> dict[str, Any]:
    c = model.census()
    return {
        "variables": c["variables"],
        "binary": c["binary"],
        "constraints": c["constraints"],
        "sos2_groups": c["sos2_groups"],
        "big_m_time": model.big_m_time,
        "pair_m": model.meta.get("pair_m"),
    }


def objective_terms(model: MipModel, values: list[float]) -> dict[str, float]:
    """Objective split into the four cost components, for diagnostics."""
    out = {"charging": 0.0, "operating": model.objective_offset, "battery": 0.0, "delay": 0.0}
    group = {"de": "charging", "t_dep": "operating", "C_before": "battery",
             "C_after": "battery", "w": "delay"}
    for j, c in model.objective.items():
        out[group[model.variables[j].symbol]] += c * values[j]
    return out
