"""Shared domain types for the charging corridor.

Units are fixed throughout the package: hours, kWh, kW, km, km/h and euro.
Time is absolute, with hour 0 at the start of the arrival window.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any, Iterable, Literal, Mapping

SCHEMA_VERSION = 1

Direction = Literal["eastbound", "westbound"]
Method = Literal["reference", "coordinated"]
CostScope = Literal["per-truck", "aggregate", "per-truck-mean"]


class InfeasibleCorridorError(ValueError):
    """A truck cannot cover some segment even when leaving a station full."""

    def __init__(self, truck_id: int, start: int, end: int, energy: float, usable: float):
        self.truck_id = truck_id
        self.segment = (start, end)
        super().__init__(
            f"truck {truck_id}: segment {start}->{end} needs {energy:.3f} kWh "
            f"but only {usable:.3f} kWh is usable above the SoC floor"
        )


@dataclass(frozen=True)
class Station:
    id: int
    position: float
    charger_count: int = 2
    supplied_power: float = 750.0
    electricity_price: float = 0.3
    charge_overhead: float = 5 / 60
    visit_overhead: float = 7 / 60

    def __post_init__(self) -> None:
        if self.charger_count < 1:
            raise ValueError(f"station {self.id}: charger_count must be >= 1")
        if not self.supplied_power > 0:
            raise ValueError(f"station {self.id}: supplied_power must be positive")
        if self.charge_overhead < 0 or self.visit_overhead < 0:
            raise ValueError(f"station {self.id}: overheads must be non-negative")


@dataclass(frozen=True)
class Truck:
    id: int
    direction: Direction
    entry_time: float
    initial_energy: float
    deadline: float
    capacity: float = 600.0
    consumption: float = 1.8
    speed: float = 85.0
    max_charge_power: float = 750.0
    operating_rate: float = 30.0
    delay_penalty: float = 500.0
    min_soc_fraction: float = 0.1
    rest_duration: float = 0.75

    def __post_init__(self) -> None:
        if self.direction not in ("eastbound", "westbound"):
            raise ValueError(f"truck {self.id}: unknown direction {self.direction!r}")
        if not (self.speed > 0 and self.consumption > 0 and self.capacity > 0):
            raise ValueError(f"truck {self.id}: speed, consumption and capacity must be positive")
        if not self.max_charge_power > 0:
            raise ValueError(f"truck {self.id}: max_charge_power must be positive")
        if not 0 <= self.min_soc_fraction < 1:
            raise ValueError(f"truck {self.id}: min_soc_fraction must lie in [0, 1)")
        if not self.min_energy <= self.initial_energy <= self.capacity:
            raise ValueError(
                f"truck {self.id}: initial_energy {self.initial_energy} outside "
                f"[{self.min_energy}, {self.capacity}]"
            )
        if not self.deadline > self.entry_time:
            raise ValueError(f"truck {self.id}: deadline must be after entry_time")

    @property
    def min_energy(self) -> float:
        """Energy floor kappa * capacity."""
        return self.min_soc_fraction * self.capacity


@dataclass(frozen=True)
class Scenario:
    corridor_length: float
    stations: tuple[Station, ...]
    trucks: tuple[Truck, ...]
    seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "stations", tuple(self.stations))
        object.__setattr__(self, "trucks", tuple(sorted(self.trucks, key=lambda t: t.id)))
        if not self.stations:
            raise ValueError("scenario needs at least one station")
        for k, st in enumerate(self.stations):
            if st.id != k:
                raise ValueError(f"station ids must be 0..{len(self.stations) - 1} in corridor order")
            if not 0 <= st.position <= self.corridor_length:
                raise ValueError(f"station {st.id} lies outside the corridor")
        for a, b in zip(self.stations, self.stations[1:]):
            if not b.position > a.position:
                raise ValueError("station positions must be strictly increasing")
        if self.stations[0].position != 0 or self.stations[-1].position != self.corridor_length:
            raise ValueError("first and last stations must sit at the corridor ends")
        ids = [t.id for t in self.trucks]
        if len(set(ids)) != len(ids):
            raise ValueError("truck ids must be unique")
        for truck in self.trucks:
            usable = truck.capacity - truck.min_energy
            for a, b in zip(self.stations, self.stations[1:]):
                need = (b.position - a.position) * truck.consumption
                if need > usable + 1e-9:
                    first, second = (a.id, b.id) if truck.direction == "eastbound" else (b.id, a.id)
                    raise InfeasibleCorridorError(truck.id, first, second, need, usable)

    def truck(self, truck_id: int) -> Truck:
        for t in self.trucks:
            if t.id == truck_id:
                return t
        raise KeyError(f"unknown truck id {truck_id}")


@dataclass(frozen=True)
class VisitRecord:
    """One truck at one station of its route.

    No invariants are enforced here; the verifier must be able to inspect
    arbitrary (including corrupted) records.
    """

    station_id: int
    charging: bool
    resting: bool
    visited: bool
    charger_index: int | None
    arrival: float
    charge_start: float
    departure: float
    charge_duration: float
    occupation: float
    energy_added: float
    energy_on_arrival: float
    soc_before: float
    soc_after: float


@dataclass(frozen=True)
class Solution:
    itineraries: Mapping[int, tuple[VisitRecord, ...]]
    delayed: Mapping[int, bool]
    method: Method

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "itineraries", {k: tuple(v) for k, v in sorted(self.itineraries.items())}
        )
        object.__setattr__(self, "delayed", dict(sorted(self.delayed.items())))

    def charger_timelines(self) -> dict[tuple[int, int], list[tuple[float, float, int]]]:
        """Map (station, charger) to its sorted (start, end, truck) intervals."""
        out: dict[tuple[int, int], list[tuple[float, float, int]]] = {}
        for truck_id, visits in self.itineraries.items():
            for v in visits:
                if v.charging and v.charger_index is not None:
                    out.setdefault((v.station_id, v.charger_index), []).append(
                        (v.charge_start, v.departure, truck_id)
                    )
        return {k: sorted(v) for k, v in sorted(out.items())}

    def charged_energy(self, truck_id: int) -> float:
        return sum(v.energy_added for v in self.itineraries[truck_id])


COMPONENTS = ("charging", "operating", "battery", "delay")


@dataclass(frozen=True)
class CostBreakdown:
    charging: float = 0.0
    operating: float = 0.0
    battery: float = 0.0
    delay: float = 0.0
    scope: CostScope = "per-truck"

    @property
    def total(self) -> float:
        return self.charging + self.operating + self.battery + self.delay

    def __add__(self, other: CostBreakdown) -> CostBreakdown:
        return CostBreakdown(
            self.charging + other.charging,
            self.operating + other.operating,
            self.battery + other.battery,
            self.delay + other.delay,
            scope="aggregate",
        )

    def scaled(self, factor: float, scope: CostScope) -> CostBreakdown:
        return CostBreakdown(
            self.charging * factor,
            self.operating * factor,
            self.battery * factor,
            self.delay * factor,
            scope=scope,
        )

    def as_dict(self) -> dict[str, Any]:
        return {
            "charging": self.charging,
            "operating": self.operating,
            "battery": self.battery,
            "delay": self.delay,
            "total": self.total,
            "scope": self.scope,
        }


def waiting_time(visit: VisitRecord, station: Station) -> float:
    """Time between the post-overhead arrival and the charge start, >= 0."""
    return max(0.0, visit.charge_start - visit.arrival - station.visit_overhead * visit.visited)


# -- corridor geometry ------------------------------------------------------


def station_order(truck: Truck, scenario: Scenario) -> tuple[Station, ...]:
    """Stations in the order the truck meets them; first is its entry, last its exit."""
    if truck.direction == "eastbound":
        return scenario.stations
    return tuple(reversed(scenario.stations))


def _check_adjacent(truck: Truck, scenario: Scenario, i: int, j: int) -> float:
    if i == j:
        return 0.0
    order = [s.id for s in station_order(truck, scenario)]
    try:
        pos = order.index(i)
    except ValueError:
        raise ValueError(f"unknown station {i}") from None
    if pos + 1 >= len(order) or order[pos + 1] != j:
        raise ValueError(f"stations {i} and {j} are not consecutive on truck {truck.id}'s route")
    return abs(scenario.stations[j].position - scenario.stations[i].position)


def travel_time(truck: Truck, scenario: Scenario, i: int, j: int) -> float:
    """Driving time from station ``i`` to the next station ``j``."""
    return _check_adjacent(truck, scenario, i, j) / truck.speed


def travel_energy(truck: Truck, scenario: Scenario, i: int, j: int) -> float:
    """Energy drawn between station ``i`` and the next station ``j``."""
    return _check_adjacent(truck, scenario, i, j) * truck.consumption


def segment_distances(truck: Truck, scenario: Scenario) -> list[float]:
    order = station_order(truck, scenario)
    return [abs(b.position - a.position) for a, b in zip(order, order[1:])]


def route_energy(truck: Truck, scenario: Scenario) -> float:
    return scenario.corridor_length * truck.consumption


def required_charge(truck: Truck, scenario: Scenario) -> float:
    """Least total energy a truck must add to exit at its SoC floor."""
    return max(0.0, truck.min_energy + route_energy(truck, scenario) - truck.initial_energy)


def effective_power(truck: Truck, station: Station) -> float:
    return min(truck.max_charge_power, station.supplied_power)


# -- JSON -------------------------------------------------------------------


def _dump(payload: dict[str, Any], path: str | Path | None) -> str:
    text = json.dumps(payload, indent=2, allow_nan=False) + "\n"
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


def _check_header(data: Mapping[str, Any], kind: str) -> None:
    if data.get("kind") != kind:
        raise ValueError(f"expected a {kind} document, got kind={data.get('kind')!r}")
    if data.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(f"unsupported schema_version {data.get('schema_version')!r}")


def scenario_to_dict(scenario: Scenario, degradation: Mapping[str, Any] | None = None) -> dict[str, Any]:
    out: dict[str, Any] = {
        "schema_version": SCHEMA_VERSION,
        "kind": "scenario",
        "corridor_length": scenario.corridor_length,
        "seed": scenario.seed,
        "stations": [asdict(s) for s in scenario.stations],
        "trucks": [asdict(t) for t in scenario.trucks],
    }
    if degradation is not None:
        out["degradation"] = dict(degradation)
    return out


def scenario_from_dict(data: Mapping[str, Any]) -> Scenario:
    _check_header(data, "scenario")
    return Scenario(
        corridor_length=float(data["corridor_length"]),
        stations=tuple(Station(**s) for s in data["stations"]),
        trucks=tuple(Truck(**t) for t in data["trucks"]),
        seed=int(data["seed"]),
    )


def save_scenario(scenario: Scenario, path: str | Path | None = None,
                  degradation: Mapping[str, Any] | None = None) -> str:
    return _dump(scenario_to_dict(scenario, degradation), path)


def load_scenario_document(path: str | Path) -> dict[str, Any]:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def load_scenario(path: str | Path) -> Scenario:
    return scenario_from_dict(load_scenario_document(path))


def solution_to_dict(solution: Solution) -> dict[str, Any]:
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "solution",
        "method": solution.method,
        "delayed": {str(k): v for k, v in solution.delayed.items()},
        "itineraries": {
            str(k): [asdict(v) for v in visits] for k, visits in solution.itineraries.items()
        },
    }


def solution_from_dict(data: Mapping[str, Any]) -> Solution:
    _check_header(data, "solution")
    return Solution(
        itineraries={
            int(k): tuple(VisitRecord(**v) for v in visits)
            for k, visits in data["itineraries"].items()
        },
        delayed={int(k): bool(v) for k, v in data["delayed"].items()},
        method=data["method"],
    )


def save_solution(solution: Solution, path: str | Path | None = None) -> str:
    return _dump(solution_to_dict(solution), path)


def load_solution(path: str | Path) -> Solution:
    return solution_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def is_finite(values: Iterable[float]) -> bool:
    return all(math.isfinite(v) for v in values)


__all__ = [
    "CostBreakdown",
    "InfeasibleCorridorError",
    "Scenario",
    "Solution",
    "Station",
    "Truck",
    "VisitRecord",
    "effective_power",
    "load_scenario",
    "load_solution",
    "required_charge",
    "save_scenario",
    "save_solution",
    "segment_distances",
    "station_order",
    "travel_energy",
    "travel_time",
    "waiting_time",
]
