"""Seeded generation of random corridor scenarios.

Random numbers come from numpy's PCG64 bit generator seeded with the scenario
seed.  For each truck, in id order, three draws are made: entry time, initial
SoC, then direction.  The same (params, seed) pair therefore always yields the
same scenario, on any platform numpy supports.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields
from typing import Any, Literal, Mapping

import numpy as np

from .domain import Scenario, Station, Truck, effective_power, required_charge

DeadlineBasis = Literal["nominal", "driving"]


@dataclass(frozen=True)
class GenerationParams:
    truck_count: int = 10
    entry_window: tuple[float, float] = (0.0, 12.0)
    initial_soc_range: tuple[float, float] = (0.25, 1.0)
    direction_split: float = 0.5
    corridor_length: float = 400.0
    station_count: int = 5
    chargers_per_station: int = 2
    speed: float = 85.0
    max_charge_power: float = 750.0
    supplied_power: float = 750.0
    capacity: float = 600.0
    consumption: float = 1.8
    min_soc_fraction: float = 0.1
    rest_duration: float = 0.75
    visit_overhead: float = 7 / 60
    charge_overhead: float = 5 / 60
    electricity_price: float = 0.3
    operating_rate: float = 30.0
    delay_penalty: float = 500.0
    battery_cost_per_kwh: float = 250.0
    deadline_margin: float = 0.25
    deadline_basis: DeadlineBasis = "nominal"

    def __post_init__(self) -> None:
        object.__setattr__(self, "entry_window", tuple(float(x) for x in self.entry_window))
        object.__setattr__(self, "initial_soc_range", tuple(float(x) for x in self.initial_soc_range))
        if self.truck_count < 0:
            raise ValueError("truck_count must be non-negative")
        for name in ("entry_window", "initial_soc_range"):
            lo, hi = getattr(self, name)
            if hi < lo:
                raise ValueError(f"{name} must be an interval (lo <= hi)")
        lo, hi = self.initial_soc_range
        if lo < self.min_soc_fraction or hi > 1.0:
            raise ValueError("initial_soc_range must lie within [min_soc_fraction, 1]")
        if not 0.0 <= self.direction_split <= 1.0:
            raise ValueError("direction_split is a probability")
        if self.station_count < 1 or (self.station_count == 1 and self.corridor_length != 0):
            raise ValueError("a corridor of positive length needs at least two stations")
        if self.deadline_margin < 0:
            raise ValueError("deadline_margin must be non-negative")
        if self.deadline_basis not in ("nominal", "driving"):
            raise ValueError(f"unknown deadline_basis {self.deadline_basis!r}")

    def to_dict(self) -> dict[str, Any]:
        out = asdict(self)
        out["entry_window"] = list(self.entry_window)
        out["initial_soc_range"] = list(self.initial_soc_range)
        return out

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any]) -> GenerationParams:
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown generation parameters: {sorted(unknown)}")
        return cls(**dict(data))


def build_stations(params: GenerationParams) -> tuple[Station, ...]:
    if params.station_count == 1:
        positions = [0.0]
    else:
        positions = np.linspace(0.0, params.corridor_length, params.station_count).tolist()
    return tuple(
        Station(
            id=k,
            position=float(p),
            charger_count=params.chargers_per_station,
            supplied_power=params.supplied_power,
            electricity_price=params.electricity_price,
            charge_overhead=params.charge_overhead,
            visit_overhead=params.visit_overhead,
        )
        for k, p in enumerate(positions)
    )


def nominal_traversal(truck: Truck, scenario: Scenario) -> float:
    """Driving time plus the truck's own minimum charging time and one rest stop.

    Overheads assume a single combined charge-and-rest stop.  The true
    standalone minimum never exceeds this by more than one extra set of
    overheads, so a positive margin keeps every deadline reachable alone.
    """
    drive = scenario.corridor_length / truck.speed
    need = required_charge(truck, scenario)
    power = min(effective_power(truck, s) for s in scenario.stations)
    visit = max(s.visit_overhead for s in scenario.stations)
    charge = max(s.charge_overhead for s in scenario.stations) if need > 0 else 0.0
    return drive + need / power + truck.rest_duration + visit + charge


def deadline_for(truck: Truck, scenario: Scenario, margin: float,
                 basis: DeadlineBasis = "driving") -> float:
    """Latest on-time exit: entry plus ``(1 + margin)`` times a traversal time.

    ``driving`` uses pure driving time over the corridor; ``nominal`` adds the
    truck's unavoidable charging and rest time (see :func:`nominal_traversal`).
    """
    if basis == "driving":
        base = scenario.corridor_length / truck.speed
    elif basis == "nominal":
        base = nominal_traversal(truck, scenario)
    else:
        raise ValueError(f"unknown deadline basis {basis!r}")
    return truck.entry_time + (1.0 + margin) * base


def generate(params: GenerationParams, seed: int) -> Scenario:
    rng = np.random.Generator(np.random.PCG64(seed))
    stations = build_stations(params)
    shell = Scenario(params.corridor_length, stations, (), seed)
    trucks = []
    for n in range(params.truck_count):
        entry = float(rng.uniform(*params.entry_window))
        soc = float(rng.uniform(*params.initial_soc_range))
        direction = "eastbound" if rng.random() < params.direction_split else "westbound"
        draft = Truck(
            id=n,
            direction=direction,
            entry_time=entry,
            initial_energy=soc * params.capacity,
            deadline=entry + 1.0,
            capacity=params.capacity,
            consumption=params.consumption,
            speed=params.speed,
            max_charge_power=params.max_charge_power,
            operating_rate=params.operating_rate,
            delay_penalty=params.delay_penalty,
            min_soc_fraction=params.min_soc_fraction,
            rest_duration=params.rest_duration,
        )
        deadline = deadline_for(draft, shell, params.deadline_margin, params.deadline_basis)
        trucks.append(Truck(**{**asdict(draft), "deadline": deadline}))
    return Scenario(params.corridor_length, stations, tuple(trucks), seed)
