"""Discrete-event simulation of the uncoordinated (reference) strategy.

Every truck looks only at its own battery: it charges when the next segment
would take it below the SoC floor, and then charges enough to leave the
corridor exactly at the floor (or to full, with the remainder spilling to a
later station).  It rests once, at its longest charging stop, and queues FIFO
when every charger at that station is busy.  Charging decisions depend only on
energy, so they are planned before the event loop runs; the loop resolves the
timing and queueing.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Sequence

from .domain import (
    InfeasibleCorridorError,
    Scenario,
    Solution,
    Station,
    Truck,
    VisitRecord,
    effective_power,
    segment_distances,
    station_order,
)

_EPS = 1e-9


class EventKind(IntEnum):
    ARRIVE = 0
    READY = 1
    RELEASE = 2


@dataclass(order=True)
class Event:
    time: float
    truck_id: int
    kind: EventKind
    position: int = field(compare=False)
    charger: int = field(default=-1, compare=False)


class EventQueue:
    """Time-ordered events; ties fall back to (truck id, event kind)."""

    def __init__(self) -> None:
        self._heap: list[Event] = []
        self._now = float("-inf")

    def push(self, event: Event) -> None:
        if event.time < self._now:
            raise RuntimeError(f"event at {event.time} scheduled in the past ({self._now})")
        heapq.heappush(self._heap, event)

    def pop(self) -> Event:
        event = heapq.heappop(self._heap)
        self._now = event.time
        return event

    def __bool__(self) -> bool:
        return bool(self._heap)


@dataclass
class ChargerState:
    """Chargers and FIFO wait queue of one station."""

    station: Station
    busy_until: list[float] = field(default_factory=list)
    occupant: list[int | None] = field(default_factory=list)
    queue: list[tuple[float, int, int]] = field(default_factory=list)

    def __post_init__(self) -> None:
        self.busy_until = [0.0] * self.station.charger_count
        self.occupant = [None] * self.station.charger_count

    def free_charger(self) -> int | None:
        for k, who in enumerate(self.occupant):
            if who is None:
                return k
        return None

    def in_use(self) -> int:
        return sum(who is not None for who in self.occupant)


@dataclass
class _Stop:
    energy_on_arrival: float
    energy_added: float
    resting: bool = False
    arrival: float = 0.0
    charge_start: float = 0.0
    departure: float = 0.0
    charger: int | None = None

    @property
    def charging(self) -> bool:
        return self.energy_added > 0

    @property
    def visited(self) -> bool:
        return self.charging or self.resting


def plan_greedy_charge(truck: Truck, energy_on_arrival: float,
                       remaining_route: Sequence[float]) -> float:
    """Energy to add at the current station.

    ``remaining_route`` lists the segment energies from here to the exit.
    """
    floor = truck.min_energy
    if energy_on_arrival < floor - 1e-6:
        raise ValueError(f"truck {truck.id} arrived below its SoC floor")
    if not remaining_route or energy_on_arrival - remaining_route[0] >= floor - _EPS:
        return 0.0
    needed = floor + sum(remaining_route) - energy_on_arrival
    amount = min(truck.capacity - energy_on_arrival, needed)
    if energy_on_arrival + amount - remaining_route[0] < floor - 1e-6:
        raise InfeasibleCorridorError(
            truck.id, -1, -1, remaining_route[0], truck.capacity - floor
        )
    return amount


def plan_stops(truck: Truck, scenario: Scenario) -> list[_Stop]:
    """Energy plan and rest placement of one truck, before any queueing."""
    order = station_order(truck, scenario)
    seg_energy = [d * truck.consumption for d in segment_distances(truck, scenario)]
    stops = []
    energy = truck.initial_energy
    for p in range(len(order)):
        added = plan_greedy_charge(truck, energy, seg_energy[p:])
        stops.append(_Stop(energy, added))
        if p < len(seg_energy):
            energy = energy - seg_energy[p] + added
    charging = [p for p, s in enumerate(stops) if s.charging]
    if charging:
        rest_at = max(charging, key=lambda p: (stops[p].energy_added, -p))
    else:
        half = scenario.corridor_length / 2
        start = order[0].position
        rest_at = min(range(len(order)), key=lambda p: (abs(abs(order[p].position - start) - half), p))
    stops[rest_at].resting = True
    return stops


def simulate(scenario: Scenario) -> Solution:
    plans = {t.id: plan_stops(t, scenario) for t in scenario.trucks}
    orders = {t.id: station_order(t, scenario) for t in scenario.trucks}
    trucks = {t.id: t for t in scenario.trucks}
    chargers = {s.id: ChargerState(s) for s in scenario.stations}
    events = EventQueue()

    def occupation(truck: Truck, stop: _Stop, station: Station) -> float:
        tau = stop.energy_added / effective_power(truck, station)
        return max(tau, truck.rest_duration if stop.resting else 0.0)

    def leave(truck: Truck, p: int, when: float) -> None:
        stop = plans[truck.id][p]
        stop.departure = when
        order = orders[truck.id]
        if p + 1 < len(order):
            hop = abs(order[p + 1].position - order[p].position) / truck.speed
            events.push(Event(when + hop, truck.id, EventKind.ARRIVE, p + 1))

    def dispatch(state: ChargerState, now: float) -> None:
        while state.queue:
            k = state.free_charger()
            if k is None:
                return
            _, truck_id, p = heapq.heappop(state.queue)
            truck = trucks[truck_id]
            stop = plans[truck_id][p]
            stop.charge_start = now
            stop.charger = k
            end = now + occupation(truck, stop, state.station) + state.station.charge_overhead
            state.occupant[k] = truck_id
            state.busy_until[k] = end
            events.push(Event(end, truck_id, EventKind.RELEASE, p, k))
            leave(truck, p, end)

    for truck in scenario.trucks:
        events.push(Event(truck.entry_time, truck.id, EventKind.ARRIVE, 0))

    while events:
        ev = events.pop()
        truck = trucks[ev.truck_id]
        station = orders[truck.id][ev.position]
        stop = plans[truck.id][ev.position]
        state = chargers[station.id]
        if ev.kind is EventKind.ARRIVE:
            stop.arrival = ev.time
            if stop.visited:
                events.push(Event(ev.time + station.visit_overhead, truck.id, EventKind.READY, ev.position))
            else:
                stop.charge_start = ev.time
                leave(truck, ev.position, ev.time)
        elif ev.kind is EventKind.READY:
            if stop.charging:
                heapq.heappush(state.queue, (stop.arrival, truck.id, ev.position))
                dispatch(state, ev.time)
            else:
                stop.charge_start = ev.time
                leave(truck, ev.position, ev.time + occupation(truck, stop, station))
        else:
            state.occupant[ev.charger] = None
            dispatch(state, ev.time)
        if state.in_use() > station.charger_count:
            raise RuntimeError(f"station {station.id} over capacity")

    itineraries = {}
    delayed = {}
    for truck in scenario.trucks:
        visits = []
        for station, stop in zip(orders[truck.id], plans[truck.id]):
            power = effective_power(truck, station)
            visits.append(VisitRecord(
                station_id=station.id,
                charging=stop.charging,
                resting=stop.resting,
                visited=stop.visited,
                charger_index=stop.charger,
                arrival=stop.arrival,
                charge_start=stop.charge_start,
                departure=stop.departure,
                charge_duration=stop.energy_added / power,
                occupation=occupation(truck, stop, station),
                energy_added=stop.energy_added,
                energy_on_arrival=stop.energy_on_arrival,
                soc_before=stop.energy_on_arrival / truck.capacity,
                soc_after=(stop.energy_on_arrival + stop.energy_added) / truck.capacity,
            ))
        itineraries[truck.id] = tuple(visits)
        delayed[truck.id] = visits[-1].departure > truck.deadline
    return Solution(itineraries, delayed, "reference")
