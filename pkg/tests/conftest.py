from __future__ import annotations

import pytest
from hypothesis import settings

from enroute.degradation import FIXTURE_MODEL, DegradationModel
from enroute.domain import Scenario, Station, Truck
from enroute.scenario import GenerationParams, generate

settings.register_profile("repo", deadline=None, max_examples=60)
settings.load_profile("repo")


def corridor(n_stations: int = 5, chargers: int = 2, length: float = 400.0,
             trucks: tuple[Truck, ...] = (), **station_kw) -> Scenario:
    step = length / (n_stations - 1) if n_stations > 1 else 0.0
    positions = [k * step for k in range(n_stations - 1)] + [length]
    stations = tuple(
        Station(id=k, position=p, charger_count=chargers, **station_kw)
        for k, p in enumerate(positions)
    )
    return Scenario(length, stations, trucks, seed=0)


def truck(id: int = 0, direction: str = "eastbound", entry_time: float = 0.0,
          initial_energy: float = 600.0, deadline: float = 10.0, **kw) -> Truck:
    return Truck(id=id, direction=direction, entry_time=entry_time,
                 initial_energy=initial_energy, deadline=deadline, **kw)


@pytest.fixture
def fixture_model() -> DegradationModel:
    return FIXTURE_MODEL


@pytest.fixture
def direct_model() -> DegradationModel:
    """Fixture coefficients evaluated on the SoC itself; charge costs come out negative."""
    return DegradationModel(5000.0, 1.5, 2.0, 150_000.0, soc_convention="direct", strict=False)


@pytest.fixture
def scenario10() -> Scenario:
    return generate(GenerationParams(truck_count=10), seed=3)


@pytest.fixture
def highs():
    from enroute.mip import HighsBackend

    return HighsBackend()
