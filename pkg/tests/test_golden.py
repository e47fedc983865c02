"""Byte-level golden files for one scenario and its reference run.

Regenerate with ``ENROUTE_REGEN_GOLDEN=1 python3 -m pytest tests/test_golden.py``
after an intended format change, and review the diff.
"""

from __future__ import annotations

import os
from pathlib import Path

import pytest

from enroute.degradation import FIXTURE_MODEL
from enroute.domain import save_scenario, save_solution
from enroute.reporting import cost_table, emit_itinerary_chart, emit_occupancy_chart
from enroute.scenario import GenerationParams, generate
from enroute.simulate import simulate

GOLDEN = Path(__file__).parent / "golden"
REGEN = os.environ.get("ENROUTE_REGEN_GOLDEN") == "1"


def artifacts() -> dict[str, str]:
    sc = generate(GenerationParams(truck_count=10), seed=0)
    ref = simulate(sc)
    itinerary_svg, itinerary_csv = emit_itinerary_chart(ref, sc)
    occupancy_svg, _ = emit_occupancy_chart(ref, sc)
    return {
        "scenario_seed0.json": save_scenario(sc, None, FIXTURE_MODEL.to_dict()),
        "solution_ref_seed0.json": save_solution(ref),
        "cost_table_seed0.txt": cost_table([ref], sc, FIXTURE_MODEL).to_text(),
        "itinerary_ref_seed0.svg": itinerary_svg,
        "itinerary_ref_seed0.csv": itinerary_csv,
        "occupancy_ref_seed0.svg": occupancy_svg,
    }


@pytest.mark.parametrize("name", sorted(artifacts()))
def test_golden(name):
    text = artifacts()[name]
    path = GOLDEN / name
    if REGEN:
        path.write_text(text, encoding="utf-8", newline="\n")
    assert text == path.read_text(encoding="utf-8")


def test_two_runs_are_byte_identical():
    assert artifacts() == artifacts()
