from __future__ import annotations

import math
from dataclasses import replace

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import corridor, truck
from enroute.domain import Solution
from enroute.simulate import simulate
from enroute.verify import StructureError, check_feasibility, evaluate_cost, truck_cost

FIELDS = ("arrival", "charge_start", "departure", "charge_duration", "occupation",
          "energy_added", "energy_on_arrival", "soc_before", "soc_after")


def with_visit(sol: Solution, truck_id: int, p: int, **changes) -> Solution:
    its = dict(sol.itineraries)
    visits = list(its[truck_id])
    visits[p] = replace(visits[p], **changes)
    its[truck_id] = tuple(visits)
    return Solution(its, sol.delayed, sol.method)


@pytest.fixture
def shared_charger():
    trucks = (truck(0, initial_energy=200.0), truck(1, entry_time=0.1, initial_energy=200.0))
    sc = corridor(chargers=1, trucks=trucks)
    return sc, simulate(sc)


class TestFeasibility:
    def test_reference_passes(self, scenario10):
        report = check_feasibility(simulate(scenario10), scenario10)
        assert report.passed and report.violations == [] and report.worst == 0.0

    def test_overlap_flags_exactly_one_eq3a(self, shared_charger):
        sc, sol = shared_charger
        first = sol.itineraries[0][0]
        v = sol.itineraries[1][0]
        shift = v.charge_start - first.charge_start - 0.2
        bad = with_visit(sol, 1, 0, charge_start=v.charge_start - shift,
                         departure=v.departure - shift)
        report = check_feasibility(bad, sc)
        assert report.families()["eq3a"] == 1
        (overlap,) = [x for x in report.violations if x.family == "eq3a"]
        assert overlap.charger == 0 and overlap.station == 0

    def test_late_exit_without_flag(self):
        sc0 = corridor(trucks=(truck(initial_energy=600.0, deadline=20.0),))
        sol = simulate(sc0)
        exit_time = sol.itineraries[0][-1].departure
        sc = corridor(trucks=(truck(initial_energy=600.0, deadline=exit_time - 0.1),))
        report = check_feasibility(Solution(sol.itineraries, {0: False}, "reference"), sc)
        assert report.families() == {"eq4": 1}
        assert report.violations[0].magnitude == pytest.approx(0.1)

    def test_spurious_delay_flag(self, scenario10):
        sol = simulate(scenario10)
        flagged = Solution(sol.itineraries, {k: True for k in sol.delayed}, "reference")
        fams = check_feasibility(flagged, scenario10).families()
        assert set(fams) == {"eq4"}

    def test_reports_every_violation(self, shared_charger):
        sc, sol = shared_charger
        bad = with_visit(sol, 0, 2, energy_on_arrival=10.0)
        bad = with_visit(bad, 1, 1, resting=True)
        fams = check_feasibility(bad, sc).families()
        assert {"eq1a", "eq1b", "eq6", "eq2g"} <= set(fams)

    def test_missing_rest(self, shared_charger):
        sc, sol = shared_charger
        bad = with_visit(sol, 0, 0, resting=False)
        assert "eq2f" in check_feasibility(bad, sc).families()

    def test_invalid_charger_index(self, shared_charger):
        sc, sol = shared_charger
        bad = with_visit(sol, 0, 0, charger_index=3)
        assert "eq3b" in check_feasibility(bad, sc).families()

    def test_missing_truck_is_structural(self, shared_charger):
        sc, sol = shared_charger
        with pytest.raises(StructureError):
            check_feasibility(Solution({0: sol.itineraries[0]}, {0: False}, "reference"), sc)

    def test_wrong_station_order_is_structural(self, shared_charger):
        sc, sol = shared_charger
        its = dict(sol.itineraries)
        its[0] = tuple(reversed(its[0]))
        with pytest.raises(StructureError):
            check_feasibility(Solution(its, sol.delayed, "reference"), sc)

    def test_nan_is_reported_not_raised(self, shared_charger):
        sc, sol = shared_charger
        bad = with_visit(sol, 0, 1, energy_on_arrival=math.nan)
        report = check_feasibility(bad, sc)
        assert not report.passed and report.worst == math.inf
        assert report.as_dict()["worst"] == "inf"

    @given(st.sampled_from(FIELDS), st.integers(0, 4), st.integers(0, 1),
           st.one_of(st.floats(allow_nan=True, allow_infinity=True), st.none(), st.text(max_size=3)))
    def test_total(self, field, p, n, value):
        trucks = (truck(0, initial_energy=200.0), truck(1, entry_time=0.1, initial_energy=200.0))
        sc = corridor(chargers=1, trucks=trucks)
        bad = with_visit(simulate(sc), n, p, **{field: value})
        report = check_feasibility(bad, sc)
        assert isinstance(report.passed, bool)

    def test_tolerance(self, shared_charger):
        sc, sol = shared_charger
        v = sol.itineraries[0][4]
        bad = with_visit(sol, 0, 4, departure=v.departure + 1e-7)
        assert check_feasibility(bad, sc).passed
        assert not check_feasibility(bad, sc, tolerance=1e-9).passed


class TestCost:
    def test_charging_cost(self, fixture_model):
        t = truck(initial_energy=330.0)
        sc = corridor(trucks=(t,))
        sol = simulate(sc)
        assert sol.charged_energy(0) == pytest.approx(450.0)
        assert truck_cost(t, sol.itineraries[0], sc, fixture_model).charging == pytest.approx(135.0)

    def test_operating_cost(self, fixture_model):
        t = truck(entry_time=1.0, deadline=12.0)
        sc = corridor(trucks=(t,))
        visits = list(simulate(sc).itineraries[0])
        visits[-1] = replace(visits[-1], departure=6.5)
        assert truck_cost(t, tuple(visits), sc, fixture_model).operating == pytest.approx(165.0)

    def test_no_delay(self, scenario10, fixture_model):
        report = evaluate_cost(simulate(scenario10), scenario10, fixture_model)
        assert all(cb.delay == 0 for cb in report.per_truck.values())

    def test_delay_recomputed_from_times(self, fixture_model):
        sc0 = corridor(trucks=(truck(initial_energy=600.0, deadline=20.0),))
        sol = simulate(sc0)
        late = corridor(trucks=(truck(initial_energy=600.0, deadline=1.0),))
        assert evaluate_cost(sol, late, fixture_model).aggregate.delay == 500.0

    def test_exact_and_pwl_close(self, scenario10, fixture_model):
        sol = simulate(scenario10)
        exact = evaluate_cost(sol, scenario10, fixture_model, "exact").aggregate
        pwl = evaluate_cost(sol, scenario10, fixture_model, "pwl").aggregate
        assert exact.charging == pwl.charging and exact.operating == pwl.operating
        assert pwl.battery == pytest.approx(exact.battery, rel=0.01)

    def test_mean_and_aggregate(self, scenario10, fixture_model):
        report = evaluate_cost(simulate(scenario10), scenario10, fixture_model)
        assert report.mean.total * 10 == pytest.approx(report.aggregate.total)

    def test_unknown_mode(self, scenario10, fixture_model):
        with pytest.raises(ValueError):
            evaluate_cost(simulate(scenario10), scenario10, fixture_model, "approx")
