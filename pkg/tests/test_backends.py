from __future__ import annotations

import pytest

from conftest import corridor, truck
from enroute.degradation import DegradationModel
from enroute.mip import BackendUnavailable, CbcBackend, HighsBackend, Limits, build_model, make_backend, solve
from enroute.mip.backends import RawResult
from enroute.mip.model import MipModel
from enroute.verify import check_feasibility

SMALL = DegradationModel(5000.0, 1.5, 2.0, 150_000.0, breakpoint_count=9)
cbc_missing = not CbcBackend().available()


def knapsack() -> MipModel:
    m = MipModel()
    xs = [m.add_var("x", (k,), "B") for k in range(4)]
    m.add_constraint("cap", {x: w for x, w in zip(xs, (3, 4, 5, 6))}, "<=", 10)
    m.objective = {x: -v for x, v in zip(xs, (4, 5, 6, 7))}
    return m


def two_trucks():
    trucks = (truck(0, initial_energy=200.0), truck(1, "westbound", entry_time=0.3, initial_energy=260.0))
    return corridor(chargers=1, trucks=trucks)


class TestFactory:
    def test_known(self):
        assert make_backend("highs").name == "highs"
        assert make_backend("cbc").name == "cbc"

    def test_unknown(self):
        with pytest.raises(ValueError, match="choose from"):
            make_backend("gurobi")

    def test_missing_cbc_is_reported(self):
        backend = CbcBackend(executable="/nonexistent/cbc")
        assert not backend.available()
        with pytest.raises(BackendUnavailable):
            backend.solve(knapsack(), Limits())


class TestHighs:
    def test_knapsack(self):
        raw = HighsBackend().solve(knapsack(), Limits(rel_gap=0.0))
        assert raw.status == "optimal"
        assert raw.objective == pytest.approx(-12.0)
        assert [round(x) for x in raw.values] == [1, 0, 0, 1] or [round(x) for x in raw.values] == [0, 1, 0, 1]

    def test_refuses_sos_groups(self, fixture_model):
        model = build_model(corridor(trucks=(truck(),)), fixture_model)
        with pytest.raises(ValueError, match="SOS2"):
            HighsBackend().solve(model, Limits())

    def test_warm_start_flag(self):
        raw = HighsBackend().solve(knapsack(), Limits(), start=[1, 0, 0, 1])
        assert raw.warm_start == "accepted"

    def test_infeasible(self):
        m = knapsack()
        m.add_constraint("bad", {0: 1.0}, ">=", 2)
        assert HighsBackend().solve(m, Limits()).status == "infeasible"


@pytest.mark.skipif(cbc_missing, reason="no CBC executable")
class TestCbc:
    def test_knapsack(self):
        raw = CbcBackend().solve(knapsack(), Limits(rel_gap=0.0))
        assert raw.status == "optimal"
        assert raw.objective == pytest.approx(-12.0)

    def test_keeps_files(self, tmp_path):
        CbcBackend(keep_files=tmp_path).solve(knapsack(), Limits(), start=[1, 0, 0, 1])
        assert (tmp_path / "model.mps").exists() and (tmp_path / "start.mst").exists()

    def test_matches_highs(self):
        sc = two_trucks()
        model = build_model(sc, SMALL)
        tight = Limits(time_limit=120, rel_gap=1e-6)
        sol_h, rep_h = solve(model, HighsBackend(), tight)
        sol_c, rep_c = solve(model, CbcBackend(), tight, encoding="incremental")
        assert rep_c.status == "optimal"
        assert check_feasibility(sol_c, sc).passed
        assert rep_c.objective == pytest.approx(rep_h.objective, rel=1e-5)

    def test_parses_stopped_without_point(self):
        raw = CbcBackend()._read(knapsack(), "Stopped on time - objective value 1e+50\n",
                                 "No feasible solution found", 1.0, "none")
        assert raw.status == "time-limit" and raw.values is None


def test_raw_result_defaults():
    raw = RawResult("optimal", [], 0.0, 0.0, 0.0)
    assert raw.warm_start == "none" and raw.extra == {}
