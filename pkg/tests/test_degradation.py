from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from enroute.degradation import (
    FIXTURE_MODEL,
    DegradationModel,
    PwlTable,
    breakpoint_socs,
    charge_event_cost,
    cycle_life,
    max_relative_error,
    pwl_eval,
    unit_cost,
    unit_cost_array,
)

socs = st.floats(0.0, 1.0, allow_nan=False)


def closed_form_cost(u: float, cap=150_000.0, b0=5000.0, b1=1.5, b2=2.0) -> float:
    return cap / (b0 * u ** (-b1) * math.exp(b2 * (1 - u)))


class TestCycleLife:
    def test_unit_argument_gives_beta0(self, direct_model):
        assert cycle_life(1.0, direct_model) == pytest.approx(5000.0, rel=1e-15)

    def test_inverted_full_depth_gives_beta0(self, fixture_model):
        assert cycle_life(0.0, fixture_model) == pytest.approx(5000.0, rel=1e-15)

    def test_half_soc_direct(self, direct_model):
        expected = 5000 * 0.5 ** (-1.5) * math.e
        assert cycle_life(0.5, direct_model) == pytest.approx(expected, rel=1e-12)

    @pytest.mark.parametrize("soc", [0.05, 0.3, 0.77, 1.0])
    def test_degenerate_coefficients_are_constant(self, soc):
        flat = DegradationModel(1234.0, 0.0, 0.0, 1.0)
        assert cycle_life(soc, flat) == pytest.approx(1234.0)

    def test_argument_below_floor_is_clipped(self, fixture_model):
        full = cycle_life(1.0, fixture_model)
        assert full == pytest.approx(cycle_life(0.99, fixture_model), rel=1e-12)
        assert cycle_life(0.999, fixture_model) == full


class TestUnitCost:
    def test_thirty_euro_at_unit_argument(self, direct_model):
        assert unit_cost(1.0, direct_model) == pytest.approx(30.0)

    def test_zero_capital(self):
        free = DegradationModel(5000.0, 1.5, 2.0, 0.0)
        assert all(unit_cost(s, free) == 0.0 for s in np.linspace(0, 1, 11))

    @given(socs, socs)
    def test_nondecreasing_in_wear_argument(self, a, b):
        # inverted convention: wear grows as the SoC falls
        lo, hi = sorted((a, b))
        assert unit_cost(lo, FIXTURE_MODEL) >= unit_cost(hi, FIXTURE_MODEL) - 1e-12

    def test_vectorised_matches_scalar(self, fixture_model):
        xs = np.linspace(0, 1, 101)
        scalar = [unit_cost(float(x), fixture_model) for x in xs]
        assert np.allclose(unit_cost_array(xs, fixture_model), scalar, rtol=1e-14)


class TestChargeEventCost:
    def test_no_charge_costs_nothing(self, fixture_model):
        assert charge_event_cost(0.42, 0.42, fixture_model) == 0.0

    def test_inverted_example(self, fixture_model):
        got = charge_event_cost(0.4, 0.9, fixture_model)
        expected = closed_form_cost(0.6) - closed_form_cost(0.1)
        assert got == pytest.approx(expected, rel=1e-12)
        assert got > 0

    def test_discharge_is_rejected(self, fixture_model):
        with pytest.raises(ValueError, match="below soc_before"):
            charge_event_cost(0.8, 0.5, fixture_model)

    def test_sweep_telescopes(self, fixture_model):
        whole = charge_event_cost(0.1, 0.9, fixture_model)
        parts = charge_event_cost(0.1, 0.5, fixture_model) + charge_event_cost(0.5, 0.9, fixture_model)
        assert parts == pytest.approx(whole, rel=1e-12)

    @given(socs, socs, socs)
    def test_telescoping_property(self, a, b, c):
        x1, x2, x3 = sorted((a, b, c))
        whole = charge_event_cost(x1, x3, FIXTURE_MODEL)
        split = charge_event_cost(x1, x2, FIXTURE_MODEL) + charge_event_cost(x2, x3, FIXTURE_MODEL)
        assert abs(whole - split) <= 1e-10 * max(abs(whole), 1e-12)

    @given(socs, socs)
    def test_non_negative_under_default_convention(self, a, b):
        lo, hi = sorted((a, b))
        assert charge_event_cost(lo, hi, FIXTURE_MODEL) >= 0.0

    def test_direct_convention_fails_the_sanity_check(self):
        with pytest.raises(ValueError, match="negative cost"):
            DegradationModel(5000.0, 1.5, 2.0, 150_000.0, soc_convention="direct")


class TestModelValidation:
    @pytest.mark.parametrize("kw", [
        {"beta0": 0.0}, {"beta1": -1.0}, {"beta2": -0.1}, {"capital_cost": -5.0},
        {"breakpoint_count": 1}, {"soc_convention": "sideways"}, {"clip_floor": 0.0},
    ])
    def test_rejects(self, kw):
        base = dict(beta0=5000.0, beta1=1.5, beta2=2.0, capital_cost=1.0)
        with pytest.raises(ValueError):
            DegradationModel(**{**base, **kw})

    def test_dict_round_trip(self, fixture_model):
        assert DegradationModel.from_dict(fixture_model.to_dict()) == fixture_model

    def test_for_capacity(self, fixture_model):
        assert fixture_model.for_capacity(400.0, 250.0).capital_cost == 100_000.0


class TestPwl:
    def test_table_spans_floor_to_one(self, fixture_model):
        t = fixture_model.table
        assert len(t) == 33
        assert t.span == (pytest.approx(0.01), 1.0)

    def test_exact_at_breakpoints(self, fixture_model):
        t = fixture_model.table
        for s, v in zip(t.socs, t.values):
            assert pwl_eval(t, s) == v
            assert v == pytest.approx(unit_cost(s, fixture_model), rel=1e-14)

    def test_midpoint_is_mean(self, fixture_model):
        t = fixture_model.table
        for r in range(len(t) - 1):
            mid = 0.5 * (t.socs[r] + t.socs[r + 1])
            assert pwl_eval(t, mid) == pytest.approx(0.5 * (t.values[r] + t.values[r + 1]), rel=1e-12)

    def test_clamped_outside_span(self):
        t = PwlTable((0.2, 0.6, 1.0), (3.0, 2.0, 0.0))
        assert pwl_eval(t, 0.0) == 3.0
        assert pwl_eval(t, 1.5) == 0.0

    @given(st.floats(0.0, 1.0))
    def test_weights_are_adjacent_and_sum_to_one(self, soc):
        w = FIXTURE_MODEL.table.weights(soc)
        assert 1 <= len(w) <= 2
        assert sum(w.values()) == pytest.approx(1.0)
        if len(w) == 2:
            a, b = sorted(w)
            assert b == a + 1

    def test_accuracy_at_33_breakpoints(self, fixture_model):
        assert max_relative_error(fixture_model) <= 0.01

    def test_more_breakpoints_help(self):
        coarse = DegradationModel(5000.0, 1.5, 2.0, 150_000.0, breakpoint_count=17)
        fine = DegradationModel(5000.0, 1.5, 2.0, 150_000.0, breakpoint_count=65)
        assert max_relative_error(fine) <= max_relative_error(coarse)

    def test_uniform_spacing_misses_the_tolerance(self):
        # uniform spacing cannot follow the steep end of the curve near full charge
        uniform = DegradationModel(5000.0, 1.5, 2.0, 150_000.0, placement="uniform")
        assert max_relative_error(uniform) > 0.01
        assert np.allclose(np.diff(breakpoint_socs(uniform)), (1 - 0.01) / 32)

    def test_fixture_table_is_convex(self, fixture_model):
        assert fixture_model.table.is_convex()
        assert not fixture_model.table.is_concave()

    def test_csv_export(self, fixture_model, tmp_path):
        text = fixture_model.table.to_csv(tmp_path / "pwl.csv")
        lines = text.strip().splitlines()
        assert lines[0] == "soc,value" and len(lines) == 34
        assert (tmp_path / "pwl.csv").read_text() == text

    @given(st.integers(2, 80))
    def test_breakpoints_strictly_increasing(self, R):
        assume(R >= 2)
        model = DegradationModel(5000.0, 1.5, 2.0, 150_000.0, breakpoint_count=R)
        xs = breakpoint_socs(model)
        assert len(xs) == R
        assert np.all(np.diff(xs) > 0)
