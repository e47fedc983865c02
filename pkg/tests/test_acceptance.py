"""Acceptance gate: one test per criterion, each printing a single PASS/FAIL line.

The solver-backed criteria share two seeded suites built once per module:
50 scenarios at 10 trucks for feasibility, and 20 scenarios cycling through
10..15 trucks for the cost-direction checks.
"""

from __future__ import annotations

import numpy as np
import pytest

from conftest import corridor, truck
from enroute.degradation import FIXTURE_MODEL, DegradationModel, charge_event_cost, pwl_eval
from enroute.domain import save_scenario, save_solution
from enroute.mip import BuildOptions, HighsBackend, Limits, build_model, solve, warm_start_from
from enroute.scenario import GenerationParams, generate
from enroute.simulate import simulate
from enroute.verify import check_feasibility, evaluate_cost

pytestmark = pytest.mark.slow

LIMITS = Limits(time_limit=60.0, rel_gap=0.01)


def announce(capsys, number: int, ok: bool, detail: str) -> None:
    with capsys.disabled():
        print(f"\nACCEPTANCE {number:>2}: {'PASS' if ok else 'FAIL'} - {detail}")


def run_cases(scenarios, limits=LIMITS):
    out = []
    backend = HighsBackend()
    for sc in scenarios:
        ref = simulate(sc)
        model = build_model(sc, FIXTURE_MODEL)
        sol, rep = solve(model, backend, limits, warm_start_from(model, ref))
        out.append((sc, ref, sol, rep))
    return out


def run_suite(cases):
    return run_cases(generate(GenerationParams(truck_count=n), seed) for n, seed in cases)


@pytest.fixture(scope="module")
def feasibility_suite():
    return run_suite([(10, seed) for seed in range(50)])


@pytest.fixture(scope="module")
def dominance_suite():
    return run_suite([(10 + k % 6, 1000 + k) for k in range(20)])


def pwl_costs(sc, ref, sol):
    r = evaluate_cost(ref, sc, FIXTURE_MODEL, "pwl")
    c = evaluate_cost(sol, sc, FIXTURE_MODEL, "pwl")
    return r, c


def test_1_oracle_feasibility(feasibility_suite, capsys):
    bad, slowest = [], 0.0
    for sc, ref, sol, rep in feasibility_suite:
        slowest = max(slowest, rep.wall_time)
        if sol is None:
            bad.append((sc.seed, "no solution", rep.status))
            continue
        for s in (ref, sol):
            report = check_feasibility(s, sc, 1e-6)
            if not report.passed:
                bad.append((sc.seed, s.method, report.families()))
    ok = not bad and slowest <= 60.0
    announce(capsys, 1, ok, f"{len(feasibility_suite)} scenarios x 2 methods feasible at 1e-6, "
                            f"slowest solve {slowest:.1f} s, failures {bad}")
    assert ok


def test_2_dominance(dominance_suite, capsys):
    failures, savings = [], []
    for sc, ref, sol, rep in dominance_suite:
        r, c = pwl_costs(sc, ref, sol)
        if c.aggregate.total > r.aggregate.total * (1 + rep.gap) + 1e-6:
            failures.append(sc.seed)
        savings.append(1 - c.aggregate.total / r.aggregate.total)
    ok = not failures
    announce(capsys, 2, ok, f"coord <= ref x (1 + gap) on {len(dominance_suite) - len(failures)}/"
                            f"{len(dominance_suite)}; total savings {min(savings):.1%}..{max(savings):.1%}")
    assert ok


def test_3_energy_parity(dominance_suite, capsys):
    worst = 0.0
    for sc, ref, sol, _ in dominance_suite:
        for t in sc.trucks:
            a, b = ref.charged_energy(t.id), sol.charged_energy(t.id)
            if a > 0 and b > 0:
                worst = max(worst, abs(b - a) / a)
    with pytest.raises(ValueError):
        DegradationModel(5000.0, 1.5, 2.0, 150_000.0, soc_convention="direct")
    ok = worst <= 1e-3
    announce(capsys, 3, ok, f"worst per-truck relative energy difference {worst:.2e}; "
                            "misconfigured convention rejected at construction")
    assert ok


def queued_pair():
    # two trucks reach the single charger at station 1 together; the second one
    # queues past its deadline unless it splits its charge over two stations
    trucks = (truck(0, initial_energy=250.0, deadline=6.1), truck(1, initial_energy=250.0, deadline=6.1))
    (out,) = run_cases([corridor(chargers=1, trucks=trucks)], Limits(rel_gap=1e-6))
    return out


def test_4_delay_direction(dominance_suite, capsys):
    failures, delayed = [], 0
    for sc, ref, sol, _ in dominance_suite:
        r, c = pwl_costs(sc, ref, sol)
        if c.mean.delay > r.mean.delay + 1e-9:
            failures.append(sc.seed)
        if r.mean.delay > 0:
            delayed += 1
            if c.mean.delay > 0.2 * r.mean.delay + 1e-9:
                failures.append(sc.seed)
    # the seeded suite rarely queues a truck past its deadline, so the 20% clause is
    # also exercised on an instance where the reference queue forces one delay
    sc, ref, sol, _ = queued_pair()
    r, c = pwl_costs(sc, ref, sol)
    forced_ok = r.mean.delay > 0 and c.mean.delay <= 0.2 * r.mean.delay
    ok = not failures and forced_ok
    announce(capsys, 4, ok, f"coord delay <= ref delay on all {len(dominance_suite)}; "
                            f"{delayed} seeded scenarios with reference delay; queued instance "
                            f"delay/truck {r.mean.delay:.0f} -> {c.mean.delay:.0f}; failures {failures}")
    assert ok


def test_5_battery_direction(dominance_suite, capsys):
    checked, failures, reductions = 0, [], []
    for sc, ref, sol, _ in dominance_suite:
        deep = any(v.soc_after - v.soc_before >= 0.5 for vs in ref.itineraries.values() for v in vs)
        if not deep:
            continue
        checked += 1
        r, c = pwl_costs(sc, ref, sol)
        if c.aggregate.battery > r.aggregate.battery + 1e-9:
            failures.append(sc.seed)
        reductions.append(1 - c.aggregate.battery / r.aggregate.battery)
    ok = not failures and checked > 0
    announce(capsys, 5, ok, f"coord battery <= ref battery on {checked - len(failures)}/{checked} "
                            f"deep-cycle scenarios; mean reduction {np.mean(reductions):.0%}")
    assert ok


def oracle_unit_cost(soc: np.ndarray) -> np.ndarray:
    # wear argument 1 - soc, clipped at the model floor
    u = np.maximum(1.0 - soc, 0.01)
    return 150_000.0 / (5000.0 * u ** (-1.5) * np.exp(2.0 * (1.0 - u)))


def pwl_error(model: DegradationModel, xs: np.ndarray) -> float:
    approx = np.array([pwl_eval(model.table, float(x)) for x in xs])
    exact = oracle_unit_cost(xs)
    return float(np.max(np.abs(approx - exact) / exact))


def test_6_pwl_accuracy(capsys):
    xs = np.linspace(0.1, 1.0, 10_000)
    e33 = pwl_error(FIXTURE_MODEL, xs)
    e17 = pwl_error(DegradationModel(5000.0, 1.5, 2.0, 150_000.0, breakpoint_count=17), xs)
    e65 = pwl_error(DegradationModel(5000.0, 1.5, 2.0, 150_000.0, breakpoint_count=65), xs)
    ok = e33 <= 0.01 and e65 <= e17
    announce(capsys, 6, ok, f"max relative error R=33 {e33:.3%}; R=17 {e17:.3%}, R=65 {e65:.3%}")
    assert ok


def test_7_telescoping(capsys):
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(5000):
        x1, x2, x3 = np.sort(rng.uniform(0.0, 1.0, 3))
        whole = charge_event_cost(x1, x3, FIXTURE_MODEL)
        split = charge_event_cost(x1, x2, FIXTURE_MODEL) + charge_event_cost(x2, x3, FIXTURE_MODEL)
        if whole > 0:
            worst = max(worst, abs(whole - split) / whole)
    ok = worst <= 1e-10
    announce(capsys, 7, ok, f"5000 random triples, worst relative residual {worst:.1e}")
    assert ok


def test_8_single_truck_closed_form(capsys):
    t = truck(initial_energy=600.0, consumption=1.0)
    sc = corridor(trucks=(t,))
    _, rep = solve(build_model(sc, FIXTURE_MODEL), HighsBackend(), Limits(rel_gap=1e-9))
    expected = 30.0 * (400 / 85 + 0.75 + 7 / 60)
    rel = abs(rep.objective - expected) / expected
    ok = rep.status == "optimal" and rel <= 1e-4
    announce(capsys, 8, ok, f"objective {rep.objective:.6f} vs closed form {expected:.6f} (rel {rel:.1e})")
    assert ok


def test_9_model_census(capsys):
    model_deg = DegradationModel(5000.0, 1.5, 2.0, 150_000.0, breakpoint_count=9)
    R = model_deg.breakpoint_count
    mismatches = []
    triples = [(n, s, k) for n in (1, 2, 5) for s in (2, 5) for k in (1, 2)]
    for n, s, k in triples:
        trucks = tuple(truck(j, "eastbound" if j % 2 == 0 else "westbound", entry_time=0.2 * j,
                             initial_energy=400.0, deadline=0.2 * j + 12) for j in range(n))
        sc = corridor(s, k, 100.0 * (s - 1), trucks)
        got = build_model(sc, model_deg, BuildOptions(prune_pairs=False)).census()
        K = s * k
        ordering = n * (n - 1) // 2 * K
        expected = {
            "binary": n * (3 * s + K) + n + ordering,
            "continuous": n * s * (9 + 2 * R),
            "constraints": n * (2 * (s - 1) + 16 * s + 2) + 2 * ordering,
            "sos2_groups": 2 * n * s,
        }
        for key, value in expected.items():
            if got[key] != value:
                mismatches.append(((n, s, k), key, got[key], value))
    ok = not mismatches
    announce(capsys, 9, ok, f"{len(triples)} (|N|, |I|, K) triples match the closed forms; "
                            f"mismatches {mismatches}")
    assert ok


def test_10_determinism(capsys):
    from test_golden import GOLDEN, artifacts

    params = GenerationParams(truck_count=10)
    same = all(
        save_scenario(generate(params, s)) == save_scenario(generate(params, s))
        and save_solution(simulate(generate(params, s))) == save_solution(simulate(generate(params, s)))
        for s in range(10)
    )
    current = artifacts()
    names = ("scenario_seed0.json", "solution_ref_seed0.json", "cost_table_seed0.txt", "itinerary_ref_seed0.svg")
    golden = all(current[n] == (GOLDEN / n).read_text(encoding="utf-8") for n in names)
    ok = same and golden
    announce(capsys, 10, ok, f"10 seeds byte-identical across runs: {same}; golden files match: {golden}")
    assert ok
