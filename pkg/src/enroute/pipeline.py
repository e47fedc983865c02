"""generate -> simulate -> solve -> verify -> report, and the truck-count sweep.

A solution file is only written after it has passed verification, and the
manifest is written last, listing every produced file with its SHA-256.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import platform
import subprocess
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

from . import __version__
from .config import RunConfig, config_from_mapping
from .domain import Scenario, Solution, load_scenario, load_solution, save_scenario, save_solution
from .mip import BuildOptions, Limits, build_model, make_backend, solve, warm_start_from
from .mip.build import WarmStartRejected
from .reporting import cost_table, write_report
from .scenario import generate
from .simulate import simulate
from .verify import check_feasibility

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_GENERATE = 10
EXIT_SIMULATE = 11
EXIT_INFEASIBLE = 12
EXIT_TIMEOUT = 13
EXIT_VERIFY = 14
EXIT_SOLVE = 15
EXIT_REPORT = 16

CAVEAT = ("scenario and reference files are byte-reproducible; coordinated solutions "
          "reproduce only up to solver determinism (time limits, threads, versions)")


class StageError(RuntimeError):
    def __init__(self, stage: str, code: int, message: str, paths: dict[str, str] | None = None):
        self.stage = stage
        self.code = code
        self.paths = dict(paths or {})
        where = f" [{', '.join(f'{k}={v}' for k, v in self.paths.items())}]" if self.paths else ""
        super().__init__(f"{stage}: {message}{where}")


def sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def version_stamp() -> dict[str, Any]:
    stamp: dict[str, Any] = {"package": __version__, "python": platform.python_version(), "git": None}
    try:
        out = subprocess.run(["git", "rev-parse", "HEAD"], capture_output=True, text=True,
                             cwd=Path(__file__).resolve().parent, timeout=5)
        if out.returncode == 0:
            stamp["git"] = out.stdout.strip()
    except (OSError, subprocess.SubprocessError):
        pass
    return stamp


@dataclass
class RunManifest:
    config: dict[str, Any]
    seeds: list[int]
    limits: dict[str, Any]
    outputs: dict[str, str] = field(default_factory=dict)
    version: dict[str, Any] = field(default_factory=version_stamp)
    solve: dict[str, Any] | None = None
    caveat: str = CAVEAT
    coordinated_reproducible: bool = False

    def as_dict(self) -> dict[str, Any]:
        return {
            "kind": "manifest",
            "config": self.config,
            "seeds": self.seeds,
            "limits": self.limits,
            "outputs": dict(sorted(self.outputs.items())),
            "version": self.version,
            "solve": self.solve,
            "caveat": self.caveat,
            "coordinated_reproducible": self.coordinated_reproducible,
        }

    def write(self, path: Path) -> Path:
        path.write_text(json.dumps(self.as_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
        return path


def _verified_or_raise(solution: Solution, scenario: Scenario, stage: str, paths: dict[str, str]) -> None:
    report = check_feasibility(solution, scenario)
    if not report.passed:
        raise StageError(
            stage, EXIT_VERIFY,
            f"{solution.method} solution failed verification: worst {report.worst:.3g} in "
            f"{report.families()}", paths,
        )


def run_pipeline(config: RunConfig, seed: int, outdir: str | Path, report: bool = True) -> RunManifest:
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    cfg = config.to_dict()
    limits = Limits(config.solver.time_limit, config.solver.gap, config.solver.seed)
    manifest = RunManifest(cfg, [seed], {"time_limit": limits.time_limit, "gap": limits.rel_gap,
                                         "seed": limits.seed})
    files: list[Path] = []

    try:
        degradation = config.degradation_model()
        scenario = generate(config.generation, seed)
    except ValueError as exc:
        raise StageError("generate", EXIT_GENERATE, str(exc)) from exc
    scenario_path = out / "scenario.json"
    save_scenario(scenario, scenario_path, degradation.to_dict())
    files.append(scenario_path)

    try:
        reference = simulate(scenario)
    except (ValueError, RuntimeError) as exc:
        raise StageError("simulate", EXIT_SIMULATE, str(exc), {"scenario": str(scenario_path)}) from exc
    _verified_or_raise(reference, scenario, "verify", {"scenario": str(scenario_path)})
    ref_path = out / "solution_ref.json"
    save_solution(reference, ref_path)
    files.append(ref_path)

    paths = {"scenario": str(scenario_path), "reference": str(ref_path)}
    options = BuildOptions(symmetry_breaking=config.solver.symmetry_breaking)
    model = build_model(scenario, degradation, options)
    start = None
    if config.solver.warm_start:
        try:
            start = warm_start_from(model, reference)
        except WarmStartRejected as exc:
            log.warning("warm start rejected: %s", exc)
    solution, rep = solve(model, make_backend(config.solver.backend), limits, start,
                          encoding=config.solver.encoding, polish=config.solver.polish)
    manifest.solve = rep.as_dict()
    report_path = out / "solve_report.json"
    report_path.write_text(json.dumps(rep.as_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    files.append(report_path)
    if solution is None:
        code = {"infeasible": EXIT_INFEASIBLE, "timeout-no-solution": EXIT_TIMEOUT}.get(rep.status, EXIT_SOLVE)
        raise StageError("solve", code, f"status {rep.status}: {rep.message}", paths)
    if rep.status == "feasible-with-gap":
        log.warning("solve stopped with gap %.4f; keeping the incumbent", rep.gap or float("nan"))
    _verified_or_raise(solution, scenario, "verify", paths)
    coord_path = out / "solution_coord.json"
    save_solution(solution, coord_path)
    files.append(coord_path)

    if report:
        try:
            written = write_report(out / "reports", scenario, degradation, reference, solution)
        except (ValueError, KeyError, OSError) as exc:
            raise StageError("report", EXIT_REPORT, str(exc), paths) from exc
        files.extend(written.values())

    manifest.outputs = {str(p.relative_to(out)): sha256(p) for p in files}
    manifest.write(out / "manifest.json")
    return manifest


def rerun_manifest(manifest_path: str | Path, outdir: str | Path) -> RunManifest:
    data = json.loads(Path(manifest_path).read_text(encoding="utf-8"))
    if data.get("kind") != "manifest":
        raise ValueError(f"{manifest_path} is not a run manifest")
    config = config_from_mapping(data["config"])
    (seed,) = data["seeds"]
    return run_pipeline(config, seed, outdir)


# -- sweep ------------------------------------------------------------------------


def _bench_one(args: tuple[dict[str, Any], int, int, str]) -> dict[str, Any]:
    cfg_dict, trucks, seed, outdir = args
    config = config_from_mapping(cfg_dict)
    config = replace(config, generation=replace(config.generation, truck_count=trucks))
    run_dir = Path(outdir) / f"n{trucks:03d}_s{seed:03d}"
    try:
        manifest = run_pipeline(config, seed, run_dir, report=False)
    except StageError as exc:
        return {"trucks": trucks, "seed": seed, "dir": str(run_dir), "error": str(exc),
                "stage": exc.stage, "code": exc.code}
    return {"trucks": trucks, "seed": seed, "dir": str(run_dir), "solve": manifest.solve}


def bench(config: RunConfig, outdir: str | Path, ab_symmetry: bool = False) -> dict[str, Any]:
    """Every (truck count, seed) of the sweep through the pipeline, in parallel workers.

    With ``ab_symmetry`` each instance is solved a second time with charger
    symmetry cuts switched on, into a sibling directory, for a timing comparison.
    """
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    cfg = config.to_dict()
    jobs = [(cfg, n, s, str(out)) for n in config.sweep.truck_counts for s in config.sweep.seeds]
    if ab_symmetry:
        cut = config_from_mapping(cfg)
        cut_cfg = replace(cut, solver=replace(cut.solver, symmetry_breaking=True)).to_dict()
        jobs += [(cut_cfg, n, s, str(out / "symmetry")) for n, s in
                 ((n, s) for n in config.sweep.truck_counts for s in config.sweep.seeds)]
    if config.sweep.threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(config.sweep.threads, os.cpu_count() or 1)) as pool:
            results = list(pool.map(_bench_one, jobs))
    else:
        results = [_bench_one(job) for job in jobs]

    solutions, scenarios = [], []
    for r in results:
        if "error" in r or Path(r["dir"]).parent != out:
            continue
        d = Path(r["dir"])
        sc = load_scenario(d / "scenario.json")
        for name in ("solution_ref.json", "solution_coord.json"):
            solutions.append(load_solution(d / name))
            scenarios.append(sc)
    table = cost_table(solutions, scenarios, config.degradation_model())
    (out / "cost_table.txt").write_text(table.to_text(), encoding="utf-8")
    (out / "cost_table.csv").write_text(table.to_csv(), encoding="utf-8")
    summary = {"kind": "bench", "config": cfg, "runs": results, "version": version_stamp(),
               "caveat": CAVEAT}
    (out / "bench.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return summary
