"""Command-line entry point: ``enroute <command> ...``.

Exit codes: 0 success, 2 usage or configuration error, 10 generation,
11 simulation, 12 solve infeasible, 13 solve timeout without incumbent,
14 verification failure, 15 other solver failure, 16 reporting.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import typing
from dataclasses import fields
from pathlib import Path

from .config import RunConfig, degradation_from, load_config, with_overrides
from .degradation import DegradationModel
from .domain import (
    load_scenario_document,
    load_solution,
    save_scenario,
    save_solution,
    scenario_from_dict,
)
from .mip import BuildOptions, Limits, build_model, make_backend, solve, warm_start_from
from .mip.backends import BackendUnavailable
from .mip.build import ModelTooLarge, WarmStartRejected
from .mip.mps import save_mps
from .mip.sos2 import lower
from .pipeline import (
    EXIT_GENERATE,
    EXIT_INFEASIBLE,
    EXIT_SIMULATE,
    EXIT_SOLVE,
    EXIT_TIMEOUT,
    EXIT_USAGE,
    EXIT_VERIFY,
    StageError,
    bench,
    rerun_manifest,
    run_pipeline,
)
from .reporting import UnverifiedSolutionError, write_report
from .scenario import GenerationParams, generate
from .simulate import simulate
from .verify import StructureError, check_feasibility, evaluate_cost

log = logging.getLogger("enroute")


class CliError(Exception):
    def __init__(self, code: int, message: str):
        self.code = code
        super().__init__(message)


# -- argument helpers -------------------------------------------------------------


def _add_generation_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("generation overrides")
    hints = typing.get_type_hints(GenerationParams)
    for f in fields(GenerationParams):
        flag = "--" + f.name.replace("_", "-")
        default = f.default
        if isinstance(default, tuple):
            group.add_argument(flag, dest=f"gen_{f.name}", type=float, nargs=2, metavar=("LO", "HI"))
        elif f.name == "deadline_basis":
            group.add_argument(flag, dest=f"gen_{f.name}", choices=["nominal", "driving"])
        else:
            kind = int if hints[f.name] is int else float
            group.add_argument(flag, dest=f"gen_{f.name}", type=kind)


def _add_config(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, help="TOML or JSON configuration file")


def _add_solver_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("solver")
    group.add_argument("--backend", choices=["highs", "cbc"])
    group.add_argument("--time-limit", type=float, help="seconds (default 300)")
    group.add_argument("--gap", type=float, help="relative MIP gap (default 0.01)")
    group.add_argument("--encoding", choices=["incremental", "log", "native"],
                       help="SOS2 encoding; native needs a backend with SOS2 support")
    group.add_argument("--solver-seed", type=int)
    group.add_argument("--symmetry-breaking", action="store_true", default=None)
    group.add_argument("--no-polish", dest="polish", action="store_false", default=None)


def _config(args: argparse.Namespace) -> RunConfig:
    cfg = load_config(getattr(args, "config", None))
    gen = {k[4:]: v for k, v in vars(args).items() if k.startswith("gen_")}
    if getattr(args, "trucks", None) is not None:
        gen["truck_count"] = args.trucks
    solver = {
        "backend": getattr(args, "backend", None),
        "time_limit": getattr(args, "time_limit", None),
        "gap": getattr(args, "gap", None),
        "encoding": getattr(args, "encoding", None),
        "seed": getattr(args, "solver_seed", None),
        "symmetry_breaking": getattr(args, "symmetry_breaking", None),
        "polish": getattr(args, "polish", None),
    }
    sweep = {
        "truck_counts": getattr(args, "truck_counts", None),
        "seeds": getattr(args, "seeds", None),
        "threads": getattr(args, "threads", None),
    }
    return with_overrides(cfg, generation=gen, solver=solver, sweep=sweep)


def _scenario_and_degradation(path: Path, cfg: RunConfig):
    doc = load_scenario_document(path)
    scenario = scenario_from_dict(doc)
    if "degradation" in doc:
        degradation = DegradationModel.from_dict(doc["degradation"])
    else:
        degradation = degradation_from(cfg.degradation, cfg.generation)
    return scenario, degradation


def _emit(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text, encoding="utf-8")


# -- commands ---------------------------------------------------------------------


def cmd_generate(args: argparse.Namespace) -> int:
    cfg = _config(args)
    try:
        scenario = generate(cfg.generation, args.seed)
    except ValueError as exc:
        raise CliError(EXIT_GENERATE, f"generation failed: {exc}") from exc
    _emit(save_scenario(scenario, None, cfg.degradation_model().to_dict()), args.out)
    return 0


def cmd_simulate(args: argparse.Namespace) -> int:
    cfg = _config(args)
    scenario, _ = _scenario_and_degradation(args.scenario, cfg)
    try:
        solution = simulate(scenario)
    except (ValueError, RuntimeError) as exc:
        raise CliError(EXIT_SIMULATE, f"simulation failed: {exc}") from exc
    _emit(save_solution(solution), args.out)
    return 0


def cmd_solve(args: argparse.Namespace) -> int:
    cfg = _config(args)
    scenario, degradation = _scenario_and_degradation(args.scenario, cfg)
    options = BuildOptions(symmetry_breaking=cfg.solver.symmetry_breaking)
    try:
        model = build_model(scenario, degradation, options)
    except ModelTooLarge as exc:
        raise CliError(EXIT_SOLVE, str(exc)) from exc
    if args.mps:
        save_mps(lower(model, cfg.solver.encoding).model, args.mps)
    start = None
    if args.warm_start:
        try:
            start = warm_start_from(model, load_solution(args.warm_start))
        except WarmStartRejected as exc:
            log.warning("%s", exc)
    limits = Limits(cfg.solver.time_limit, cfg.solver.gap, cfg.solver.seed)
    try:
        solution, report = solve(model, make_backend(cfg.solver.backend), limits, start,
                                 encoding=cfg.solver.encoding, polish=cfg.solver.polish)
    except (BackendUnavailable, ValueError) as exc:
        raise CliError(EXIT_SOLVE, str(exc)) from exc
    if args.report:
        _emit(json.dumps(report.as_dict(), indent=2, sort_keys=True) + "\n", args.report)
    if solution is None:
        code = {"infeasible": EXIT_INFEASIBLE, "timeout-no-solution": EXIT_TIMEOUT}.get(report.status, EXIT_SOLVE)
        raise CliError(code, f"no solution: {report.status} ({report.message})")
    check = check_feasibility(solution, scenario)
    if not check.passed:
        raise CliError(EXIT_VERIFY, f"extracted solution fails verification: {check.families()}")
    _emit(save_solution(solution), args.out)
    print(f"{report.status}: objective {report.objective:.4f}, bound {report.bound}, "
          f"gap {report.gap}, {report.wall_time:.1f} s", file=sys.stderr)
    return 0


def cmd_verify(args: argparse.Namespace) -> int:
    cfg = _config(args)
    scenario, degradation = _scenario_and_degradation(args.scenario, cfg)
    solution = load_solution(args.solution)
    try:
        report = check_feasibility(solution, scenario, args.tolerance)
    except StructureError as exc:
        raise CliError(EXIT_VERIFY, f"structural mismatch: {exc}") from exc
    payload = report.as_dict()
    costs = evaluate_cost(solution, scenario, degradation, args.mode)
    payload["cost"] = {"mode": args.mode, "aggregate": costs.aggregate.as_dict(),
                       "per_truck_mean": costs.mean.as_dict()}
    _emit(json.dumps(payload, indent=2, sort_keys=True) + "\n", args.out)
    return 0 if report.passed else EXIT_VERIFY


def cmd_report(args: argparse.Namespace) -> int:
    cfg = _config(args)
    scenario, degradation = _scenario_and_degradation(args.scenario, cfg)
    reference = load_solution(args.ref)
    coordinated = load_solution(args.coord) if args.coord else None
    try:
        written = write_report(args.outdir, scenario, degradation, reference, coordinated,
                               args.truck_ids, force=args.force)
    except UnverifiedSolutionError as exc:
        raise CliError(EXIT_VERIFY, str(exc)) from exc
    except KeyError as exc:
        raise CliError(EXIT_USAGE, str(exc.args[0])) from exc
    for path in written.values():
        print(path)
    return 0


def cmd_run(args: argparse.Namespace) -> int:
    if args.from_manifest:
        manifest = rerun_manifest(args.from_manifest, args.outdir)
    else:
        manifest = run_pipeline(_config(args), args.seed, args.outdir)
    solve_info = manifest.solve or {}
    print(f"{solve_info.get('status')}: objective {solve_info.get('objective')}, "
          f"{len(manifest.outputs)} files in {args.outdir}")
    return 0


def cmd_bench(args: argparse.Namespace) -> int:
    summary = bench(_config(args), args.outdir, ab_symmetry=args.ab_symmetry)
    failed = [r for r in summary["runs"] if "error" in r]
    print((Path(args.outdir) / "cost_table.txt").read_text(encoding="utf-8"), end="")
    for r in failed:
        print(f"failed: trucks={r['trucks']} seed={r['seed']}: {r['error']}", file=sys.stderr)
    return max((r["code"] for r in failed), default=0)


# -- parser -------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="enroute", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="draw a random corridor scenario")
    _add_config(p)
    p.add_argument("--trucks", type=int, help="number of trucks (alias of --truck-count)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path)
    _add_generation_flags(p)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("simulate", help="uncoordinated reference schedule")
    _add_config(p)
    p.add_argument("--scenario", type=Path, required=True)
    p.add_argument("--out", type=Path)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("solve", help="coordinated schedule from the MIP")
    _add_config(p)
    p.add_argument("--scenario", type=Path, required=True)
    p.add_argument("--warm-start", type=Path, help="reference solution used as the first incumbent")
    p.add_argument("--out", type=Path)
    p.add_argument("--report", type=Path, help="write the solve report as JSON")
    p.add_argument("--mps", type=Path, help="also export the lowered model as MPS")
    _add_solver_flags(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("verify", help="check a solution against every model constraint")
    _add_config(p)
    p.add_argument("--scenario", type=Path, required=True)
    p.add_argument("--solution", type=Path, required=True)
    p.add_argument("--tolerance", type=float, default=1e-6)
    p.add_argument("--mode", choices=["exact", "pwl"], default="pwl")
    p.add_argument("--out", type=Path)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("report", help="cost table, itinerary and occupancy charts")
    _add_config(p)
    p.add_argument("--scenario", type=Path, required=True)
    p.add_argument("--ref", type=Path, required=True)
    p.add_argument("--coord", type=Path)
    p.add_argument("--outdir", type=Path, default=Path("reports"))
    p.add_argument("--truck-ids", type=int, nargs="+", help="itinerary subset (default: first 10)")
    p.add_argument("--force", action="store_true", help="report unverified solutions too")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("run", help="whole pipeline for one seed")
    _add_config(p)
    p.add_argument("--trucks", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--outdir", type=Path, default=Path("run"))
    p.add_argument("--from-manifest", type=Path, help="repeat the run recorded in a manifest")
    _add_generation_flags(p)
    _add_solver_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("bench", help="sweep truck counts and seeds")
    _add_config(p)
    p.add_argument("--truck-counts", type=int, nargs="+")
    p.add_argument("--seeds", type=int, nargs="+")
    p.add_argument("--threads", type=int, help="parallel worker processes")
    p.add_argument("--outdir", type=Path, default=Path("bench"))
    p.add_argument("--ab-symmetry", action="store_true",
                   help="solve every instance again with charger symmetry cuts")
    _add_generation_flags(p)
    _add_solver_flags(p)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except CliError as exc:
        print(f"enroute {args.command}: {exc}", file=sys.stderr)
        return exc.code
    except StageError as exc:
        print(f"enroute {args.command}: {exc}", file=sys.stderr)
        return exc.code
    except (ValueError, OSError) as exc:
        print(f"enroute {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
