"""Solver backends.

Two are provided: HiGHS through its Python bindings (in-process, no native
SOS2, accepts a full starting assignment) and CBC as a subprocess fed with an
MPS file (native SOS2, mipstart file).  Both return a :class:`RawResult`;
turning that into a schedule is the job of :mod:`enroute.mip.solve`.
"""

from __future__ import annotations

import logging
import os
import re
import shutil
import subprocess
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol, Sequence

from .model import MipModel
from .mps import save_mps

log = logging.getLogger(__name__)

RawStatus = str  # "optimal" | "time-limit" | "infeasible" | "error"


@dataclass(frozen=True)
class Limits:
    time_limit: float = 300.0
    rel_gap: float = 0.01
    seed: int = 0

    def __post_init__(self) -> None:
        if self.time_limit <= 0:
            raise ValueError("time limit must be positive")
        if not 0 <= self.rel_gap < 1:
            raise ValueError("relative gap must lie in [0, 1)")


@dataclass
class RawResult:
    status: RawStatus
    values: list[float] | None
    objective: float | None
    bound: float | None
    wall_time: float
    warm_start: str = "none"  # none | accepted | rejected
    message: str = ""
    extra: dict = field(default_factory=dict)


class SolverBackend(Protocol):
    name: str
    supports_sos2: bool

    def available(self) -> bool: ...

    def solve(self, model: MipModel, limits: Limits,
              start: Sequence[float] | None = None) -> RawResult: ...


class BackendUnavailable(RuntimeError):
    pass


class HighsBackend:
    name = "highs"
    supports_sos2 = False

    def __init__(self, feasibility_tol: float = 1e-9, verbose: bool = False) -> None:
        self.feasibility_tol = feasibility_tol
        self.verbose = verbose

    def available(self) -> bool:
        try:
            import highspy  # noqa: F401
        except ImportError:
            return False
        return True

    def solve(self, model: MipModel, limits: Limits,
              start: Sequence[float] | None = None) -> RawResult:
        if model.sos2:
            raise ValueError("HiGHS has no SOS2 support; lower the model first")
        try:
            import highspy
        except ImportError as exc:
            raise BackendUnavailable("highspy is not installed") from exc
        arr = model.to_arrays()
        inf = highspy.kHighsInf

        def clean(xs):
            return [inf if x == float("inf") else -inf if x == float("-inf") else float(x) for x in xs]

        lp = highspy.HighsLp()
        n, m = model.num_vars, len(model.constraints)
        lp.num_col_ = n
        lp.num_row_ = m
        lp.col_cost_ = arr["cost"].tolist()
        lp.col_lower_ = clean(arr["col_lo"])
        lp.col_upper_ = clean(arr["col_hi"])
        lp.row_lower_ = clean(arr["row_lo"])
        lp.row_upper_ = clean(arr["row_hi"])
        lp.offset_ = float(arr["offset"])
        mat = arr["matrix"]
        lp.a_matrix_.format_ = highspy.MatrixFormat.kColwise
        lp.a_matrix_.start_ = mat.indptr.tolist()
        lp.a_matrix_.index_ = mat.indices.tolist()
        lp.a_matrix_.value_ = mat.data.tolist()
        lp.integrality_ = [
            highspy.HighsVarType.kInteger if flag else highspy.HighsVarType.kContinuous
            for flag in arr["integer"]
        ]

        h = highspy.Highs()
        h.setOptionValue("output_flag", self.verbose)
        h.setOptionValue("time_limit", float(limits.time_limit))
        h.setOptionValue("mip_rel_gap", float(limits.rel_gap))
        h.setOptionValue("random_seed", int(limits.seed))
        h.setOptionValue("mip_feasibility_tolerance", self.feasibility_tol)
        h.setOptionValue("primal_feasibility_tolerance", self.feasibility_tol)
        h.passModel(lp)

        warm = "none"
        if start is not None:
            sol = highspy.HighsSolution()
            sol.col_value = [float(x) for x in start]
            sol.value_valid = True
            warm = "accepted" if h.setSolution(sol) == highspy.HighsStatus.kOk else "rejected"

        t0 = time.perf_counter()
        h.run()
        wall = time.perf_counter() - t0
        status = h.getModelStatus()
        info = h.getInfo()
        S = highspy.HighsModelStatus
        has_point = info.primal_solution_status == 2  # kSolutionStatusFeasible
        values = list(h.getSolution().col_value) if has_point else None
        objective = info.objective_function_value if has_point else None
        bound = info.mip_dual_bound if abs(info.mip_dual_bound) < inf else None
        if status == S.kOptimal:
            raw = "optimal"
        elif status == S.kInfeasible:
            raw = "infeasible"
        elif status in (S.kTimeLimit, S.kInterrupt, S.kSolutionLimit, S.kIterationLimit):
            raw = "time-limit"
        else:
            raw = "error"
        return RawResult(raw, values, objective, bound, wall, warm, h.modelStatusToString(status),
                         {"nodes": info.mip_node_count})


def _find_cbc() -> str | None:
    env = os.environ.get("ENROUTE_CBC")
    if env:
        return env
    found = shutil.which("cbc")
    if found:
        return found
    try:
        import pulp
    except ImportError:
        return None
    bundled = Path(pulp.__file__).parent / "solverdir" / "cbc" / "linux" / "i64" / "cbc"
    return str(bundled) if bundled.exists() else None


_CBC_NUMBER = r"([-+0-9.eE]+|[-+]?inf(?:inity)?)"


class CbcBackend:
    name = "cbc"
    supports_sos2 = True

    def __init__(self, executable: str | None = None, keep_files: str | Path | None = None) -> None:
        self.executable = executable or _find_cbc()
        self.keep_files = Path(keep_files) if keep_files else None

    def available(self) -> bool:
        return bool(self.executable) and os.access(self.executable, os.X_OK)

    def solve(self, model: MipModel, limits: Limits,
              start: Sequence[float] | None = None) -> RawResult:
        if not self.available():
            raise BackendUnavailable(
                "no CBC executable found (set ENROUTE_CBC or put cbc on PATH)"
            )
        with tempfile.TemporaryDirectory(prefix="enroute-cbc-") as tmp:
            work = self.keep_files or Path(tmp)
            work.mkdir(parents=True, exist_ok=True)
            mps = save_mps(model, work / "model.mps")
            sol = work / "model.sol"
            cmd = [self.executable, str(mps), "-sec", f"{limits.time_limit:g}",
                   "-ratio", f"{limits.rel_gap:g}", "-randomCbcSeed", str(max(limits.seed, 1))]
            warm = "none"
            if start is not None:
                mst = work / "start.mst"
                lines = ["Stopped on time - objective value 0\n"]
                lines += [f"{j:>7} {v.name} {start[j]!r:>15} {0:>23}\n"
                          for j, v in enumerate(model.variables)]
                mst.write_text("".join(lines))
                cmd += ["-mips", str(mst)]
            cmd += ["-solve", "-solu", str(sol)]
            t0 = time.perf_counter()
            proc = subprocess.run(cmd, capture_output=True, text=True, stdin=subprocess.DEVNULL)
            wall = time.perf_counter() - t0
            out = proc.stdout
            if start is not None:
                warm = "rejected" if re.search(r"mipstart.*(not|in)feasible|infeasible mipstart", out, re.I) \
                    else "accepted"
            if proc.returncode != 0 or not sol.exists():
                return RawResult("error", None, None, None, wall, warm,
                                 f"cbc exited with {proc.returncode}: {proc.stderr[-500:]}")
            return self._read(model, sol.read_text(), out, wall, warm)

    def _read(self, model: MipModel, text: str, stdout: str, wall: float, warm: str) -> RawResult:
        lines = text.splitlines()
        head = lines[0] if lines else ""
        index = {v.name: v.index for v in model.variables}
        values = [0.0] * model.num_vars
        for line in lines[1:]:
            parts = line.replace("**", " ").split()
            if len(parts) >= 3 and parts[1] in index:
                values[index[parts[1]]] = float(parts[2])
        lowered = head.lower()
        bound = None
        match = re.search(r"Lower bound:\s+" + _CBC_NUMBER, stdout)
        if match:
            bound = float(match.group(1))
        obj_match = re.search(r"objective value\s+" + _CBC_NUMBER, head)
        objective = float(obj_match.group(1)) + model.objective_offset if obj_match else None
        if bound is not None:
            bound += model.objective_offset
        if lowered.startswith("optimal"):
            return RawResult("optimal", values, objective, bound if bound is not None else objective,
                             wall, warm, head)
        if "infeasible" in lowered and "stopped" not in lowered:
            return RawResult("infeasible", None, None, None, wall, warm, head)
        if lowered.startswith("stopped"):
            has_point = "no feasible" not in stdout.lower() and objective is not None \
                and "objective value 1e+50" not in lowered
            return RawResult("time-limit", values if has_point else None,
                             objective if has_point else None, bound, wall, warm, head)
        return RawResult("error", None, None, None, wall, warm, head)


BACKENDS = {"highs": HighsBackend, "cbc": CbcBackend}


def make_backend(name: str) -> SolverBackend:
    try:
        return BACKENDS[name]()
    except KeyError:
        raise ValueError(f"unknown backend {name!r}; choose from {sorted(BACKENDS)}") from None
