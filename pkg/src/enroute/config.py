"""One configuration file for every stage.

TOML or JSON with up to four tables::

    [generation]   # GenerationParams fields
    [degradation]  # DegradationModel fields; capital_cost defaults to
                   # battery_cost_per_kwh * capacity from [generation]
    [solver]       # backend, time_limit, gap, encoding, seed, warm_start, polish, symmetry_breaking
    [sweep]        # truck_counts, seeds, threads

Command-line flags are applied on top with :func:`with_overrides`; the
effective configuration is what :meth:`RunConfig.to_dict` returns.
"""

from __future__ import annotations

import json
import sys
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Mapping

from .degradation import FIXTURE_MODEL, DegradationModel
from .scenario import GenerationParams

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - depends on the interpreter
    import tomli as tomllib


@dataclass(frozen=True)
class SolverConfig:
    backend: str = "highs"
    time_limit: float = 300.0
    gap: float = 0.01
    encoding: str = "incremental"
    seed: int = 0
    warm_start: bool = True
    polish: bool = True
    symmetry_breaking: bool = False

    def __post_init__(self) -> None:
        if self.backend not in ("highs", "cbc"):
            raise ValueError(f"unknown backend {self.backend!r}")
        if self.encoding not in ("native", "incremental", "log"):
            raise ValueError(f"unknown encoding {self.encoding!r}")
        if self.time_limit <= 0 or not 0 <= self.gap < 1:
            raise ValueError("time_limit must be positive and gap in [0, 1)")


@dataclass(frozen=True)
class SweepConfig:
    truck_counts: tuple[int, ...] = (10,)
    seeds: tuple[int, ...] = (0,)
    threads: int = 1

    def __post_init__(self) -> None:
        object.__setattr__(self, "truck_counts", tuple(int(n) for n in self.truck_counts))
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        if any(n < 0 for n in self.truck_counts):
            raise ValueError("truck counts must be non-negative")
        if self.threads < 1:
            raise ValueError("threads must be at least 1")


@dataclass(frozen=True)
class RunConfig:
    generation: GenerationParams = field(default_factory=GenerationParams)
    degradation: Mapping[str, Any] = field(default_factory=dict)
    solver: SolverConfig = field(default_factory=SolverConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)

    def degradation_model(self) -> DegradationModel:
        return degradation_from(self.degradation, self.generation)

    def to_dict(self) -> dict[str, Any]:
        sweep = asdict(self.sweep)
        sweep["truck_counts"] = list(self.sweep.truck_counts)
        sweep["seeds"] = list(self.sweep.seeds)
        return {
            "generation": self.generation.to_dict(),
            "degradation": self.degradation_model().to_dict(),
            "solver": asdict(self.solver),
            "sweep": sweep,
        }


def degradation_from(section: Mapping[str, Any], generation: GenerationParams) -> DegradationModel:
    base = FIXTURE_MODEL.to_dict()
    base["capital_cost"] = generation.battery_cost_per_kwh * generation.capacity
    allowed = set(base)
    unknown = set(section) - allowed
    if unknown:
        raise ValueError(f"unknown degradation parameters: {sorted(unknown)}")
    return DegradationModel.from_dict({**base, **section})


def _section(data: Mapping[str, Any], name: str, cls) -> Any:
    raw = dict(data.get(name, {}))
    known = {f.name for f in fields(cls)}
    unknown = set(raw) - known
    if unknown:
        raise ValueError(f"unknown [{name}] keys: {sorted(unknown)}")
    return cls(**raw)


def config_from_mapping(data: Mapping[str, Any]) -> RunConfig:
    unknown = set(data) - {"generation", "degradation", "solver", "sweep"}
    if unknown:
        raise ValueError(f"unknown config sections: {sorted(unknown)}")
    generation = GenerationParams.from_mapping(_tuples(data.get("generation", {})))
    cfg = RunConfig(
        generation=generation,
        degradation=dict(data.get("degradation", {})),
        solver=_section(data, "solver", SolverConfig),
        sweep=_section(data, "sweep", SweepConfig),
    )
    cfg.degradation_model()  # validate eagerly
    return cfg


def _tuples(section: Mapping[str, Any]) -> dict[str, Any]:
    return {k: tuple(v) if isinstance(v, list) else v for k, v in section.items()}


def load_config(path: str | Path | None) -> RunConfig:
    if path is None:
        return RunConfig()
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if path.suffix.lower() == ".json":
        data = json.loads(text)
    else:
        data = tomllib.loads(text)
    return config_from_mapping(data)


def with_overrides(cfg: RunConfig, generation: Mapping[str, Any] | None = None,
                   degradation: Mapping[str, Any] | None = None,
                   solver: Mapping[str, Any] | None = None,
                   sweep: Mapping[str, Any] | None = None) -> RunConfig:
    """Copy of ``cfg`` with the non-None entries of each mapping applied."""

    def pick(m):
        return {k: v for k, v in (m or {}).items() if v is not None}

    out = RunConfig(
        generation=replace(cfg.generation, **_tuples(pick(generation))),
        degradation={**cfg.degradation, **pick(degradation)},
        solver=replace(cfg.solver, **pick(solver)),
        sweep=replace(cfg.sweep, **pick(sweep)),
    )
    out.degradation_model()
    return out
