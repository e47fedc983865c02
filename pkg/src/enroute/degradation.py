"""Battery cycle-life curve, one-cycle charge cost and its piecewise-linear table.

The cycle-life curve is ``N(u) = beta0 * u**(-beta1) * exp(beta2 * (1 - u))`` and
the cost of one cycle at argument ``u`` is ``capital_cost / N(u)``.  A charge
event from SoC ``a`` up to SoC ``b`` costs ``unit_cost(a) - unit_cost(b)``.

``u`` is the *wear argument*.  Under the ``inverted`` convention (default) it is
the depth of discharge ``1 - soc``; under ``direct`` it is the SoC itself.  With
positive ``beta1``/``beta2`` only the inverted convention gives non-negative
charge-event costs, which the constructor checks by dense sampling.
"""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import asdict, dataclass
from functools import cached_property
from pathlib import Path
from typing import Any, Literal, Mapping

import numpy as np

log = logging.getLogger(__name__)

SocConvention = Literal["direct", "inverted"]
Placement = Literal["curvature", "uniform"]

_SAMPLES = 2001


@dataclass(frozen=True)
class PwlTable:
    """Breakpoints ``(soc, value)`` with strictly increasing soc."""

    socs: tuple[float, ...]
    values: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.socs) != len(self.values) or len(self.socs) < 2:
            raise ValueError("a PWL table needs at least two matching breakpoints")
        if any(b <= a for a, b in zip(self.socs, self.socs[1:])):
            raise ValueError("breakpoint socs must be strictly increasing")
        if not all(math.isfinite(v) for v in self.values):
            raise ValueError("breakpoint values must be finite")

    def __len__(self) -> int:
        return len(self.socs)

    @property
    def span(self) -> tuple[float, float]:
        return self.socs[0], self.socs[-1]

    def slopes(self) -> list[float]:
        s, v = self.socs, self.values
        return [(v[r + 1] - v[r]) / (s[r + 1] - s[r]) for r in range(len(s) - 1)]

    def is_convex(self, tol: float = 1e-12) -> bool:
        sl = self.slopes()
        scale = max(1.0, max(abs(x) for x in sl))
        return all(b >= a - tol * scale for a, b in zip(sl, sl[1:]))

    def is_concave(self, tol: float = 1e-12) -> bool:
        sl = self.slopes()
        scale = max(1.0, max(abs(x) for x in sl))
        return all(b <= a + tol * scale for a, b in zip(sl, sl[1:]))

    def weights(self, soc: float) -> dict[int, float]:
        """Convex-combination weights (at most two adjacent) representing ``soc``."""
        lo, hi = self.span
        x = min(max(soc, lo), hi)
        r = int(np.searchsorted(self.socs, x, side="right")) - 1
        if r >= len(self.socs) - 1:
            return {len(self.socs) - 1: 1.0}
        width = self.socs[r + 1] - self.socs[r]
        frac = (x - self.socs[r]) / width
        if frac <= 0.0:
            return {r: 1.0}
        return {r: 1.0 - frac, r + 1: frac}

    def to_csv(self, path: str | Path | None = None) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["soc", "value"])
        for s, v in zip(self.socs, self.values):
            writer.writerow([repr(s), repr(v)])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text, encoding="utf-8")
        return text


@dataclass(frozen=True)
class DegradationModel:
    beta0: float
    beta1: float
    beta2: float
    capital_cost: float
    breakpoint_count: int = 33
    soc_convention: SocConvention = "inverted"
    clip_floor: float = 0.01
    placement: Placement = "curvature"
    strict: bool = True

    def __post_init__(self) -> None:
        if not self.beta0 > 0:
            raise ValueError("beta0 must be positive")
        if self.beta1 < 0 or self.beta2 < 0:
            raise ValueError("beta1 and beta2 must be non-negative")
        if self.capital_cost < 0:
            raise ValueError("capital_cost must be non-negative")
        if self.breakpoint_count < 2:
            raise ValueError("breakpoint_count must be at least 2")
        if self.soc_convention not in ("direct", "inverted"):
            raise ValueError(f"unknown soc_convention {self.soc_convention!r}")
        if self.placement not in ("curvature", "uniform"):
            raise ValueError(f"unknown placement {self.placement!r}")
        if not 0 < self.clip_floor < 0.5:
            raise ValueError("clip_floor must lie in (0, 0.5)")
        if self.strict:
            grid = np.linspace(0.0, 1.0, _SAMPLES)
            cost = unit_cost_array(grid, self)
            rise = np.diff(cost)
            bad = rise > 1e-12 * max(1.0, float(np.max(np.abs(cost))))
            if np.any(bad):
                at = float(grid[int(np.argmax(bad))])
                raise ValueError(
                    f"charge events would have negative cost near soc={at:.4f} under the "
                    f"{self.soc_convention!r} convention; pass strict=False to override"
                )

    @cached_property
    def table(self) -> PwlTable:
        return build_pwl(self)

    def for_capacity(self, capacity: float, cost_per_kwh: float) -> DegradationModel:
        return DegradationModel(**{**asdict(self), "capital_cost": cost_per_kwh * capacity})

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> DegradationModel:
        return cls(**dict(data))


def cycle_life_curve(u: float, beta0: float, beta1: float, beta2: float) -> float:
    """Raw cycle-life curve at wear argument ``u`` (no mapping, no clipping)."""
    return beta0 * u ** (-beta1) * math.exp(beta2 * (1.0 - u))


def wear_argument(soc: float, model: DegradationModel) -> float:
    u = 1.0 - soc if model.soc_convention == "inverted" else soc
    if u < model.clip_floor:
        log.debug("wear argument %.6g clipped to floor %.6g", u, model.clip_floor)
        return model.clip_floor
    return u


def cycle_life(soc: float, model: DegradationModel) -> float:
    return cycle_life_curve(wear_argument(soc, model), model.beta0, model.beta1, model.beta2)


def unit_cost(soc: float, model: DegradationModel) -> float:
    if model.capital_cost == 0:
        return 0.0
    return model.capital_cost / cycle_life(soc, model)


def unit_cost_array(socs: np.ndarray, model: DegradationModel) -> np.ndarray:
    socs = np.asarray(socs, dtype=float)
    u = 1.0 - socs if model.soc_convention == "inverted" else socs
    u = np.maximum(u, model.clip_floor)
    life = model.beta0 * u ** (-model.beta1) * np.exp(model.beta2 * (1.0 - u))
    return model.capital_cost / life


def charge_event_cost(soc_before: float, soc_after: float, model: DegradationModel) -> float:
    """Cost of charging from ``soc_before`` up to ``soc_after``."""
    if soc_after < soc_before:
        raise ValueError(
            f"soc_after {soc_after} below soc_before {soc_before}; discharges cost nothing "
            "and must not be passed here"
        )
    if soc_after == soc_before:
        return 0.0
    return unit_cost(soc_before, model) - unit_cost(soc_after, model)


def _smooth_interval(model: DegradationModel) -> tuple[float, float, list[float]]:
    """SoC interval where the curve is unclipped, plus any kink to pin exactly."""
    f = model.clip_floor
    if model.soc_convention == "inverted":
        return f, 1.0 - f, [1.0]
    return f, 1.0, []


def breakpoint_socs(model: DegradationModel) -> np.ndarray:
    """Breakpoint positions spanning ``[clip_floor, 1]``.

    ``curvature`` equidistributes ``sqrt(|f''| / f)`` of the cost curve over the
    unclipped interval, which balances the relative interpolation error of each
    segment; the clipping kink is always a breakpoint.
    """
    R = model.breakpoint_count
    lo, hi, pinned = _smooth_interval(model)
    n = R - len(pinned)
    if n < 2:
        return np.array([model.clip_floor, 1.0])
    if model.placement == "uniform":
        return np.linspace(model.clip_floor, 1.0, R)
    grid = np.linspace(lo, hi, 20001)
    u = 1.0 - grid if model.soc_convention == "inverted" else grid
    b1, b2 = model.beta1, model.beta2
    density = np.sqrt(np.abs((b1 / u + b2) ** 2 - b1 / u**2))
    # a small uniform share keeps degenerate (flat) curves well spaced
    density = density / max(float(np.trapezoid(density, grid)), 1e-300) + 0.01 / (hi - lo)
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (density[1:] + density[:-1]) * np.diff(grid))])
    xs = np.interp(np.linspace(0.0, cum[-1], n), cum, grid)
    xs[0], xs[-1] = lo, hi
    return np.concatenate([xs, pinned])


def build_pwl(model: DegradationModel) -> PwlTable:
    socs = breakpoint_socs(model)
    values = unit_cost_array(socs, model)
    return PwlTable(tuple(float(s) for s in socs), tuple(float(v) for v in values))


def pwl_eval(table: PwlTable, soc: float) -> float:
    """Linear interpolation in ``table``; arguments outside its span are clamped."""
    lo, hi = table.span
    if soc < lo or soc > hi:
        log.debug("soc %.6g outside PWL span [%.6g, %.6g]; clamped", soc, lo, hi)
    total = 0.0
    for r, w in table.weights(soc).items():
        total += w * table.values[r]
    return total


def pwl_eval_array(table: PwlTable, socs: np.ndarray) -> np.ndarray:
    return np.interp(np.asarray(socs, dtype=float), table.socs, table.values)


def max_relative_error(model: DegradationModel, lo: float = 0.1, hi: float = 1.0,
                       samples: int = 10_000) -> float:
    """Largest relative gap between the PWL table and the exact curve on a grid."""
    xs = np.linspace(lo, hi, samples)
    exact = unit_cost_array(xs, model)
    approx = pwl_eval_array(model.table, xs)
    return float(np.max(np.abs(approx - exact) / np.abs(exact)))


# Coefficients are placeholders chosen for a plausible curve shape, not fitted
# to any cell chemistry.  Capital cost is 250 EUR/kWh for a 600 kWh pack.
FIXTURE_MODEL = DegradationModel(beta0=5000.0, beta1=1.5, beta2=2.0, capital_cost=150_000.0)
