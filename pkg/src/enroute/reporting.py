"""Comparison artifacts: per-truck cost tables, itinerary and occupancy charts.

Charts are written twice, as a CSV of exact segment endpoints or change points
and as an SVG drawn from nothing but the parsed CSV rows, so the CSV is always
enough to regenerate the picture.  Money is rounded half-up to whole euros
only when a table is rendered.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path
from typing import Any, Iterable, Sequence
from xml.sax.saxutils import escape

from .degradation import DegradationModel
from .domain import COMPONENTS, CostBreakdown, Scenario, Solution, station_order, waiting_time
from .verify import CostMode, check_feasibility, evaluate_cost

METHOD_LABELS = {"reference": "ref.", "coordinated": "coord."}
DEFAULT_SUBSET = 10


class UnverifiedSolutionError(ValueError):
    pass


def round_half_up(x: float) -> int:
    return int(Decimal(repr(x)).quantize(Decimal(1), rounding=ROUND_HALF_UP))


def savings_fraction(reference: float, coordinated: float) -> float | None:
    """1 - coordinated/reference; 0 when both are zero, None when only the reference is."""
    if reference == 0:
        return 0.0 if coordinated == 0 else None
    return 1.0 - coordinated / reference


def _require_verified(solution: Solution, scenario: Scenario, force: bool) -> None:
    if force:
        return
    report = check_feasibility(solution, scenario)
    if not report.passed:
        raise UnverifiedSolutionError(
            f"{solution.method} solution fails verification (worst {report.worst:.3g}, "
            f"families {report.families()}); pass force=True to report it anyway"
        )


# -- cost tables ---------------------------------------------------------------


@dataclass(frozen=True)
class TableRow:
    trucks: int
    method: str
    cost: CostBreakdown


@dataclass
class CostTable:
    rows: list[TableRow]

    def groups(self) -> list[tuple[int, list[TableRow]]]:
        out: dict[int, list[TableRow]] = {}
        for row in self.rows:
            out.setdefault(row.trucks, []).append(row)
        return sorted(out.items())

    def records(self) -> list[list[str]]:
        """Display rows (rounded), including a savings row for every ref/coord pair."""
        out = []
        for trucks, rows in self.groups():
            by_method = {}
            for row in rows:
                by_method[row.method] = row.cost
                cells = [round_half_up(getattr(row.cost, c)) for c in COMPONENTS]
                out.append([str(trucks), METHOD_LABELS.get(row.method, row.method)]
                           + [str(c) for c in cells] + [str(round_half_up(row.cost.total))])
            if "reference" in by_method and "coordinated" in by_method:
                ref, coord = by_method["reference"], by_method["coordinated"]
                cells = []
                for name in COMPONENTS + ("total",):
                    frac = savings_fraction(getattr(ref, name), getattr(coord, name))
                    cells.append("n/a" if frac is None else f"{round_half_up(100 * frac)}%")
                out.append([str(trucks), "savings"] + cells)
        return out

    def to_text(self) -> str:
        header = ["Trucks", "Method", "Charging", "Operating", "Battery", "Delay", "Total"]
        body = self.records()
        widths = [max(len(r[c]) for r in [header] + body) for c in range(len(header))]
        lines = []
        last_trucks = None
        for r in [header] + body:
            cells = list(r)
            if r is not header:
                if cells[0] == last_trucks:
                    cells[0] = ""
                else:
                    last_trucks = cells[0]
            line = "  ".join(
                cells[c].ljust(widths[c]) if c == 1 else cells[c].rjust(widths[c])
                for c in range(len(header))
            )
            lines.append(line.rstrip())
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["trucks", "method", "charging", "operating", "battery", "delay", "total"])
        writer.writerows(self.records())
        return buf.getvalue()


def cost_table(solutions: Sequence[Solution], scenario: Scenario | Sequence[Scenario],
               degradation: DegradationModel, mode: CostMode = "pwl",
               force: bool = False) -> CostTable:
    """Per-truck mean cost rows per (truck count, method).

    ``scenario`` is either shared by all solutions or a sequence aligned with
    them.  Solutions with the same truck count and method are pooled, so the
    row is the mean over every truck of every scenario in the group.
    """
    scenarios = [scenario] * len(solutions) if isinstance(scenario, Scenario) else list(scenario)
    if len(scenarios) != len(solutions):
        raise ValueError("need one scenario per solution")
    pooled: dict[tuple[int, str], list[CostBreakdown]] = {}
    for sol, sc in zip(solutions, scenarios):
        _require_verified(sol, sc, force)
        per_truck = evaluate_cost(sol, sc, degradation, mode).per_truck
        pooled.setdefault((len(sc.trucks), sol.method), []).extend(per_truck.values())
    rank = {"reference": 0, "coordinated": 1}
    rows = []
    for (trucks, method), costs in sorted(pooled.items(), key=lambda kv: (kv[0][0], rank.get(kv[0][1], 2), kv[0][1])):
        total = CostBreakdown(scope="aggregate")
        for cb in costs:
            total = total + cb
        mean = total.scaled(1.0 / len(costs), "per-truck-mean") if costs else total
        rows.append(TableRow(trucks, method, mean))
    return CostTable(rows)


@dataclass
class ComparisonSummary:
    truck_count: int
    reference: CostBreakdown
    coordinated: CostBreakdown
    solver: dict[str, Any] = field(default_factory=dict)

    @property
    def savings(self) -> dict[str, float | None]:
        return {
            name: savings_fraction(getattr(self.reference, name), getattr(self.coordinated, name))
            for name in COMPONENTS + ("total",)
        }

    def as_dict(self) -> dict[str, Any]:
        return {
            "methods": ["reference", "coordinated"],
            "truck_count": self.truck_count,
            "reference": self.reference.as_dict(),
            "coordinated": self.coordinated.as_dict(),
            "savings": self.savings,
            "solver": self.solver,
        }


def compare(reference: Solution, coordinated: Solution, scenario: Scenario,
            degradation: DegradationModel, mode: CostMode = "pwl",
            solver: dict[str, Any] | None = None) -> ComparisonSummary:
    ref = evaluate_cost(reference, scenario, degradation, mode).mean
    coord = evaluate_cost(coordinated, scenario, degradation, mode).mean
    return ComparisonSummary(len(scenario.trucks), ref, coord, dict(solver or {}))


# -- itinerary chart -----------------------------------------------------------

ITINERARY_FIELDS = ["truck", "kind", "t_start", "t_end", "pos_start", "pos_end", "station"]
SEGMENT_COLORS = {
    "drive": "#4d4d4d",
    "overhead": "#b0b0b0",
    "wait": "#d62728",
    "charge": "#1f77b4",
    "rest": "#2ca02c",
    "charge+rest": "#9467bd",
}


def itinerary_segments(solution: Solution, scenario: Scenario,
                       trucks: Iterable[int] | None = None) -> list[dict[str, Any]]:
    """Position-time segments per truck: drive, visit overhead, wait, and the stop itself.

    The stop segment runs from charge start to departure, so a charging stop
    lasts occupation plus the charging overhead.
    """
    valid = sorted(solution.itineraries)
    if trucks is None:
        chosen = valid[:DEFAULT_SUBSET]
    else:
        chosen = list(trucks)
        unknown = [n for n in chosen if n not in solution.itineraries]
        if unknown:
            raise KeyError(f"unknown truck ids {unknown}; valid ids are {valid}")
    positions = {s.id: s.position for s in scenario.stations}
    rows: list[dict[str, Any]] = []

    def add(n, kind, t0, t1, p0, p1, station):
        if t1 > t0 or kind == "drive":
            rows.append({"truck": n, "kind": kind, "t_start": t0, "t_end": t1,
                         "pos_start": p0, "pos_end": p1, "station": station})

    for n in chosen:
        visits = solution.itineraries[n]
        truck = scenario.truck(n)
        stations = station_order(truck, scenario)
        for p, v in enumerate(visits):
            pos = positions[v.station_id]
            if p > 0:
                prev = visits[p - 1]
                add(n, "drive", prev.departure, v.arrival, positions[prev.station_id], pos, "")
            if not v.visited:
                continue
            overhead = stations[p].visit_overhead
            add(n, "overhead", v.arrival, v.arrival + overhead, pos, pos, v.station_id)
            add(n, "wait", v.arrival + overhead, v.charge_start, pos, pos, v.station_id)
            kind = "charge+rest" if v.charging and v.resting else "charge" if v.charging else "rest"
            add(n, kind, v.charge_start, v.departure, pos, pos, v.station_id)
    return rows


def _fmt(x: Any) -> str:
    if isinstance(x, float):
        return repr(x)
    return str(x)


def rows_to_csv(rows: Sequence[dict[str, Any]], fields: Sequence[str]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(fields)
    for r in rows:
        writer.writerow([_fmt(r[f]) for f in fields])
    return buf.getvalue()


def read_csv_rows(text: str) -> list[dict[str, str]]:
    return list(csv.DictReader(io.StringIO(text)))


class _Canvas:
    """Minimal deterministic SVG writer; coordinates printed with 2 decimals."""

    def __init__(self, width: int, height: int) -> None:
        self.width, self.height = width, height
        self.items: list[str] = []

    def line(self, x1, y1, x2, y2, color, width=1.0, dash: str | None = None) -> None:
        extra = f' stroke-dasharray="{dash}"' if dash else ""
        self.items.append(
            f'<line x1="{x1:.2f}" y1="{y1:.2f}" x2="{x2:.2f}" y2="{y2:.2f}" '
            f'stroke="{color}" stroke-width="{width:g}"{extra}/>'
        )

    def polyline(self, points, color, width=1.5) -> None:
        pts = " ".join(f"{x:.2f},{y:.2f}" for x, y in points)
        self.items.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="{width:g}"/>')

    def polygon(self, points, fill, opacity=0.35) -> None:
        pts = " ".join(f"{x:.2f},{y:.2f}" for x, y in points)
        self.items.append(f'<polygon points="{pts}" fill="{fill}" fill-opacity="{opacity:g}" stroke="none"/>')

    def text(self, x, y, s, size=11, anchor="start") -> None:
        self.items.append(
            f'<text x="{x:.2f}" y="{y:.2f}" font-size="{size}" font-family="sans-serif" '
            f'text-anchor="{anchor}">{escape(str(s))}</text>'
        )

    def render(self) -> str:
        head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.width}" height="{self.height}" '
                f'viewBox="0 0 {self.width} {self.height}">')
        body = "\n".join(["<rect width=\"100%\" height=\"100%\" fill=\"white\"/>"] + self.items)
        return f"{head}\n{body}\n</svg>\n"


def _ticks(lo: float, hi: float, count: int = 6) -> list[float]:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / count
    mag = 10 ** math.floor(math.log10(raw))
    step = next(m * mag for m in (1, 2, 5, 10) if m * mag >= raw)
    first = math.ceil(lo / step) * step
    out = []
    x = first
    while x <= hi + 1e-9:
        out.append(round(x, 10))
        x += step
    return out


def itinerary_svg(csv_text: str, width: int = 900, height: int = 520) -> str:
    rows = read_csv_rows(csv_text)
    c = _Canvas(width, height)
    left, right, top, bottom = 60, 130, 30, 50
    c.text(left, 18, "Truck itineraries (position vs. time)", 13)
    if not rows:
        c.text(width / 2, height / 2, "no itinerary", 12, "middle")
        return c.render()
    t_lo = min(float(r["t_start"]) for r in rows)
    t_hi = max(float(r["t_end"]) for r in rows)
    p_hi = max(max(float(r["pos_start"]), float(r["pos_end"])) for r in rows)
    t_hi = t_hi if t_hi > t_lo else t_lo + 1
    p_hi = p_hi if p_hi > 0 else 1

    def X(t):
        return left + (t - t_lo) / (t_hi - t_lo) * (width - left - right)

    def Y(p):
        return height - bottom - p / p_hi * (height - top - bottom)

    for t in _ticks(t_lo, t_hi):
        c.line(X(t), Y(0), X(t), Y(p_hi), "#eeeeee")
        c.text(X(t), height - bottom + 16, f"{t:g}", 10, "middle")
    for p in _ticks(0, p_hi):
        c.line(X(t_lo), Y(p), X(t_hi), Y(p), "#eeeeee")
        c.text(left - 6, Y(p) + 4, f"{p:g}", 10, "end")
    c.text((left + width - right) / 2, height - 12, "time [h]", 11, "middle")
    c.text(12, top + 10, "km", 11)
    for r in rows:
        width_px = 1.5 if r["kind"] == "drive" else 4.0
        c.line(X(float(r["t_start"])), Y(float(r["pos_start"])), X(float(r["t_end"])),
               Y(float(r["pos_end"])), SEGMENT_COLORS.get(r["kind"], "#000000"), width_px)
    for k, (kind, color) in enumerate(SEGMENT_COLORS.items()):
        y = top + 14 + 18 * k
        c.line(width - right + 12, y, width - right + 36, y, color, 4)
        c.text(width - right + 42, y + 4, kind, 10)
    return c.render()


def emit_itinerary_chart(solution: Solution, scenario: Scenario,
                         truck_subset: Iterable[int] | None = None) -> tuple[str, str]:
    """(svg, csv) of the selected trucks; the first ten by id when no subset is given."""
    csv_text = rows_to_csv(itinerary_segments(solution, scenario, truck_subset), ITINERARY_FIELDS)
    return itinerary_svg(csv_text), csv_text


# -- occupancy chart -----------------------------------------------------------

OCCUPANCY_FIELDS = ["station", "time", "in_use", "waiting", "chargers"]


def waiting_intervals(solution: Solution, scenario: Scenario) -> list[tuple[int, float, float]]:
    """(station, from, to) per visit whose charge start lags arrival plus overhead."""
    stations = {s.id: s for s in scenario.stations}
    out = []
    for n in sorted(solution.itineraries):
        for v in solution.itineraries[n]:
            wait = waiting_time(v, stations[v.station_id])
            if wait > 0:
                out.append((v.station_id, v.charge_start - wait, v.charge_start))
    return out


def total_waiting(solution: Solution, scenario: Scenario) -> float:
    return math.fsum(b - a for _, a, b in waiting_intervals(solution, scenario))


def occupancy_rows(solution: Solution, scenario: Scenario) -> list[dict[str, Any]]:
    """Change points of (chargers in use, trucks waiting) per station."""
    deltas: dict[int, dict[float, list[int]]] = {s.id: {} for s in scenario.stations}
    for (station, _), intervals in solution.charger_timelines().items():
        for start, end, _ in intervals:
            deltas[station].setdefault(start, [0, 0])[0] += 1
            deltas[station].setdefault(end, [0, 0])[0] -= 1
    for station, a, b in waiting_intervals(solution, scenario):
        deltas[station].setdefault(a, [0, 0])[1] += 1
        deltas[station].setdefault(b, [0, 0])[1] -= 1
    rows = []
    for s in scenario.stations:
        in_use = waiting = 0
        rows.append({"station": s.id, "time": 0.0, "in_use": 0, "waiting": 0, "chargers": s.charger_count})
        for t in sorted(deltas[s.id]):
            d_use, d_wait = deltas[s.id][t]
            if d_use == 0 and d_wait == 0:
                continue
            in_use += d_use
            waiting += d_wait
            if t == 0.0:
                rows[-1].update(in_use=in_use, waiting=waiting)
            else:
                rows.append({"station": s.id, "time": t, "in_use": in_use, "waiting": waiting,
                             "chargers": s.charger_count})
    return rows


def occupancy_svg(csv_text: str, width: int = 900, panel: int = 110) -> str:
    rows = read_csv_rows(csv_text)
    stations: dict[int, list[dict[str, str]]] = {}
    for r in rows:
        stations.setdefault(int(r["station"]), []).append(r)
    top, left, right = 30, 60, 30
    height = top + max(len(stations), 1) * panel + 40
    c = _Canvas(width, height)
    c.text(left, 18, "Charger occupancy (line) and waiting trucks (shaded)", 13)
    if not stations:
        c.text(width / 2, height / 2, "no stations", 12, "middle")
        return c.render()
    times = [float(r["time"]) for r in rows]
    t_lo, t_hi = min(times), max(times)
    t_hi = t_hi if t_hi > t_lo else t_lo + 1
    ymax = max(max(int(r["chargers"]), int(r["in_use"]), int(r["waiting"])) for r in rows) or 1

    def X(t):
        return left + (t - t_lo) / (t_hi - t_lo) * (width - left - right)

    for k, sid in enumerate(sorted(stations)):
        pts = stations[sid]
        base = top + (k + 1) * panel - 14

        def Y(v):
            return base - v / ymax * (panel - 30)

        c.text(8, base - panel / 2 + 10, f"station {sid}", 10)
        c.line(X(t_lo), base, X(t_hi), base, "#999999")
        cap = int(pts[0]["chargers"])
        c.line(X(t_lo), Y(cap), X(t_hi), Y(cap), "#999999", 1, "4 3")
        use_path, wait_poly = [], [(X(t_lo), base)]
        prev_use = prev_wait = 0
        for r in pts:
            t = float(r["time"])
            use_path += [(X(t), Y(prev_use)), (X(t), Y(int(r["in_use"])))]
            wait_poly += [(X(t), Y(prev_wait)), (X(t), Y(int(r["waiting"])))]
            prev_use, prev_wait = int(r["in_use"]), int(r["waiting"])
        use_path.append((X(t_hi), Y(prev_use)))
        wait_poly += [(X(t_hi), Y(prev_wait)), (X(t_hi), base)]
        c.polygon(wait_poly, "#d62728")
        c.polyline(use_path, "#1f77b4")
    for t in _ticks(t_lo, t_hi):
        c.text(X(t), height - 24, f"{t:g}", 10, "middle")
    c.text((left + width - right) / 2, height - 8, "time [h]", 11, "middle")
    return c.render()


def emit_occupancy_chart(solution: Solution, scenario: Scenario) -> tuple[str, str]:
    csv_text = rows_to_csv(occupancy_rows(solution, scenario), OCCUPANCY_FIELDS)
    return occupancy_svg(csv_text), csv_text


# -- bundle ----------------------------------------------------------------------


def write_report(outdir: str | Path, scenario: Scenario, degradation: DegradationModel,
                 reference: Solution, coordinated: Solution | None = None,
                 truck_subset: Iterable[int] | None = None, force: bool = False) -> dict[str, Path]:
    """Cost table, savings summary and both charts for one scenario."""
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    solutions = [reference] + ([coordinated] if coordinated is not None else [])
    table = cost_table(solutions, scenario, degradation, force=force)
    files: dict[str, str] = {"cost_table.txt": table.to_text(), "cost_table.csv": table.to_csv()}
    subset = list(truck_subset) if truck_subset is not None else None
    for sol in solutions:
        tag = "ref" if sol.method == "reference" else "coord"
        svg, csv_text = emit_itinerary_chart(sol, scenario, subset)
        files[f"itinerary_{tag}.svg"], files[f"itinerary_{tag}.csv"] = svg, csv_text
        svg, csv_text = emit_occupancy_chart(sol, scenario)
        files[f"occupancy_{tag}.svg"], files[f"occupancy_{tag}.csv"] = svg, csv_text
    if coordinated is not None:
        summary = compare(reference, coordinated, scenario, degradation)
        payload = summary.as_dict()
        payload["waiting_hours"] = {"reference": total_waiting(reference, scenario),
                                    "coordinated": total_waiting(coordinated, scenario)}
        files["summary.json"] = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    written = {}
    for name, text in sorted(files.items()):
        path = out / name
        path.write_text(text, encoding="utf-8", newline="\n")
        written[name] = path
    return written
