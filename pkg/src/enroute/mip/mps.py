"""Deterministic MPS export.

Rows and columns are written in model order and numbers through ``repr`` of
the float, so two exports of the same model are byte-identical.  Fields are
aligned the way fixed-format readers expect while names longer than eight
characters simply push the next field right, which the common free-format
readers accept.  SOS2 groups go into an ``SOS`` section.  MPS has no portable
way to carry an objective constant, so it is written as a comment.
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import IO

from .model import MipModel

_SENSE = {"<=": "L", ">=": "G", "==": "E"}


def _num(x: float) -> str:
    if x == int(x) and abs(x) < 1e15:
        return str(int(x))
    return repr(float(x))


def _field(name: str, width: int = 8) -> str:
    return name.ljust(width) + "  "


def write_mps(model: MipModel, out: IO[str]) -> None:
    w = out.write
    w(f"NAME          {model.name}\n")
    w(f"* objective offset: {_num(model.objective_offset)}\n")
    w("ROWS\n")
    w(" N  obj\n")
    for c in model.constraints:
        w(f" {_SENSE[c.sense]}  {c.name}\n")

    columns: list[list[tuple[str, float]]] = [[] for _ in model.variables]
    for c in model.constraints:
        for j, a in c.coeffs:
            columns[j].append((c.name, a))
    w("COLUMNS\n")
    in_int = False
    for v in model.variables:
        is_int = v.kind == "B"
        if is_int != in_int:
            tag = "INTORG" if is_int else "INTEND"
            w(f"    MARKER                 'MARKER'                 '{tag}'\n")
            in_int = is_int
        entries = []
        if model.objective.get(v.index, 0.0) != 0.0:
            entries.append(("obj", model.objective[v.index]))
        entries.extend(columns[v.index])
        if not entries:
            # keep the column declared even when it appears nowhere
            entries.append(("obj", 0.0))
        for row, a in entries:
            w(f"    {_field(v.name)}{_field(row)}{_num(a)}\n")
    if in_int:
        w("    MARKER                 'MARKER'                 'INTEND'\n")

    w("RHS\n")
    for c in model.constraints:
        if c.rhs != 0.0:
            w(f"    {_field('RHS')}{_field(c.name)}{_num(c.rhs)}\n")

    w("BOUNDS\n")
    for v in model.variables:
        name = _field(v.name)
        if v.lb == v.ub:
            w(f" FX BND       {name}{_num(v.lb)}\n")
            continue
        if v.lb == -math.inf:
            w(f" MI BND       {name.rstrip()}\n")
        elif v.lb != 0.0 or v.kind == "B":
            w(f" LO BND       {name}{_num(v.lb)}\n")
        if v.ub != math.inf:
            w(f" UP BND       {name}{_num(v.ub)}\n")

    if model.sos2:
        w("SOS\n")
        for g in model.sos2:
            w(f" S2 SOS       {_field(g.name)}1\n")
            for j, weight in zip(g.members, g.weights):
                w(f"    {_field(model.variables[j].name)}{_num(weight)}\n")
    w("ENDATA\n")


def save_mps(model: MipModel, path: str | Path) -> Path:
    path = Path(path)
    with path.open("w", encoding="ascii", newline="\n") as fh:
        write_mps(model, fh)
    return path
