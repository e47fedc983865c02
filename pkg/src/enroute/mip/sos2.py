"""SOS2 encodings for backends without native support.

``incremental``
    One binary per interior breakpoint, sandwiched between tail sums of the
    weights: ``sum(lam[s+1:]) <= b_s <= sum(lam[s:])``.  This forces the tails to
    be 1, ..., 1, f, 0, ..., 0, i.e. at most two adjacent non-zero weights.
``log``
    ceil(log2(R - 1)) binaries carrying the reflected Gray code of the active
    segment; each bit excludes the breakpoints not adjacent to any segment with
    that bit value.
``native``
    Groups are passed through to the solver unchanged.

Groups flagged ``relaxable`` are dropped altogether when ``relax_convex`` is
set, since a convex interpolant under minimisation already picks adjacent
weights at every optimum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

from .model import MipModel, Sos2Group

Encoding = Literal["native", "incremental", "log"]


def gray(j: int) -> int:
    return j ^ (j >> 1)


def log_bit_sets(R: int) -> list[tuple[list[int], list[int]]]:
    """Per bit: breakpoints to zero when the bit is 0, and when it is 1."""
    segments = R - 1
    bits = max(1, math.ceil(math.log2(segments))) if segments > 1 else 0
    out = []
    for bit in range(bits):
        zero_if_0, zero_if_1 = [], []
        for r in range(R):
            adj = [j for j in (r - 1, r) if 0 <= j < segments]
            codes = {(gray(j) >> bit) & 1 for j in adj}
            if codes == {1}:
                zero_if_0.append(r)
            elif codes == {0}:
                zero_if_1.append(r)
        out.append((zero_if_0, zero_if_1))
    return out


@dataclass
class Lowered:
    model: MipModel
    encoding: Encoding
    original_vars: int
    aux: list[tuple[int, Sos2Group, int]]  # (var index, group, bit / breakpoint)

    def lift(self, values: list[float]) -> list[float]:
        """Extend an assignment of the original variables with auxiliary binaries."""
        out = list(values[: self.original_vars]) + [0.0] * (self.model.num_vars - self.original_vars)
        for j, group, slot in self.aux:
            lam = [values[m] for m in group.members]
            if self.encoding == "incremental":
                tail = math.fsum(lam[slot:])
                out[j] = 1.0 if tail >= 1.0 - 1e-9 else 0.0
            else:
                support = [r for r, x in enumerate(lam) if x > 1e-12]
                seg = min(support[0], len(lam) - 2) if support else 0
                out[j] = float((gray(seg) >> slot) & 1)
        return out

    def project(self, values: list[float]) -> list[float]:
        return list(values[: self.original_vars])


def lower(model: MipModel, encoding: Encoding, relax_convex: bool = True) -> Lowered:
    if encoding not in ("native", "incremental", "log"):
        raise ValueError(f"unknown SOS2 encoding {encoding!r}")
    out = model.copy()
    out.sos2 = []
    aux: list[tuple[int, Sos2Group, int]] = []
    for gi, group in enumerate(model.sos2):
        if relax_convex and group.relaxable:
            continue
        if encoding == "native":
            out.sos2.append(group)
            continue
        lam = group.members
        R = len(lam)
        if encoding == "incremental":
            for s in range(1, R - 1):
                b = out.add_var("sosbin", (gi, s), "B", name=f"{group.name}_b{s}")
                aux.append((b, group, s))
                upper = {lam[r]: 1.0 for r in range(s, R)}
                upper[b] = -1.0
                out.add_constraint("sos2", upper, ">=", 0, f"{group.name}_inc_hi{s}")
                lower_ = {lam[r]: 1.0 for r in range(s + 1, R)}
                lower_[b] = -1.0
                out.add_constraint("sos2", lower_, "<=", 0, f"{group.name}_inc_lo{s}")
        else:
            for bit, (zero_if_0, zero_if_1) in enumerate(log_bit_sets(R)):
                b = out.add_var("sosbin", (gi, bit), "B", name=f"{group.name}_g{bit}")
                aux.append((b, group, bit))
                if zero_if_0:
                    row = {lam[r]: 1.0 for r in zero_if_0}
                    row[b] = -1.0
                    out.add_constraint("sos2", row, "<=", 0, f"{group.name}_log0_{bit}")
                if zero_if_1:
                    row = {lam[r]: 1.0 for r in zero_if_1}
                    row[b] = 1.0
                    out.add_constraint("sos2", row, "<=", 1, f"{group.name}_log1_{bit}")
    return Lowered(out, encoding, model.num_vars, aux)
