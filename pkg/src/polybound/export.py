"""Write lifted models for external solvers.

``mps-fixed`` follows the classical fixed-column MPS layout (fields start
at columns 2, 5, 15, 25, 40 and 50; names are at most 8 characters and
numbers at most 12).  Binary columns sit inside an ``INTORG``/``INTEND``
marker block with explicit ``[0, 1]`` bounds.  Names that do not fit are
replaced by ``C<n>``/``R<n>`` and the replacements are returned so they can
be saved next to the file.  The objective constant is written as the right
hand side of the objective row with its sign flipped, the usual convention
for an objective offset.  Numbers are shortened to fit the 12-character
field, so the MPS text is not lossless; ``native-json`` is.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .model import MilpModel

NAME_WIDTH = 8
NUMBER_WIDTH = 12
FORMATS = ("mps-fixed", "native-json")


@dataclass
class ExportResult:
    data: bytes
    renamed: dict[str, str] = field(default_factory=dict)  # new name -> original name


def mps_number(v: float) -> str:
    """Shortest decimal form of ``v`` that fits in 12 characters."""
    v = float(v)
    if v == int(v) and abs(v) < 1e11:
        return str(int(v))
    s = repr(v)
    if len(s) <= NUMBER_WIDTH:
        return s
    for p in range(NUMBER_WIDTH, 0, -1):
        s = f"{v:.{p}g}"
        if len(s) <= NUMBER_WIDTH:
            return s
    raise ValueError(f"cannot write {v} in {NUMBER_WIDTH} characters")


def _line(f1: str = "", f2: str = "", f3: str = "", f4: str = "", f5: str = "", f6: str = "") -> str:
    # columns 2-3, 5-12, 15-22, 25-36, 40-47, 50-61
    s = f" {f1:<2} {f2:<8}  {f3:<8}  {f4:>12}"
    if f5:
        s += f"   {f5:<8}  {f6:>12}"
    return s.rstrip()


def _short_names(names: list[str], prefix: str) -> tuple[list[str], dict[str, str]]:
    """Keep fitting, unique, space-free names; replace the rest deterministically."""
    taken = set()
    fits = []
    for n in names:
        ok = len(n) <= NAME_WIDTH and " " not in n and n and n not in taken and not n.startswith("$")
        fits.append(ok)
        if ok:
            taken.add(n)
    out, renamed = [], {}
    k = 0
    for n, ok in zip(names, fits):
        if ok:
            out.append(n)
            continue
        while True:
            k += 1
            cand = f"{prefix}{k}"
            if cand not in taken:
                break
        taken.add(cand)
        out.append(cand)
        renamed[cand] = n
    return out, renamed


def write_mps(model: MilpModel) -> ExportResult:
    cols, ren_c = _short_names(model.variables, "C")
    rows, ren_r = _short_names([r.label or f"row{i + 1}" for i, r in enumerate(model.rows)], "R")
    obj = "OBJ"
    while obj in rows:
        obj = "_" + obj
    name = model.name if len(model.name) <= NAME_WIDTH else model.name[:NAME_WIDTH]
    out = [f"NAME          {name}", "ROWS", _line("N", obj)]
    kind = {"<=": "L", ">=": "G", "==": "E"}
    for r, rn in zip(model.rows, rows):
        out.append(_line(kind[r.rel], rn))
    out.append("COLUMNS")
    # column-major entries, keeping row order
    entries: dict[str, list[tuple[str, float]]] = {v: [] for v in model.variables}
    for v, c in model.objective.terms.items():
        entries[v].append((obj, c))
    for r, rn in zip(model.rows, rows):
        for v, c in r.coefs.items():
            if c != 0.0:
                entries[v].append((rn, c))
    nb = model.n_binaries
    for j, (v, cn) in enumerate(zip(model.variables, cols)):
        if j == 0 and nb:
            out.append(_line("", "MARKER", "'MARKER'", "", "'INTORG'"))
        if j == nb and nb:
            out.append(_line("", "MARKER", "'MARKER'", "", "'INTEND'"))
        es = entries[v]
        if not es:
            # keep the column declared even if it appears nowhere
            es = [(obj, 0.0)]
        for a in range(0, len(es), 2):
            pair = es[a : a + 2]
            f = [cn, pair[0][0], mps_number(pair[0][1])]
            if len(pair) > 1:
                f += [pair[1][0], mps_number(pair[1][1])]
            out.append(_line("", *f))
    if nb and nb == len(model.variables):
        out.append(_line("", "MARKER", "'MARKER'", "", "'INTEND'"))
    out.append("RHS")
    if model.objective.constant != 0.0:
        out.append(_line("", "RHS", obj, mps_number(-model.objective.constant)))
    for r, rn in zip(model.rows, rows):
        if r.rhs != 0.0:
            out.append(_line("", "RHS", rn, mps_number(r.rhs)))
    out.append("BOUNDS")
    for j, cn in enumerate(cols):
        if j < nb:
            out.append(_line("UP", "BND", cn, "1"))
            continue
        _, lo, hi = model.continuous[j - nb]
        if lo != 0.0:
            out.append(_line("LO", "BND", cn, mps_number(lo)))
        out.append(_line("UP", "BND", cn, mps_number(hi)))
    out.append("ENDATA")
    renamed = {**ren_c, **ren_r}
    return ExportResult(("\n".join(out) + "\n").encode("ascii"), renamed)


def export_milp(model: MilpModel, fmt: str = "mps-fixed") -> ExportResult:
    """Serialize ``model`` as ``mps-fixed`` or ``native-json``."""
    if fmt == "mps-fixed":
        return write_mps(model)
    if fmt == "native-json":
        # repr-based float output in json round-trips every coefficient exactly
        return ExportResult((json.dumps(model.to_dict(), indent=1) + "\n").encode("utf-8"))
    raise ValueError(f"unknown export format {fmt!r}; expected one of {FORMATS}")


def load_native_json(data: bytes | str) -> MilpModel:
    return MilpModel.from_dict(json.loads(data))


__all__ = ["ExportResult", "export_milp", "write_mps", "load_native_json", "mps_number", "FORMATS"]
