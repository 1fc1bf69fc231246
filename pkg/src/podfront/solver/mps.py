"""Fixed-format MPS writer and ``name value`` solution reader.

Column names come from the model (``y_j``, ``x_i_j_s``, ``u_j_s``, ``eta``,
``w_s``, ``z``). Fields follow the fixed-format column positions whenever
names fit in eight characters; longer names widen the name fields for the
whole file (the layout stays whitespace-separated, which fixed-format readers
with long-name support accept).

Both objective rows are written as free (``N``) rows. The active one is listed
first, which is the row MPS readers take as the objective, and is also named
in an ``* ACTIVE`` comment. Objective constants go into the RHS section as
the negated value on the objective row.
"""
from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from ..errors import BackendError
from ..models import BINARY, EQ, GE, INTEGER, LE, MipModel

_SENSE = {LE: "L", GE: "G", EQ: "E"}


def _num(v: float) -> str:
    v = float(v)
    if v.is_integer() and abs(v) < 1e15:
        return str(int(v))
    s = repr(v)
    if len(s) > 12:
        s = f"{v:.12g}"
    return s


class _Lines:
    def __init__(self, width: int):
        self.w = max(8, width)
        self.out: list[str] = []

    def raw(self, s: str):
        self.out.append(s)

    def field(self, code: str, name1: str, name2: str = "", val: str = ""):
        # fixed layout: code at col 2, name at col 5, second name at col 15, value in cols 25-36
        w = self.w
        line = f" {code:<2} {name1:<{w}}"
        if name2:
            line += f"  {name2:<{w}}  {val:>12}"
        self.out.append(line.rstrip())

    def marker(self, label: str, tag: str):
        self.out.append(f"    {label:<{self.w}}  {chr(39) + 'MARKER' + chr(39):<{self.w}}  {'':>12}   {tag}")


def mps_text(model: MipModel, extra_constraints=(), name: str = "PODFRONT") -> str:
    cons = list(model.constraints) + list(extra_constraints)
    row_names = [f"c{k}" for k in range(len(cons))]
    active = model.objective
    obj_rows = [active] + sorted(k for k in model.objectives if k != active)
    width = max([8] + [len(v.name) for v in model.vars] + [len(r) for r in row_names + obj_rows])
    L = _Lines(width)
    L.raw(f"NAME          {name}")
    L.raw(f"* ACTIVE {active}")
    L.raw("ROWS")
    for r in obj_rows:
        L.field("N", r)
    for r, con in zip(row_names, cons):
        L.field(_SENSE[con.sense], r)

    # column-major coefficients
    entries: list[list[tuple[str, float]]] = [[] for _ in model.vars]
    for r in obj_rows:
        for k, c in model.objectives[r].coefs:
            entries[k].append((r, c))
    for r, con in zip(row_names, cons):
        for k, c in con.coefs:
            entries[k].append((r, c))

    L.raw("COLUMNS")
    in_int = False
    marker = 0
    for k, v in enumerate(model.vars):
        want_int = v.kind in (BINARY, INTEGER)
        if want_int != in_int:
            L.marker(f"MARKER{marker:02d}", "'INTORG'" if want_int else "'INTEND'")
            marker += 1
            in_int = want_int
        if not entries[k]:
            # keep empty columns visible to readers
            entries[k].append((obj_rows[0], 0.0))
        for r, c in entries[k]:
            L.field("", v.name, r, _num(c))
    if in_int:
        L.marker(f"MARKER{marker:02d}", "'INTEND'")

    L.raw("RHS")
    for r in obj_rows:
        const = model.objectives[r].const
        if const:
            L.field("", "RHS", r, _num(-const))
    for r, con in zip(row_names, cons):
        if con.rhs:
            L.field("", "RHS", r, _num(con.rhs))

    L.raw("BOUNDS")
    for v in model.vars:
        lb, ub = v.lb, v.ub
        if v.kind == BINARY and lb == 0 and ub == 1:
            L.field("BV", "BND", v.name)
            continue
        if math.isinf(lb) and math.isinf(ub):
            L.field("FR", "BND", v.name)
            continue
        if math.isinf(lb):
            L.field("MI", "BND", v.name)
        elif lb != 0:
            L.field("LO", "BND", v.name, _num(lb))
        if not math.isinf(ub):
            L.field("UP", "BND", v.name, _num(ub))
        elif v.kind == INTEGER:
            # integer columns default to [0, 1] in some readers without an explicit bound
            L.field("PL", "BND", v.name)
    L.raw("ENDATA")
    return "\n".join(L.out) + "\n"


def write_mps(model: MipModel, extra_constraints, path) -> None:
    Path(path).write_text(mps_text(model, extra_constraints), encoding="utf-8", newline="")


def parse_solution(model: MipModel, path):
    """Read a ``name value`` per line solution dump.

    Blank lines and lines starting with ``#`` are skipped. An optional
    ``status <word>`` line reports the solver status; variables not listed
    are zero. Returns ``(status or None, assignment array)``.
    """
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise BackendError(f"cannot read solution file: {exc}") from None
    by_name = {v.name: k for k, v in enumerate(model.vars)}
    x = np.zeros(model.n_vars)
    status = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        parts = s.split()
        if len(parts) != 2:
            raise BackendError(f"solution line {lineno}: expected 'name value', got {s!r}")
        key, val = parts
        if key.lower() == "status":
            status = val
            continue
        if key not in by_name:
            raise BackendError(f"solution line {lineno}: unknown variable {key!r}")
        try:
            x[by_name[key]] = float(val)
        except ValueError:
            raise BackendError(f"solution line {lineno}: bad value {val!r}") from None
    return status, x
