"""Bi-objective primitives: points, dominance, non-dominated fronts and boxes.

Both objectives are minimised. ``f1`` is an opening cost and is compared
exactly; ``f2`` is a (risk-adjusted) uncovered demand and is compared with an
absolute tolerance ``TAU2`` because CVaR values carry rounding noise.
"""
from __future__ import annotations

import bisect
import csv
import io
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Iterator, NamedTuple, Sequence

from .errors import EmptyFront, ParseError

TAU2 = 1e-6


class ObjectivePoint(NamedTuple):
    f1: float
    f2: float


@dataclass(frozen=True)
class FrontEntry:
    point: ObjectivePoint
    y: tuple[int, ...] = ()

    @property
    def f1(self) -> float:
        return self.point.f1

    @property
    def f2(self) -> float:
        return self.point.f2


@dataclass(frozen=True)
class ParetoFront:
    """Mutually non-dominated entries sorted by increasing ``f1``.

    ``complete`` is False when the search producing the front stopped early
    (time limit); the entries are still non-dominated for the model.
    """

    entries: tuple[FrontEntry, ...] = ()
    complete: bool = True

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[FrontEntry]:
        return iter(self.entries)

    def __getitem__(self, k: int) -> FrontEntry:
        return self.entries[k]

    @property
    def points(self) -> list[ObjectivePoint]:
        return [e.point for e in self.entries]

    def mark_incomplete(self) -> "ParetoFront":
        return replace(self, complete=False)


@dataclass(frozen=True)
class Box:
    """Criterion-space rectangle spanned by ``top`` (low f1, high f2) and ``bottom``."""

    top: ObjectivePoint
    bottom: ObjectivePoint

    def __post_init__(self):
        if self.top.f1 > self.bottom.f1 or self.bottom.f2 > self.top.f2 + TAU2:
            raise ValueError(f"not a box: top={self.top}, bottom={self.bottom}")

    @property
    def area(self) -> float:
        return (self.bottom.f1 - self.top.f1) * (self.top.f2 - self.bottom.f2)


def same_point(a: ObjectivePoint, b: ObjectivePoint, tol: float = TAU2) -> bool:
    return a.f1 == b.f1 and abs(a.f2 - b.f2) <= tol


def dominates(a: ObjectivePoint, b: ObjectivePoint, tol: float = TAU2) -> bool:
    """True iff ``a`` is no worse than ``b`` in both objectives and better in one."""
    if a.f1 > b.f1 or a.f2 > b.f2 + tol:
        return False
    return a.f1 < b.f1 or a.f2 < b.f2 - tol


def insert_nondominated(front: ParetoFront, e: FrontEntry) -> ParetoFront:
    """Return ``front`` with ``e`` added and everything ``e`` dominates removed.

    If ``e`` is dominated by, or coincides with, an existing entry the front is
    returned unchanged (first-found entry wins ties).
    """
    p = e.point
    for old in front.entries:
        if dominates(old.point, p) or same_point(old.point, p):
            return front
    kept = [old for old in front.entries if not dominates(p, old.point)]
    keys = [old.f1 for old in kept]
    kept.insert(bisect.bisect_right(keys, p.f1), e)
    return replace(front, entries=tuple(kept))


def build_front(entries: Iterable[FrontEntry], complete: bool = True) -> ParetoFront:
    front = ParetoFront(complete=complete)
    for e in entries:
        front = insert_nondominated(front, e)
    return front


def nadir(front: ParetoFront | Sequence[ObjectivePoint]) -> ObjectivePoint:
    pts = front.points if isinstance(front, ParetoFront) else list(front)
    if not pts:
        raise EmptyFront("nadir of an empty front")
    return ObjectivePoint(max(p.f1 for p in pts), max(p.f2 for p in pts))


def fronts_equal(a: ParetoFront, b: ParetoFront, tol: float = TAU2) -> bool:
    """Point-set equality, f1 exact and f2 within ``tol``."""
    pa, pb = sorted(a.points), sorted(b.points)
    return len(pa) == len(pb) and all(same_point(x, y, tol) for x, y in zip(pa, pb))


# -- CSV -------------------------------------------------------------------

FRONT_HEADER = ("f1", "f2", "y_bits")


def format_number(v: float) -> str:
    v = float(v)
    if v.is_integer() and abs(v) < 2**53:
        return str(int(v))
    return repr(v)


def front_to_csv(front: ParetoFront) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(FRONT_HEADER)
    for e in front.entries:
        w.writerow([format_number(e.f1), format_number(e.f2), "".join(str(int(b)) for b in e.y)])
    return buf.getvalue()


def write_front(front: ParetoFront, path) -> None:
    Path(path).write_text(front_to_csv(front), encoding="utf-8", newline="")


def read_front(path) -> ParetoFront:
    text = Path(path).read_text(encoding="utf-8")
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or tuple(rows[0]) != FRONT_HEADER:
        raise ParseError(f"expected header {','.join(FRONT_HEADER)}", line=1)
    entries = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != 3:
            raise ParseError(f"expected 3 fields, got {len(row)}", line=lineno)
        try:
            f1, f2 = float(row[0]), float(row[1])
        except ValueError as exc:
            raise ParseError(str(exc), line=lineno) from None
        if set(row[2]) - {"0", "1"}:
            raise ParseError(f"bad y_bits {row[2]!r}", line=lineno)
        entries.append(FrontEntry(ObjectivePoint(f1, f2), tuple(int(c) for c in row[2])))
    entries.sort(key=lambda e: e.f1)
    return ParetoFront(tuple(entries))
