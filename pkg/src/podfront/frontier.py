"""Exact criterion-space search: epsilon-constraint and balanced box.

Both methods start from the lexicographic endpoints

* ``Z^T = lexmin(f1, f2)`` - cheapest solution, worst coverage;
* ``Z^B = lexmin(f2, f1)`` - best coverage at least cost.

The epsilon-constraint sweep walks from ``Z^B`` to ``Z^T`` with ``f2`` as the
main objective and ``f1 <= eps`` as the constraint. The balanced box method
keeps a queue of criterion-space boxes, largest area first, and searches the
bottom half of each box with ``lexmin(f1, f2)`` and the remaining top part
with ``lexmin(f2, f1)``.

Every point comes from an optimal lexicographic solve, so a search cut short
by its time limit still returns only non-dominated points (the front is then
flagged incomplete).
"""
from __future__ import annotations

import heapq
import itertools
import logging
import time
from dataclasses import dataclass

from .core import Box, FrontEntry, ObjectivePoint, ParetoFront, insert_nondominated, same_point
from .errors import EndpointsTimeout
from .models import MipModel, complete_assignment, recompute_f2
from .solver import OPTIMAL, SolveRequest, bound_constraint, lexmin

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SearchConfig:
    d1: float = 1.0
    d2: float = 1e-6
    total_time_limit: float = 7200.0
    per_solve_time_limit: float | None = None
    backend: str | None = None

    def __post_init__(self):
        if self.d2 <= 0:
            raise ValueError("d2 must be positive")
        if self.d1 <= 0:
            raise ValueError("d1 must be positive")


class _Clock:
    def __init__(self, limit: float):
        self.deadline = time.monotonic() + limit

    def remaining(self) -> float:
        return self.deadline - time.monotonic()

    def budget(self, per_solve: float | None) -> float:
        rem = self.remaining()
        return rem if per_solve is None else min(rem, per_solve)


def entry_from(model: MipModel, x) -> FrontEntry:
    """Front entry for an assignment: exact f1, f2 recomputed from the scenario losses."""
    f1 = float(round(model.objective_value(x, "f1")))
    return FrontEntry(ObjectivePoint(f1, recompute_f2(model, x)), model.first_stage(x))


def _lex(model, primary, secondary, extra, clock, cfg, start: FrontEntry | None = None):
    budget = clock.budget(cfg.per_solve_time_limit)
    if budget <= 0:
        return None
    # a known feasible point gives the branch and bound an incumbent from the start
    ws = None if start is None else complete_assignment(model, start.y)
    req = SolveRequest(model, extra_constraints=tuple(extra), warm_start=ws, time_limit=budget)
    res = lexmin(primary, secondary, req, backend=cfg.backend)
    if res.status != OPTIMAL:
        return None
    return entry_from(model, res.assignment)


def endpoints(model: MipModel, cfg: SearchConfig | None = None, clock: _Clock | None = None):
    """``(Z^T, Z^B)`` as front entries."""
    cfg = cfg or SearchConfig()
    clock = clock or _Clock(cfg.total_time_limit)
    top = _lex(model, "f1", "f2", (), clock, cfg)
    if top is None:
        raise EndpointsTimeout("time limit reached before Z^T")
    bottom = _lex(model, "f2", "f1", (), clock, cfg)
    if bottom is None:
        raise EndpointsTimeout("time limit reached before Z^B")
    return top, bottom


def epsilon_constraint(model: MipModel, cfg: SearchConfig | None = None) -> ParetoFront:
    cfg = cfg or SearchConfig()
    clock = _Clock(cfg.total_time_limit)
    top, bottom = endpoints(model, cfg, clock)
    front = insert_nondominated(ParetoFront(), bottom)
    front = insert_nondominated(front, top)
    eps = bottom.f1 - cfg.d1
    while eps >= top.f1:
        e = _lex(model, "f2", "f1", [bound_constraint(model, "f1", eps, "eps")], clock, cfg, top)
        if e is None:
            log.info("epsilon-constraint stopped by the time limit at eps=%g", eps)
            return front.mark_incomplete()
        front = insert_nondominated(front, e)
        eps = e.f1 - cfg.d1
    return front


def balanced_box(model: MipModel, cfg: SearchConfig | None = None) -> ParetoFront:
    cfg = cfg or SearchConfig()
    clock = _Clock(cfg.total_time_limit)
    top, bottom = endpoints(model, cfg, clock)
    front = insert_nondominated(ParetoFront(), bottom)
    front = insert_nondominated(front, top)
    order = itertools.count()
    queue: list = []

    def add_box(zt: FrontEntry, zb: FrontEntry):
        box = Box(zt.point, zb.point)
        # boxes too thin to hold another point are skipped
        if box.bottom.f1 - box.top.f1 <= cfg.d1 or box.top.f2 - box.bottom.f2 <= cfg.d2:
            return
        heapq.heappush(queue, (-box.area, next(order), zt, zb))

    add_box(top, bottom)
    while queue:
        _, _, zt, zb = heapq.heappop(queue)
        mid = 0.5 * (zt.f2 + zb.f2)
        # bottom half: f2 <= midpoint (f1 <= Z^B.f1 is implied by minimising f1)
        zbar_t = _lex(model, "f1", "f2", [bound_constraint(model, "f2", mid, "half")], clock, cfg, zb)
        if zbar_t is None:
            return front.mark_incomplete()
        if not same_point(zbar_t.point, zb.point):
            front = insert_nondominated(front, zbar_t)
            add_box(zbar_t, zb)
        # top part: exclude the column of the point just found
        bound = zbar_t.f1 - cfg.d1
        zbar_b = _lex(model, "f2", "f1", [bound_constraint(model, "f1", bound, "top")], clock, cfg, zt)
        if zbar_b is None:
            return front.mark_incomplete()
        if not same_point(zbar_b.point, zt.point):
            front = insert_nondominated(front, zbar_b)
            add_box(zt, zbar_b)
    return front
