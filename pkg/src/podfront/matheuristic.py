"""Approximate fronts for larger instances.

The sweep follows the epsilon-constraint order (``Z^B`` towards ``Z^T``), but
each subproblem keeps closed every POD that the previous front point had
closed. Lowering the budget ``f1 <= eps`` then only asks which open PODs to
drop, which is a much smaller MILP.

A subproblem that does not finish within ``tilim`` seconds falls back to
rounding its LP relaxation, followed by a few local-branching MILPs around
the rounded point. The asymmetric local-branching row only limits how many
open PODs may close, so closed ones are free to reopen; this is the step
that can undo a bad fixing.

Every reported point is re-scored with the exact recourse, so the front never
contains a point whose coordinates are not achieved by its ``y``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import FrontEntry, ObjectivePoint, ParetoFront, insert_nondominated
from .errors import EndpointsTimeout
from .frontier import SearchConfig, _Clock
from .models import LE, Constraint, MipModel, complete_assignment, constraint, evaluate_point
from .solver import OPTIMAL, SolveRequest, bound_constraint, lexmin, lp_relax

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class MatConfig(SearchConfig):
    tilim: float = 150.0
    l_prime: int = 2
    lb_rounds: int = 5

    def __post_init__(self):
        super().__post_init__()
        if not self.tilim > 0:
            raise ValueError("tilim must be positive")
        if self.l_prime < 1:
            raise ValueError("l_prime must be at least 1")
        if self.lb_rounds < 0:
            raise ValueError("lb_rounds must be non-negative")


@dataclass(frozen=True)
class YRow:
    """A row ``coef @ y <= rhs`` over the first-stage vector."""

    coef: np.ndarray
    rhs: float

    def holds(self, y: Sequence[int]) -> bool:
        return float(self.coef @ np.asarray(y, float)) <= self.rhs + 1e-9

    def on(self, model: MipModel, name: str) -> Constraint:
        ys = model.y_indices
        return constraint({ys[j]: c for j, c in enumerate(self.coef) if c}, LE, self.rhs, name)


def zero_fixing_constraints(y_prev: Sequence[int]) -> tuple[int, ...]:
    """Candidates to keep closed: those closed in ``y_prev``."""
    return tuple(j for j, v in enumerate(y_prev) if not v)


def fixing_rows(model: MipModel, fixed: Sequence[int]) -> tuple[Constraint, ...]:
    ys = model.y_indices
    return tuple(constraint({ys[j]: 1.0}, LE, 0.0, f"fix{j}") for j in fixed)


def local_branching_row(y_ref: Sequence[int], l: int) -> YRow:
    """Hamming ball of radius ``l`` around ``y_ref``."""
    y = np.asarray(y_ref, int)
    # sum_{open}(1 - y_j) + sum_{closed} y_j <= l
    return YRow(np.where(y == 1, -1.0, 1.0), float(l - y.sum()))


def asymmetric_row(y_ref: Sequence[int], l_prime: int) -> YRow:
    """At most ``l_prime`` of the PODs open in ``y_ref`` close; closed ones are free."""
    y = np.asarray(y_ref, int)
    return YRow(-y.astype(float), float(l_prime - y.sum()))


def round_lp(y_frac: Sequence[float], gamma: Sequence[float], eps: float) -> tuple[int, ...]:
    """Open candidates by decreasing LP value while the budget allows.

    A candidate that does not fit is skipped and the next one is tried.
    Candidates at zero stay closed.
    """
    y_frac = np.asarray(y_frac, float)
    out = np.zeros(len(y_frac), int)
    spent = 0.0
    for j in np.argsort(-y_frac, kind="stable"):
        if y_frac[j] <= 1e-9:
            break
        if spent + gamma[j] <= eps + 1e-9:
            out[j] = 1
            spent += gamma[j]
    return tuple(int(v) for v in out)


def _score(model: MipModel, y) -> FrontEntry:
    inst = model.instance
    f1, f2 = evaluate_point(inst, model.scenarios, model.mode, y)
    return FrontEntry(ObjectivePoint(float(f1), float(f2)), tuple(int(v) for v in y))


def _better(a: FrontEntry | None, b: FrontEntry | None, primary: str = "f2") -> FrontEntry | None:
    if a is None or b is None:
        return a or b
    ka = (a.f2, a.f1) if primary == "f2" else (a.f1, a.f2)
    kb = (b.f2, b.f1) if primary == "f2" else (b.f1, b.f2)
    return a if ka <= kb else b


class _Sweep:
    def __init__(self, model: MipModel, cfg: MatConfig):
        self.model = model
        self.cfg = cfg
        self.clock = _Clock(cfg.total_time_limit)
        self.gamma = np.asarray(model.instance.gamma, float)

    def budget(self) -> float:
        limit = self.cfg.tilim if self.cfg.per_solve_time_limit is None else min(self.cfg.tilim, self.cfg.per_solve_time_limit)
        return min(limit, self.clock.remaining())

    def lex(self, primary, secondary, extra, warm=None):
        t = self.budget()
        if t <= 0:
            return None, False
        req = SolveRequest(self.model, extra_constraints=tuple(extra), time_limit=t, warm_start=warm)
        res = lexmin(primary, secondary, req, backend=self.cfg.backend)
        if not res.has_solution:
            return None, False
        return _score(self.model, self.model.first_stage(res.assignment)), res.status == OPTIMAL

    def local_branching(self, start: FrontEntry, extra, primary="f2", secondary="f1") -> FrontEntry:
        """Up to ``lb_rounds`` asymmetric local-branching MILPs from ``start``."""
        best = start
        for _ in range(self.cfg.lb_rounds):
            if self.clock.remaining() <= 0:
                break
            row = asymmetric_row(best.y, self.cfg.l_prime).on(self.model, "lb")
            warm = complete_assignment(self.model, best.y)
            found, _ = self.lex(primary, secondary, list(extra) + [row], warm)
            if found is None or _better(found, best, primary) is best:
                break
            best = found
        return best

    def endpoint(self, primary, secondary, seed_y) -> FrontEntry:
        found, optimal = self.lex(primary, secondary, ())
        if optimal:
            return found
        start = _better(found, _score(self.model, seed_y), primary)
        log.info("endpoint lexmin(%s, %s) not proved within tilim; local branching", primary, secondary)
        if self.clock.remaining() <= 0:
            raise EndpointsTimeout(f"time limit reached before lexmin({primary}, {secondary})")
        return self.local_branching(start, (), primary, secondary)

    def step(self, eps: float, y_prev) -> FrontEntry | None:
        budget_row = bound_constraint(self.model, "f1", eps, "eps")
        fixing = fixing_rows(self.model, zero_fixing_constraints(y_prev))
        found, optimal = self.lex("f2", "f1", (budget_row,) + fixing)
        if optimal:
            return found
        if self.clock.remaining() <= 0:
            return found
        status, _, x = lp_relax(SolveRequest(self.model, extra_constraints=(budget_row,) + fixing))
        if status == OPTIMAL:
            y_frac = x[self.model.y_indices]
            found = _better(found, _score(self.model, round_lp(y_frac, self.gamma, eps)))
        if found is None:
            return None
        return self.local_branching(found, (budget_row,))


def mat_frontier(model: MipModel, cfg: MatConfig | None = None) -> ParetoFront:
    """Approximate front by the fixing / rounding / local-branching sweep."""
    cfg = cfg or MatConfig()
    sw = _Sweep(model, cfg)
    n = model.instance.n_candidates
    top = sw.endpoint("f1", "f2", (0,) * n)
    bottom = sw.endpoint("f2", "f1", (1,) * n)
    front = insert_nondominated(ParetoFront(), bottom)
    front = insert_nondominated(front, top)
    eps = bottom.f1 - cfg.d1
    y_prev = bottom.y
    while eps >= top.f1:
        if sw.clock.remaining() <= 0:
            log.info("matheuristic stopped by the time limit at eps=%g", eps)
            return front.mark_incomplete()
        e = sw.step(eps, y_prev)
        if e is None:
            return front.mark_incomplete()
        front = insert_nondominated(front, e)
        eps = e.f1 - cfg.d1
        y_prev = e.y
    return front
