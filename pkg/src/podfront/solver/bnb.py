"""LP-based branch-and-bound for small MILPs.

Node selection plunges depth first into the child the LP value leans to and,
once a plunge ends, resumes from the best bound (ties: deeper node first, then
creation order). Branching candidates are the fractional binaries, or the
fractional general integers when no binary is fractional; among them the
pseudocost product score decides (ties: lowest index), with short strong
branching solves standing in for pseudocosts that are not yet reliable.
Children warm start the dual simplex from the parent's optimal basis.
"""
from __future__ import annotations

import heapq
import logging
import math
import time
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
import scipy.sparse as sp

from ..errors import NumericalFailure
from ..models import EQ, GE, LE, Constraint, LinExpr, MipModel
from .cuts import gmi_cuts, integral_logicals
from .simplex import INFEASIBLE, Basis, BoundedLP

log = logging.getLogger(__name__)

INT_TOL = 1e-6
FEAS_TOL = 1e-6
# LP noise allowance when comparing a node bound with the incumbent
PRUNE_ABS = 1e-6
PRUNE_REL = 1e-7
CUT_ROUNDS = 20
RELIABLE = 2  # pseudocost observations per side before strong branching stops
STRONG_CANDIDATES = 8
STRONG_ITERS = 20
SCORE_EPS = 1e-6
BIG_GAIN = 1e12


@dataclass
class BnBStats:
    nodes: int = 0
    lp_iterations: int = 0
    best_bound: float = -np.inf


@dataclass(order=True)
class _Node:
    key: tuple
    lo: np.ndarray = field(compare=False)
    hi: np.ndarray = field(compare=False)
    basis: Basis | None = field(compare=False)
    depth: int = field(compare=False, default=0)
    # (variable, went up, distance moved, parent objective) of the branching that made this node
    branch: tuple | None = field(compare=False, default=None)


class _Brancher:
    """Pseudocost branching; unreliable candidates are scored by short strong-branching solves."""

    def __init__(self, asm, stats):
        n = asm.n
        self.asm = asm
        self.stats = stats
        self.sum = np.zeros((2, n))
        self.cnt = np.zeros((2, n))

    def record(self, k: int, up: bool, gain_per_unit: float) -> None:
        if np.isfinite(gain_per_unit):
            self.sum[int(up), k] += max(gain_per_unit, 0.0)
            self.cnt[int(up), k] += 1

    def _average(self, up: int) -> np.ndarray:
        seen = self.cnt[up] > 0
        avg = np.divide(self.sum[up], self.cnt[up], out=np.zeros_like(self.sum[up]), where=seen)
        fallback = avg[seen].mean() if seen.any() else 1.0
        return np.where(seen, avg, fallback)

    def select(self, node, sol, obj: float, cands: np.ndarray) -> int:
        x = sol.x
        f = x[cands] - np.floor(x[cands])
        down_pc, up_pc = self._average(0)[cands], self._average(1)[cands]
        dn, up = down_pc * f, up_pc * (1 - f)
        score = np.maximum(dn, SCORE_EPS) * np.maximum(up, SCORE_EPS)
        unreliable = (self.cnt[0, cands] < RELIABLE) | (self.cnt[1, cands] < RELIABLE)
        if unreliable.any() and sol.basis is not None:
            # most fractional unreliable candidates first (ties: lowest index)
            order = np.argsort(np.abs(f - 0.5)[unreliable], kind="stable")[:STRONG_CANDIDATES]
            for pos in np.flatnonzero(unreliable)[order]:
                k = int(cands[pos])
                gains = []
                for up_side in (0, 1):
                    lo, hi = node.lo.copy(), node.hi.copy()
                    if up_side:
                        lo[k] = math.ceil(x[k])
                    else:
                        hi[k] = math.floor(x[k])
                    try:
                        res = self.asm.lp.solve(lo, hi, sol.basis, max_iter=STRONG_ITERS, partial=True)
                    except NumericalFailure:
                        gains.append(0.0)
                        continue
                    self.stats.lp_iterations += res.iterations
                    if res.status == INFEASIBLE:
                        gains.append(np.inf)
                        continue
                    gain = max(res.objective + self.asm.const - obj, 0.0)
                    dist = (math.ceil(x[k]) - x[k]) if up_side else (x[k] - math.floor(x[k]))
                    self.record(k, bool(up_side), gain / max(dist, 1e-9))
                    gains.append(gain)
                score[pos] = max(min(gains[0], BIG_GAIN), SCORE_EPS) * max(min(gains[1], BIG_GAIN), SCORE_EPS)
        best = np.flatnonzero(score >= score.max() * (1 - 1e-12))
        return int(cands[best[0]])


def _lattice(coefs) -> float:
    """gcd of rational coefficients, 0 if one is not a small-denominator rational."""
    fracs = []
    for c in coefs:
        f = Fraction(c).limit_denominator(10_000)
        if abs(float(f) - c) > 1e-12 * max(1.0, abs(c)):
            return 0.0
        fracs.append(abs(f))
    if not fracs:
        return 0.0
    num, den = 0, 1
    for f in fracs:
        den = den * f.denominator // math.gcd(den, f.denominator)
    for f in fracs:
        num = math.gcd(num, f.numerator * (den // f.denominator))
    return num / den


def objective_step(obj: LinExpr, model: MipModel) -> float:
    """Granularity of the objective over integer solutions, 0 if none can be inferred.

    When every variable in the objective is integer and every coefficient is a
    (small-denominator) rational, objective values lie on a lattice of width
    gcd(numerators) / lcm(denominators).
    """
    if any(not model.vars[k].is_integer for k, _ in obj.coefs):
        return 0.0
    return _lattice([c for _, c in obj.coefs])


class Assembled:
    """Model plus extra rows in array form; singleton rows become bounds.

    With ``tighten`` the sides of all-integer rows are rounded onto the lattice
    of values the row can take and integer bounds are rounded inward (presolve
    steps valid for integer points only).
    """

    def __init__(self, model: MipModel, obj: LinExpr, extra=(), tighten: bool = True):
        n = model.n_vars
        self.model = model
        self.n = n
        lo = np.array([v.lb for v in model.vars], dtype=float)
        hi = np.array([v.ub for v in model.vars], dtype=float)
        self.is_int = np.array([v.is_integer for v in model.vars])
        self.is_bin = np.array([v.kind == "binary" for v in model.vars])
        # first-stage variables are branched on before anything else
        self.first = np.zeros(n, bool)
        for key, k in model.varmap.items():
            if key and key[0] == "y":
                self.first[k] = True
        rows, cols, vals, rl, ru = [], [], [], [], []
        self.trivially_infeasible = False
        r = 0
        for con in list(model.constraints) + list(extra):
            coefs = [(k, c) for k, c in con.coefs if c != 0.0]
            lower = con.rhs if con.sense in (GE, EQ) else -np.inf
            upper = con.rhs if con.sense in (LE, EQ) else np.inf
            if tighten and coefs and all(self.is_int[k] for k, _ in coefs):
                g = _lattice([c for _, c in coefs])
                if g > 0:
                    # integer rows: sides snap onto the lattice of attainable values
                    if np.isfinite(lower):
                        lower = math.ceil(lower / g - 1e-9) * g
                    if np.isfinite(upper):
                        upper = math.floor(upper / g + 1e-9) * g
            if not coefs:
                if lower > FEAS_TOL or upper < -FEAS_TOL:
                    self.trivially_infeasible = True
                continue
            if len(coefs) == 1:
                k, c = coefs[0]
                bl, bu = (lower / c, upper / c) if c > 0 else (upper / c, lower / c)
                lo[k] = max(lo[k], bl)
                hi[k] = min(hi[k], bu)
                continue
            for k, c in coefs:
                rows.append(r)
                cols.append(k)
                vals.append(c)
            rl.append(lower)
            ru.append(upper)
            r += 1
        # integer bounds snap inward
        if tighten:
            lo = np.where(self.is_int & np.isfinite(lo), np.ceil(lo - INT_TOL), lo)
            hi = np.where(self.is_int & np.isfinite(hi), np.floor(hi + INT_TOL), hi)
        self.lo, self.hi = lo, hi
        self.rl, self.ru = np.array(rl, dtype=float), np.array(ru, dtype=float)
        self.A = sp.csc_matrix((vals, (rows, cols)), shape=(r, n))
        self.c = np.zeros(n)
        for k, c in obj.coefs:
            self.c[k] += c
        self.const = obj.const
        self.lp = BoundedLP(self.A, self.c, self.rl, self.ru)
        self.extra = tuple(extra)
        self.n_cuts = 0

    def add_cuts(self, cuts) -> None:
        """Append rows ``coef @ x >= rhs`` to the LP (not to the model)."""
        if not cuts:
            return
        C = sp.csc_matrix(np.array([c for c, _ in cuts]))
        b = np.array([b for _, b in cuts])
        self.A = sp.vstack([self.A, C], format="csc")
        self.rl = np.concatenate([self.rl, b])
        self.ru = np.concatenate([self.ru, np.full(b.size, np.inf)])
        self.lp = BoundedLP(self.A, self.c, self.rl, self.ru)
        self.n_cuts += len(cuts)

    def feasible(self, x) -> bool:
        return self.model.max_violation(x, self.extra) <= FEAS_TOL


@dataclass
class BnBResult:
    status: str  # "optimal" | "infeasible" | "feasible_timeout" | "nosolution_timeout"
    objective: float
    x: np.ndarray | None
    stats: BnBStats


def branch_and_bound(
    asm: Assembled,
    *,
    deadline: float = np.inf,
    gap_tolerance: float = 0.0,
    warm_start=None,
    step: float = 0.0,
    cut_rounds: int = CUT_ROUNDS,
) -> BnBResult:
    stats = BnBStats()
    if asm.trivially_infeasible or np.any(asm.lo > asm.hi + FEAS_TOL):
        return BnBResult("infeasible", np.inf, None, stats)
    inc_x, inc_obj = None, np.inf
    if warm_start is not None:
        ws = np.asarray(warm_start, dtype=float)
        ws = np.where(asm.is_int, np.round(ws), ws)
        if asm.feasible(ws):
            inc_x, inc_obj = ws, float(asm.c @ ws) + asm.const

    def prune_level():
        # nodes with bound >= this cannot improve the incumbent
        if not np.isfinite(inc_obj):
            return np.inf
        slack = max(gap_tolerance * max(1.0, abs(inc_obj)), PRUNE_ABS + PRUNE_REL * abs(inc_obj))
        if step > 0:
            slack = max(slack, step - 1e-6 * max(1.0, step))
        return inc_obj - slack

    root_basis = None
    if cut_rounds > 0 and asm.is_int.any() and asm.A.shape[0] > 0:
        known = [inc_x] if inc_x is not None else []
        root_basis = _root_cuts(asm, cut_rounds, known, stats, deadline)

    brancher = _Brancher(asm, stats)
    counter = 0
    heap: list[_Node] = []
    heapq.heappush(heap, _Node((-np.inf, 0, counter), asm.lo.copy(), asm.hi.copy(), root_basis, 0))
    plunge: _Node | None = None
    timed_out = False
    while heap or plunge is not None:
        if time.monotonic() > deadline:
            timed_out = True
            if plunge is not None:
                heapq.heappush(heap, plunge)
            break
        if plunge is not None:
            node, plunge = plunge, None
        else:
            node = heapq.heappop(heap)
        bound = node.key[0]
        if bound >= prune_level():
            if not heap:
                break
            continue
        try:
            sol = asm.lp.solve(node.lo, node.hi, node.basis)
        except NumericalFailure:
            if node.basis is None:
                raise
            log.debug("warm start failed numerically; solving the node from scratch")
            sol = asm.lp.solve(node.lo, node.hi)
        stats.nodes += 1
        stats.lp_iterations += sol.iterations
        if sol.status == INFEASIBLE:
            continue
        obj = sol.objective + asm.const
        if node.branch is not None:
            k0, up0, dist0, parent_obj = node.branch
            brancher.record(k0, up0, (obj - parent_obj) / max(dist0, 1e-9))
        if obj >= prune_level():
            continue
        x = sol.x
        frac = np.abs(x - np.round(x))
        frac_int = np.where(asm.is_int, frac, 0.0)
        if frac_int.max(initial=0.0) <= INT_TOL:
            cand = _polish(asm, x, sol.basis)
            if cand is not None:
                val = float(asm.c @ cand) + asm.const
                if val < inc_obj:
                    inc_x, inc_obj = cand, val
            continue
        cands = np.flatnonzero(asm.first & (frac_int > INT_TOL))
        if cands.size == 0:
            cands = np.flatnonzero(asm.is_bin & (frac_int > INT_TOL))
        if cands.size == 0:
            cands = np.flatnonzero(asm.is_int & (frac_int > INT_TOL))
        k = brancher.select(node, sol, obj, cands)
        v = x[k]
        children = []
        for lo_k, hi_k in ((node.lo[k], math.floor(v)), (math.ceil(v), node.hi[k])):
            if lo_k > hi_k or (lo_k == node.lo[k] and hi_k == node.hi[k]):
                continue
            lo, hi = node.lo.copy(), node.hi.copy()
            lo[k], hi[k] = lo_k, hi_k
            counter += 1
            up = lo_k > node.lo[k]
            dist = (math.ceil(v) - v) if up else (v - math.floor(v))
            children.append(_Node((obj, -(node.depth + 1), counter), lo, hi, sol.basis, node.depth + 1,
                                  (k, up, dist, obj)))
        # dive into the child on the side the LP value leans to (up on exact halves)
        if len(children) == 2 and v - math.floor(v) >= 0.5:
            children.reverse()
        if children:
            plunge = children[0]
            for ch in children[1:]:
                heapq.heappush(heap, ch)
    stats.best_bound = min([n.key[0] for n in heap], default=inc_obj)
    if timed_out:
        if inc_x is None:
            return BnBResult("nosolution_timeout", np.inf, None, stats)
        return BnBResult("feasible_timeout", inc_obj, inc_x, stats)
    if inc_x is None:
        return BnBResult("infeasible", np.inf, None, stats)
    return BnBResult("optimal", inc_obj, inc_x, stats)


def _polish(asm: Assembled, x, basis):
    """Feasible point from an LP solution that is integral up to ``INT_TOL``.

    Rounding the integers can leave rows violated by a few tolerances when
    continuous variables were computed for the unrounded values; those are
    re-solved with the integers fixed.
    """
    cand = np.where(asm.is_int, np.round(x), x)
    if asm.feasible(cand):
        return cand
    lo = np.where(asm.is_int, cand, asm.lo)
    hi = np.where(asm.is_int, cand, asm.hi)
    sol = asm.lp.solve(lo, hi, basis)
    if sol.status != "optimal":
        log.debug("integer rounding of an LP vertex is infeasible")
        return None
    cand = np.where(asm.is_int, np.round(sol.x), sol.x)
    return cand if asm.feasible(cand) else None


def _root_cuts(asm: Assembled, rounds: int, known, stats: BnBStats, deadline: float):
    """Strengthen the root LP with rounds of GMI cuts; returns the last root basis."""
    row_int = integral_logicals(asm.A.tocsr(), asm.is_int)
    last = None
    basis = None
    stale = 0
    for _ in range(rounds):
        if time.monotonic() > deadline:
            break
        sol = asm.lp.solve(asm.lo, asm.hi)
        stats.lp_iterations += sol.iterations
        if sol.status == INFEASIBLE:
            return None
        basis = sol.basis
        if last is not None:
            stale = stale + 1 if sol.objective - last <= 1e-6 * max(1.0, abs(last)) else 0
            if stale >= 2:
                break
        last = sol.objective
        cuts = gmi_cuts(asm.lp, sol.basis, asm.lo, asm.hi, asm.is_int, row_int, sol.x)
        # a cut separating a known feasible point is numerically wrong
        cuts = [(c, b - 1e-9 * (1.0 + abs(b))) for c, b in cuts
                if all(c @ p >= b - 1e-7 for p in known)]
        if not cuts:
            break
        asm.add_cuts(cuts)
        row_int = np.concatenate([row_int, np.zeros(len(cuts), bool)])
        basis = None
    if basis is None:
        return None
    return None if basis.head.size != asm.lp.m else basis


def lp_bound(asm: Assembled):
    """Root LP relaxation: ``(status, objective, x)``."""
    if asm.trivially_infeasible:
        return INFEASIBLE, np.inf, None
    sol = asm.lp.solve(asm.lo, asm.hi)
    if sol.status == INFEASIBLE:
        return INFEASIBLE, np.inf, None
    return "optimal", sol.objective + asm.const, sol.x
