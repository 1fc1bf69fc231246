"""Bounded dual simplex on a product-form basis inverse.

The LP is ``min c.x  s.t.  rl <= A x <= ru,  l <= x <= u``. Each row gets a
logical variable ``r = A x``, so the working system is ``[A  -I] v = 0`` with
every variable boxed (bounds may be infinite).

The solver starts from the all-logical basis with each structural placed at
the bound its cost prefers, which is dual feasible once infinite bounds are
replaced by large artificial ones. Bound changes made by branch-and-bound
keep a solved basis dual feasible, so child nodes warm start from the parent
basis and usually need only a handful of pivots.

The basis inverse is a sparse LU factorisation followed by a short chain of
eta factors, refactorised every ``REFACTOR_EVERY`` pivots. Factorisations of
bases reached by earlier solves are cached for warm starts.

Pivot selection: the most infeasible basic variable leaves; the entering
variable comes from the textbook dual ratio test with ties broken by pivot
magnitude. After ``STALL_LIMIT`` pivots without objective progress the rule
switches to Bland's (lowest index) so degenerate cycling cannot persist.
"""
from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from ..errors import NumericalFailure

AT_LOWER, AT_UPPER, FREE = 0, 1, 2
OPTIMAL, INFEASIBLE, ITER_LIMIT = "optimal", "infeasible", "iteration_limit"

PRIMAL_TOL = 1e-9
DUAL_TOL = 1e-9
PIVOT_TOL = 1e-9
REL_PIVOT_TOL = 1e-7
REFACTOR_EVERY = 16  # eta factors before the basis is factorised afresh
STALL_LIMIT = 200
CACHE_SIZE = 64  # basis inverses kept for warm starts


class Inverse:
    """``B^-1 = E_k ... E_1 L U`` solves: a sparse LU of the basis matrix and eta factors.

    Each eta factor is ``E = I - (col - e_r) e_r^T / col[r]`` for a pivot in row
    ``r`` with entering column ``col = B^-1 a_q``. The LU object is never
    modified, so inverses derived from one another share it safely.
    """

    __slots__ = ("lu", "etas")

    def __init__(self, lu, etas=()):
        self.lu = lu
        self.etas = list(etas)

    def copy(self) -> "Inverse":
        return Inverse(self.lu, self.etas)

    def ftran(self, v: np.ndarray) -> np.ndarray:
        """``B^-1 v``."""
        u = self.lu.solve(np.asarray(v, dtype=float))
        for r, col in self.etas:
            t = u[r] / col[r]
            if t != 0.0:
                u -= col * t
                u[r] = t
        return u

    def btran(self, w: np.ndarray) -> np.ndarray:
        """``w^T B^-1``."""
        w = np.array(w, dtype=float)
        for r, col in reversed(self.etas):
            w[r] -= (w @ col - w[r]) / col[r]
        return self.lu.solve(w, trans="T")

    def row(self, r: int) -> np.ndarray:
        e = np.zeros(self.lu.shape[0])
        e[r] = 1.0
        return self.btran(e)

    def push(self, r: int, col: np.ndarray) -> None:
        self.etas.append((r, col))


@dataclass
class Basis:
    """Snapshot of a basis: ``head[r]`` is the variable basic in row ``r``."""

    head: np.ndarray
    status: np.ndarray
    value: np.ndarray

    def copy(self) -> "Basis":
        return Basis(self.head.copy(), self.status.copy(), self.value.copy())


@dataclass
class LPSolution:
    status: str
    objective: float
    x: np.ndarray | None
    basis: Basis | None
    iterations: int


class BoundedLP:
    """Fixed constraint matrix and costs; bounds are supplied per solve."""

    def __init__(self, A, c, rl, ru):
        A = sp.csc_matrix(A, dtype=float)
        self.m, self.n = A.shape
        self.A_full = sp.hstack([A, -sp.identity(self.m, format="csc")], format="csc")
        self.At_full = self.A_full.T.tocsr()
        self.c_full = np.concatenate([np.asarray(c, dtype=float), np.zeros(self.m)])
        self.rl = np.asarray(rl, dtype=float)
        self.ru = np.asarray(ru, dtype=float)
        self._cache: OrderedDict[bytes, Inverse] = OrderedDict()

    # -- helpers -------------------------------------------------------------

    def _column(self, j):
        A = self.A_full
        s, e = A.indptr[j], A.indptr[j + 1]
        return A.indices[s:e], A.data[s:e]

    def _dense_column(self, j):
        rows, vals = self._column(j)
        v = np.zeros(self.m)
        v[rows] = vals
        return v

    def _invert(self, head) -> Inverse:
        B = self.A_full[:, head].tocsc()
        try:
            return Inverse(splu(B))
        except RuntimeError:
            raise NumericalFailure("singular basis matrix") from None

    def _remember(self, head, inv: Inverse):
        key = head.tobytes()
        self._cache[key] = inv
        self._cache.move_to_end(key)
        while len(self._cache) > CACHE_SIZE:
            self._cache.popitem(last=False)

    def inverse(self, head) -> Inverse | None:
        """Cached inverse of the basis ``head``, if a solve ended there recently."""
        inv = self._cache.get(head.tobytes())
        return None if inv is None else inv.copy()

    def initial_basis(self, lo, hi) -> Basis:
        n, m = self.n, self.m
        ntot = n + m
        head = np.arange(n, ntot)
        status = np.full(ntot, AT_LOWER, dtype=np.int8)
        value = np.zeros(ntot)
        c = self.c_full[:n]
        flo, fhi = np.isfinite(lo[:n]), np.isfinite(hi[:n])
        to_lo = (c > 0) | ((c == 0) & flo)
        to_hi = ~to_lo & ((c < 0) | fhi)
        free = ~to_lo & ~to_hi
        status[:n][to_hi] = AT_UPPER
        status[:n][free] = FREE
        value[:n] = np.where(to_lo, lo[:n], np.where(to_hi, hi[:n], 0.0))
        return Basis(head, status, value)

    # -- main entry -----------------------------------------------------------

    def solve(self, l, u, basis: Basis | None = None, max_iter: int | None = None,
              partial: bool = False) -> LPSolution:
        """Solve with column bounds ``l, u``; ``basis`` must be dual feasible if given.

        With ``partial`` an exhausted ``max_iter`` returns status ``ITER_LIMIT``
        and the current (dual) objective as an estimate instead of raising.
        """
        lo = np.concatenate([np.asarray(l, float), self.rl])
        hi = np.concatenate([np.asarray(u, float), self.ru])
        if np.any(lo > hi + PRIMAL_TOL):
            return LPSolution(INFEASIBLE, np.inf, None, None, 0)
        big = 1e7
        total_iter = 0
        while True:
            bs = self.initial_basis(lo, hi) if basis is None else basis.copy()
            work_lo, work_hi, artificial = self._artificial_bounds(lo, hi, bs, big)
            status, inv, iters = self._dual(work_lo, work_hi, bs, max_iter, partial)
            total_iter += iters
            if status == ITER_LIMIT:
                return LPSolution(ITER_LIMIT, float(self.c_full @ bs.value), None, None, total_iter)
            if status == INFEASIBLE:
                if artificial.any() and big < 1e11:
                    # artificial boxes can only shrink the feasible set if they bind
                    big *= 1e2
                    basis = None
                    continue
                return LPSolution(INFEASIBLE, np.inf, None, None, total_iter)
            ok = self._release_artificial(lo, hi, bs, inv)
            if ok:
                break
            if big >= 1e11:
                raise NumericalFailure("LP appears unbounded")
            big *= 1e2
            basis = None
        x = bs.value.copy()
        self._remember(bs.head, inv)
        obj = float(self.c_full @ x)
        return LPSolution(OPTIMAL, obj, x[: self.n], bs, total_iter)

    def _artificial_bounds(self, lo, hi, bs: Basis, big):
        work_lo, work_hi = lo.copy(), hi.copy()
        nonbasic = np.ones(lo.size, bool)
        nonbasic[bs.head] = False
        st = bs.status
        at_lo = nonbasic & (st == AT_LOWER)
        at_hi = nonbasic & (st == AT_UPPER)
        art_lo = at_lo & ~np.isfinite(lo)
        art_hi = at_hi & ~np.isfinite(hi)
        work_lo[art_lo] = -big
        work_hi[art_hi] = big
        bs.value[at_lo] = work_lo[at_lo]
        bs.value[at_hi] = work_hi[at_hi]
        return work_lo, work_hi, art_lo | art_hi

    # -- dual simplex ------------------------------------------------------------

    def _dual(self, lo, hi, bs: Basis, max_iter, partial=False):
        m = self.m
        ntot = self.n + m
        head, status, value = bs.head, bs.status, bs.value
        if max_iter is None:
            max_iter = 50 * (ntot + 10)
        inv = self.inverse(head)
        if inv is None:
            inv = self._invert(head)
        elif len(inv.etas) >= REFACTOR_EVERY:
            inv = self._invert(head)
        fresh = not inv.etas
        A, At, c = self.A_full, self.At_full, self.c_full
        is_basic = np.zeros(ntot, bool)
        is_basic[head] = True
        movable = lo != hi
        banned = np.zeros(ntot, bool)  # columns whose pivot failed the accuracy check
        skip_rows = np.zeros(m, bool)  # leaving rows with no acceptable column
        bland = False
        best_obj, stall = -np.inf, 0
        for it in range(max_iter + 1):
            x_nb = np.where(is_basic, 0.0, value)
            xB = -inv.ftran(A @ x_nb)
            value[head] = xB
            tol = PRIMAL_TOL * (1.0 + np.abs(xB))
            below = lo[head] - xB
            above = xB - hi[head]
            viol = np.maximum(below, above)
            cand = viol > tol
            if not cand.any():
                return OPTIMAL, inv, it
            cand &= ~skip_rows
            if not cand.any():
                raise NumericalFailure("no numerically acceptable pivot")
            if it == max_iter:
                if partial:
                    return ITER_LIMIT, inv, it
                raise NumericalFailure(f"dual simplex exceeded {max_iter} iterations")

            obj = float(c @ value)
            if obj > best_obj + 1e-12 * (1.0 + abs(obj)):
                best_obj, stall = obj, 0
            else:
                stall += 1
                if stall > STALL_LIMIT:
                    bland = True

            if bland:
                rows = np.flatnonzero(cand)
                r = int(rows[np.argmin(head[rows])])
            else:
                r = int(np.argmax(np.where(cand, viol, -np.inf)))
            go_up = below[r] > above[r]

            alpha = At @ inv.row(r)
            y = inv.btran(c[head])
            d = c - At @ y
            a = alpha if go_up else -alpha
            elig = ~is_basic & movable & ~banned & (
                ((status == AT_LOWER) & (a < -PIVOT_TOL))
                | ((status == AT_UPPER) & (a > PIVOT_TOL))
                | ((status == FREE) & (np.abs(a) > PIVOT_TOL))
            )
            idx = np.flatnonzero(elig)
            if idx.size == 0:
                if banned.any():
                    # every candidate column failed for this row; try another leaving row
                    skip_rows[r] = True
                    banned[:] = False
                    continue
                return INFEASIBLE, inv, it
            ratios = np.abs(d[idx]) / np.abs(alpha[idx])
            rmin = ratios.min()
            ties = idx[ratios <= rmin + DUAL_TOL]
            if bland:
                q = int(ties.min())
            else:
                q = int(ties[np.argmax(np.abs(alpha[ties]))])

            col = inv.ftran(self._dense_column(q))
            piv = col[r]
            if abs(piv) < REL_PIVOT_TOL * max(1.0, np.abs(col).max()):
                banned[q] = True
                continue
            if abs(piv - alpha[q]) > 1e-6 * (1.0 + abs(piv)):
                if fresh:
                    # the fresh factorisation still disagrees: try another column
                    banned[q] = True
                    continue
                inv = self._invert(head)
                fresh = True
                continue

            p = int(head[r])
            if go_up:
                status[p], value[p] = AT_LOWER, lo[p]
            else:
                status[p], value[p] = AT_UPPER, hi[p]
            is_basic[p] = False
            is_basic[q] = True
            head[r] = q
            inv.push(r, col)
            fresh = False
            banned[:] = False
            skip_rows[:] = False
            if len(inv.etas) >= REFACTOR_EVERY:
                try:
                    inv = self._invert(head)
                except NumericalFailure:
                    # the last pivot made the basis singular: undo it and avoid q
                    head[r] = p
                    is_basic[q], is_basic[p] = False, True
                    status[p] = AT_LOWER  # basic again; status is unused while basic
                    inv = self._invert(head)
                    fresh = True
                    banned[q] = True
        raise NumericalFailure("dual simplex iteration limit")

    def _release_artificial(self, lo, hi, bs: Basis, inv: Inverse) -> bool:
        """Move nonbasic variables off artificial bounds; False if one is needed there."""
        head, status, value = bs.head, bs.status, bs.value
        A, At, c = self.A_full, self.At_full, self.c_full
        is_basic = np.zeros(lo.size, bool)
        is_basic[head] = True
        on_artificial = ((status == AT_LOWER) & ~np.isfinite(lo)) | ((status == AT_UPPER) & ~np.isfinite(hi))
        stuck = np.flatnonzero(on_artificial & ~is_basic)
        if stuck.size:
            y = inv.btran(c[head])
            d = c - At @ y
            if np.any(np.abs(d[stuck]) > DUAL_TOL * 10):
                return False
        for j in stuck:
            j = int(j)
            target = min(max(0.0, lo[j]), hi[j])
            delta = target - value[j]
            col = inv.ftran(self._dense_column(j))
            # basic values move by -t * sign(delta) * col as x_j moves by t toward target
            g = -np.sign(delta) * col
            xB = value[head]
            with np.errstate(divide="ignore", invalid="ignore"):
                lim = np.where(
                    g > PIVOT_TOL,
                    (hi[head] - xB) / g,
                    np.where(g < -PIVOT_TOL, (lo[head] - xB) / g, np.inf),
                )
            lim = np.maximum(lim, 0.0)
            r = int(np.argmin(lim))
            t = abs(delta)
            if lim[r] < t:
                t = lim[r]
                value[head] = xB + g * t
                value[j] += np.sign(delta) * t
                p = int(head[r])
                if g[r] > 0:
                    status[p], value[p] = AT_UPPER, hi[p]
                else:
                    status[p], value[p] = AT_LOWER, lo[p]
                head[r] = j
                inv.push(r, col)
                is_basic[p], is_basic[j] = False, True
            else:
                value[head] = xB + g * t
                value[j] = target
                if target == lo[j]:
                    status[j] = AT_LOWER
                elif target == hi[j]:
                    status[j] = AT_UPPER
                else:
                    status[j] = FREE
        # refresh basic values on the true bounds
        x_nb = np.where(is_basic, 0.0, value)
        value[head] = -inv.ftran(A @ x_nb)
        return True
