"""Gomory mixed-integer cuts from the optimal root tableau.

The LP works on ``[A  -I] v = 0`` with structural and logical variables, so a
tableau row reads ``v_B = -sum_j (binv[r] . a_j) v_j`` over nonbasic ``j``.
Nonbasic variables are shifted to their active bound (``s_j = v_j - l_j`` or
``u_j - v_j``), the GMI inequality ``sum_j pi_j s_j >= 1`` is formed, and
logical variables are substituted back by their row activity so the cut is a
plain row over structurals.

A logical counts as integer when its row has only integer variables and
integer coefficients. Cuts with large coefficient ranges or small violations
are dropped; callers may also pass known feasible points, and any cut they
violate is discarded.
"""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .simplex import AT_LOWER, AT_UPPER

FRAC_MIN = 0.01
MAX_DYNAMISM = 1e4
MIN_EFFICACY = 1e-4


def _frac(v):
    return v - np.floor(v)


def integral_logicals(A: sp.csr_matrix, is_int: np.ndarray) -> np.ndarray:
    """Rows whose activity is integral at every integer point."""
    out = np.zeros(A.shape[0], bool)
    for i in range(A.shape[0]):
        s, e = A.indptr[i], A.indptr[i + 1]
        cols, vals = A.indices[s:e], A.data[s:e]
        out[i] = bool(np.all(is_int[cols]) and np.all(vals == np.round(vals)))
    return out


def gmi_cuts(lp, basis, lo, hi, is_int, row_int, x, max_cuts=50):
    """Cuts ``(coef, rhs)`` meaning ``coef @ x >= rhs`` for the LP's current optimum.

    ``lo, hi`` are the structural bounds of this solve; ``lp`` must still hold
    the inverse for ``basis`` in its cache.
    """
    n, m = lp.n, lp.m
    inv = lp.inverse(basis.head)
    if inv is None:
        return []
    lo_full = np.concatenate([lo, lp.rl])
    hi_full = np.concatenate([hi, lp.ru])
    int_full = np.concatenate([is_int, row_int])
    head, status, value = basis.head, basis.status, basis.value
    nonbasic = np.ones(n + m, bool)
    nonbasic[head] = False
    at_lo = nonbasic & (status == AT_LOWER) & np.isfinite(lo_full)
    at_hi = nonbasic & (status == AT_UPPER) & np.isfinite(hi_full)
    free_nb = nonbasic & ~at_lo & ~at_hi & (lo_full != hi_full)
    fixed = nonbasic & (lo_full == hi_full)
    # shifted integer variables need an integral bound
    int_shift = int_full & np.where(at_lo, lo_full == np.round(lo_full), hi_full == np.round(hi_full))
    A_rows = lp.A_full[:, :n].tocsr()

    cand = []
    for r in range(m):
        j = head[r]
        if not int_full[j]:
            continue
        f0 = _frac(value[j])
        if min(f0, 1 - f0) < FRAC_MIN:
            continue
        cand.append((-min(f0, 1 - f0), r))
    cand.sort()
    cuts = []
    At = lp.At_full
    for _, r in cand[: 4 * max_cuts]:
        f0 = _frac(value[head[r]])
        abar = -(At @ inv.row(r))
        abar[~nonbasic] = 0.0
        abar[fixed] = 0.0
        abar[np.abs(abar) < 1e-11] = 0.0
        if np.any(abar[free_nb] != 0.0):
            continue
        # row in the form v_B + sum_j g_j s_j = value
        g = np.where(at_hi, abar, -abar)
        pi = np.zeros(n + m)
        fj = _frac(g)
        ii = int_shift & (g != 0)
        pi[ii] = np.where(fj[ii] <= f0, fj[ii] / f0, (1 - fj[ii]) / (1 - f0))
        cc = ~int_shift & (g != 0)
        pi[cc] = np.where(g[cc] >= 0, g[cc] / f0, -g[cc] / (1 - f0))
        # back to v: s_j = v_j - l_j (lower) or u_j - v_j (upper)
        coef_v = np.where(at_hi, -pi, pi)
        use = pi != 0
        rhs = 1.0 + float(pi[use & at_lo] @ lo_full[use & at_lo] - pi[use & at_hi] @ hi_full[use & at_hi])
        coef = coef_v[:n] + A_rows.T @ coef_v[n:]
        coef[np.abs(coef) < 1e-12] = 0.0
        nz = np.abs(coef[coef != 0])
        if nz.size == 0 or nz.max() / nz.min() > MAX_DYNAMISM:
            continue
        norm = np.linalg.norm(coef)
        viol = (rhs - coef @ x) / norm
        if viol < MIN_EFFICACY:
            continue
        cuts.append((viol, coef / norm, rhs / norm))
    cuts.sort(key=lambda t: -t[0])
    return [(c, b) for _, c, b in cuts[:max_cuts]]
