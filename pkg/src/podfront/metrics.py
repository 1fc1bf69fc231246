"""Front quality and value-of-information measures.

``hypervolume`` is the area dominated by a front inside a reference box.

The per-point measures compare the recourse problem at a fixed budget
``f1 <= b`` (RRP, the front point's own ``f2``) with two alternatives:

* RWS, wait-and-see: every scenario gets its own best first stage, and the
  per-scenario optima are aggregated with the model's risk measure;
* REV, expected value: the first stage is chosen for the mean demand, then
  scored on the real scenarios.

``RVPI = RRP - RWS`` and ``RVSS = REV - RRP``. For the expectation model they
are the classical EVPI and VSS.
"""
from __future__ import annotations

import csv
import io
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .core import TAU2, FrontEntry, ObjectivePoint, ParetoFront, format_number
from .errors import BackendError, BadReferencePoint
from .instances import Instance, ScenarioSet
from .models import CVaR, Expectation, UncertaintyMode, build_model, evaluate_point
from .solver import OPTIMAL, SolveRequest, bound_constraint, lexmin


def _points(front) -> list[ObjectivePoint]:
    out = []
    for p in front:
        if isinstance(p, FrontEntry):
            p = p.point
        out.append(ObjectivePoint(float(p[0]), float(p[1])))
    return out


def hypervolume(front: ParetoFront | Iterable, ref) -> float:
    """Area dominated by ``front`` and bounded by ``ref`` (both objectives minimised)."""
    pts = _points(front)
    r1, r2 = float(ref[0]), float(ref[1])
    for p in pts:
        if p.f1 > r1 + TAU2 or p.f2 > r2 + TAU2:
            raise BadReferencePoint(f"point ({p.f1}, {p.f2}) lies beyond the reference ({r1}, {r2})")
    area = 0.0
    best_f2 = r2
    # sweep by f1; each point adds a strip up to the next better f2 seen so far
    pts.sort()
    strips = []
    for p in pts:
        if p.f2 < best_f2:
            strips.append(p)
            best_f2 = p.f2
    for k, p in enumerate(strips):
        right = strips[k + 1].f1 if k + 1 < len(strips) else r1
        area += max(right - p.f1, 0.0) * max(r2 - p.f2, 0.0)
    return area


def monte_carlo_hypervolume(front, ref, samples: int = 10**6, seed: int = 0) -> float:
    """Sampling estimate of ``hypervolume`` over the box spanned by the ideal point and ``ref``."""
    pts = np.array([tuple(p) for p in _points(front)], float)
    if pts.size == 0:
        return 0.0
    lo = pts.min(axis=0)
    hi = np.asarray(ref, float)
    rng = np.random.default_rng(seed)
    hit = 0
    for start in range(0, samples, 100_000):
        m = min(100_000, samples - start)
        z = lo + rng.random((m, 2)) * (hi - lo)
        dom = np.zeros(m, bool)
        for p in pts:
            dom |= (z[:, 0] >= p[0]) & (z[:, 1] >= p[1])
        hit += int(dom.sum())
    return float(np.prod(hi - lo)) * hit / samples


def _as_mode(mode) -> UncertaintyMode:
    if isinstance(mode, UncertaintyMode):
        return mode
    return CVaR(float(mode))


def _best_single(inst: Instance, q: np.ndarray, budget: float, backend=None):
    """Cheapest-among-best first stage for one demand vector under ``f1 <= budget``."""
    sc = ScenarioSet(np.asarray(q, dtype=np.int64).reshape(1, -1))
    model = build_model(inst, sc, Expectation())
    req = SolveRequest(model, extra_constraints=(bound_constraint(model, "f1", budget, "budget"),))
    res = lexmin("f2", "f1", req, backend=backend)
    if res.status != OPTIMAL:
        raise BackendError(f"single-scenario problem ended with status {res.status}")
    y = model.first_stage(res.assignment)
    return y, evaluate_point(inst, sc, Expectation(), y)[1]


def _ws_task(args):
    inst, q, budget, backend = args
    return _best_single(inst, q, budget, backend)[1]


def rws(inst: Instance, scenarios: ScenarioSet, mode, budget: float, *, jobs: int = 1, backend=None) -> float:
    """Wait-and-see value: risk measure of the per-scenario optima."""
    mode = _as_mode(mode)
    tasks = [(inst, scenarios.q[s], budget, backend) for s in range(scenarios.N)]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            values = list(pool.map(_ws_task, tasks))
    else:
        values = [_ws_task(t) for t in tasks]
    return float(mode.aggregate(values))


def mean_demand(scenarios: ScenarioSet) -> np.ndarray:
    """Mean demand per node, rounded half away from zero to an integer."""
    return np.floor(scenarios.q.mean(axis=0) + 0.5).astype(np.int64)


def rev(inst: Instance, scenarios: ScenarioSet, mode, budget: float, *, backend=None) -> float:
    """Expected-value solution scored on the real scenarios."""
    mode = _as_mode(mode)
    y, _ = _best_single(inst, mean_demand(scenarios), budget, backend)
    return float(evaluate_point(inst, scenarios, mode, y)[1])


@dataclass(frozen=True)
class IndicatorRow:
    f1: float
    rrp: float
    rws: float
    rev: float

    @property
    def rvpi(self) -> float:
        return self.rrp - self.rws

    @property
    def rvss(self) -> float:
        return self.rev - self.rrp

    @property
    def rvpi_rel(self) -> float | None:
        return None if self.rrp == 0 else self.rvpi / self.rrp

    @property
    def rvss_rel(self) -> float | None:
        return None if self.rrp == 0 else self.rvss / self.rrp


@dataclass(frozen=True)
class IndicatorReport:
    rows: tuple[IndicatorRow, ...]

    def _rel(self, name) -> list[float]:
        return [v for v in (getattr(r, name) for r in self.rows) if v is not None]

    @property
    def avg_rvpi_rel(self) -> float | None:
        v = self._rel("rvpi_rel")
        return float(np.mean(v)) if v else None

    @property
    def max_rvpi_rel(self) -> float | None:
        v = self._rel("rvpi_rel")
        return max(v) if v else None

    @property
    def avg_rvss_rel(self) -> float | None:
        v = self._rel("rvss_rel")
        return float(np.mean(v)) if v else None

    @property
    def max_rvss_rel(self) -> float | None:
        v = self._rel("rvss_rel")
        return max(v) if v else None

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["f1", "rrp", "rws", "rev", "rvpi", "rvss", "rvpi_rel", "rvss_rel"])
        for r in self.rows:
            rel = ["NA" if v is None else format_number(v) for v in (r.rvpi_rel, r.rvss_rel)]
            w.writerow([format_number(v) for v in (r.f1, r.rrp, r.rws, r.rev, r.rvpi, r.rvss)] + rel)
        return buf.getvalue()


def value_report(
    front: ParetoFront, inst: Instance, scenarios: ScenarioSet, mode, *, jobs: int = 1, backend=None
) -> IndicatorReport:
    """Per-point RRP/RWS/REV with the front point's ``f1`` as the budget."""
    mode = _as_mode(mode)
    rows = []
    for e in sorted(front, key=lambda e: e.f1):
        rows.append(IndicatorRow(
            e.f1, e.f2,
            rws(inst, scenarios, mode, e.f1, jobs=jobs, backend=backend),
            rev(inst, scenarios, mode, e.f1, backend=backend),
        ))
    return IndicatorReport(tuple(rows))


def reference_point(*fronts: Sequence) -> ObjectivePoint:
    """Componentwise worst point over all given fronts (the exact front's nadir in practice)."""
    pts = [p for f in fronts for p in _points(f)]
    if not pts:
        raise ValueError("no points to take a reference from")
    return ObjectivePoint(max(p.f1 for p in pts), max(p.f2 for p in pts))


__all__ = [
    "hypervolume", "monte_carlo_hypervolume", "rws", "rev", "mean_demand",
    "IndicatorRow", "IndicatorReport", "value_report", "reference_point",
]
