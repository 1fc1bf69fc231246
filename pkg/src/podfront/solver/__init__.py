"""Single-objective MILP solving behind a small backend contract.

Two backends:

``builtin``
    LP-relaxation branch-and-bound over the bundled dual simplex. Exact and
    deterministic; meant for small models.
``external``
    Writes the model as MPS, runs a user command and reads back a
    ``name value`` solution dump. The command template comes from
    ``configure(backend_command=...)`` or the ``PR_BACKEND`` environment
    variable and may use ``{mps}`` and ``{sol}`` placeholders.

``PR_BACKEND`` set to ``builtin`` forces the built-in backend; any other value
is taken as an external command template.
"""
from __future__ import annotations

import os
import shlex
import subprocess
import tempfile
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from ..errors import BackendError
from ..models import EQ, LE, Constraint, LinExpr, MipModel, constraint
from .bnb import Assembled, BnBStats, branch_and_bound, lp_bound, objective_step
from .mps import mps_text, parse_solution, write_mps

OPTIMAL = "Optimal"
FEASIBLE_TIME_LIMIT = "FeasibleTimeLimit"
INFEASIBLE = "Infeasible"
NO_SOLUTION_TIME_LIMIT = "NoSolutionTimeLimit"

DELTA_LEX = 1e-6
# time limits beyond a week are treated as unlimited for subprocesses
NO_LIMIT = 7 * 86400.0

_STATUS = {
    "optimal": OPTIMAL,
    "feasible_timeout": FEASIBLE_TIME_LIMIT,
    "infeasible": INFEASIBLE,
    "nosolution_timeout": NO_SOLUTION_TIME_LIMIT,
}

config = {"backend": "builtin", "backend_command": None, "backend_timeout": None}


def configure(**kwargs) -> None:
    for k, v in kwargs.items():
        if k not in config:
            raise KeyError(f"unknown solver option {k!r}")
        config[k] = v


@dataclass(frozen=True)
class SolveRequest:
    model: MipModel
    extra_constraints: tuple[Constraint, ...] = ()
    warm_start: Sequence[float] | None = None
    time_limit: float = 1e9
    gap_tolerance: float = 0.0
    objective: str | LinExpr | None = None

    def __post_init__(self):
        if not self.time_limit > 0:
            raise ValueError("time_limit must be positive")
        object.__setattr__(self, "extra_constraints", tuple(self.extra_constraints))

    def objective_row(self) -> LinExpr:
        obj = self.objective if self.objective is not None else self.model.objective
        return self.model.objectives[obj] if isinstance(obj, str) else obj


@dataclass
class SolveResult:
    status: str
    objective: float
    assignment: np.ndarray | None
    stats: BnBStats = field(default_factory=BnBStats)

    @property
    def has_solution(self) -> bool:
        return self.status in (OPTIMAL, FEASIBLE_TIME_LIMIT)


def _backend_choice(backend: str | None):
    if backend is not None:
        return backend, config["backend_command"]
    env = os.environ.get("PR_BACKEND")
    if env:
        return ("builtin", None) if env.strip() == "builtin" else ("external", env)
    return config["backend"], config["backend_command"]


def solve(req: SolveRequest, backend: str | None = None) -> SolveResult:
    kind, command = _backend_choice(backend)
    if kind == "builtin":
        return _solve_builtin(req)
    if kind == "external":
        return _solve_external(req, command)
    raise BackendError(f"unknown backend {kind!r}")


def _solve_builtin(req: SolveRequest, deadline: float | None = None) -> SolveResult:
    obj = req.objective_row()
    asm = Assembled(req.model, obj, req.extra_constraints)
    if deadline is None:
        deadline = time.monotonic() + req.time_limit
    res = branch_and_bound(
        asm,
        deadline=deadline,
        gap_tolerance=req.gap_tolerance,
        warm_start=req.warm_start,
        step=objective_step(obj, req.model),
    )
    return SolveResult(_STATUS[res.status], res.objective, res.x, res.stats)


def _solve_external(req: SolveRequest, command: str | None) -> SolveResult:
    if not command:
        raise BackendError("no external solver command configured")
    model = req.model
    obj = req.objective_row()
    if isinstance(req.objective, LinExpr):
        model = MipModel(
            model.vars, model.constraints, {**model.objectives, "_obj": obj}, model.varmap,
            "_obj", model.instance, model.scenarios, model.mode,
        )
    elif req.objective is not None:
        model = model.with_objective(req.objective)
    with tempfile.TemporaryDirectory(prefix="podfront-") as tmp:
        mps = Path(tmp) / "model.mps"
        sol = Path(tmp) / "model.sol"
        write_mps(model, req.extra_constraints, mps)
        argv = [a.format(mps=mps, sol=sol) for a in shlex.split(command)]
        timeout = config["backend_timeout"] or (None if req.time_limit >= NO_LIMIT else req.time_limit + 30)
        try:
            proc = subprocess.run(argv, capture_output=True, text=True, timeout=timeout)
        except FileNotFoundError as exc:
            raise BackendError(f"solver binary not found: {exc}") from None
        except subprocess.TimeoutExpired:
            return SolveResult(NO_SOLUTION_TIME_LIMIT, np.inf, None)
        if proc.returncode != 0:
            raise BackendError(f"solver exited with {proc.returncode}: {proc.stderr.strip()[:500]}")
        if not sol.exists():
            raise BackendError("solver wrote no solution file")
        status, x = parse_solution(model, sol)
    if status is not None and status.lower() == "infeasible":
        return SolveResult(INFEASIBLE, np.inf, None)
    if status is not None and status.lower() not in ("optimal", "feasible"):
        raise BackendError(f"unrecognised solver status {status!r}")
    x = np.array([round(v) if var.is_integer else v for v, var in zip(x, model.vars)], dtype=float)
    if not model.is_feasible(x, req.extra_constraints):
        raise BackendError("external solution violates the model")
    st = FEASIBLE_TIME_LIMIT if status is not None and status.lower() == "feasible" else OPTIMAL
    return SolveResult(st, obj.value(x), x)


def lp_relax(req: SolveRequest):
    """Continuous relaxation with the bundled simplex: ``(status, objective, x)``."""
    asm = Assembled(req.model, req.objective_row(), req.extra_constraints, tighten=False)
    st, val, x = lp_bound(asm)
    return (OPTIMAL if st == "optimal" else INFEASIBLE), val, x


def _as_row(model: MipModel, obj) -> LinExpr:
    return model.objectives[obj] if isinstance(obj, str) else obj


def lock_constraint(model: MipModel, obj, value: float) -> Constraint:
    """Row keeping ``obj`` at its optimum ``value`` (exact for integral objectives)."""
    row = _as_row(model, obj)
    if objective_step(row, model) > 0 and all(float(c).is_integer() for _, c in row.coefs):
        return constraint(row.as_dict(), EQ, round(value - row.const), "lexlock")
    return constraint(row.as_dict(), LE, value - row.const + DELTA_LEX, "lexlock")


def bound_constraint(model: MipModel, obj, bound: float, name: str = "bound") -> Constraint:
    """Row ``obj <= bound``."""
    row = _as_row(model, obj)
    return constraint(row.as_dict(), LE, bound - row.const, name)


def lexmin(primary, secondary, req: SolveRequest, backend: str | None = None) -> SolveResult:
    """Minimise ``primary``, then ``secondary`` with ``primary`` held at its optimum.

    ``req.time_limit`` covers both stages. The result's objective is the
    secondary value.
    """
    start = time.monotonic()
    first = solve(replace(req, objective=primary), backend)
    if not first.has_solution:
        return first
    if _as_row(req.model, primary) == _as_row(req.model, secondary):
        return first
    remaining = req.time_limit - (time.monotonic() - start)
    sec_obj = _as_row(req.model, secondary)
    if remaining <= 0:
        val = sec_obj.value(first.assignment)
        return SolveResult(FEASIBLE_TIME_LIMIT, val, first.assignment, first.stats)
    lock = lock_constraint(req.model, primary, first.objective)
    second = solve(
        replace(
            req,
            objective=secondary,
            extra_constraints=req.extra_constraints + (lock,),
            warm_start=first.assignment,
            time_limit=remaining,
        ),
        backend,
    )
    if not second.has_solution:
        val = sec_obj.value(first.assignment)
        return SolveResult(FEASIBLE_TIME_LIMIT, val, first.assignment, first.stats)
    if first.status != OPTIMAL and second.status == OPTIMAL:
        second = replace(second, status=FEASIBLE_TIME_LIMIT)
    return second


__all__ = [
    "OPTIMAL", "FEASIBLE_TIME_LIMIT", "INFEASIBLE", "NO_SOLUTION_TIME_LIMIT",
    "SolveRequest", "SolveResult", "solve", "lexmin", "lp_relax", "configure",
    "lock_constraint", "bound_constraint", "write_mps", "parse_solution", "mps_text",
]
