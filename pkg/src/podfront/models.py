"""Deterministic-equivalent MILPs for the two-stage POD location problem.

Three attitudes towards the scenario losses ``Q_s`` (uncovered demand of
scenario ``s``) are supported:

* ``Expectation()``  - mean of ``Q_s``;
* ``WorstCase()``    - ``max_s Q_s`` via an epigraph variable ``z``;
* ``CVaR(alpha)``    - ``eta + sum_s w_s / ((1 - alpha) N)`` with
  ``w_s >= Q_s - eta``, ``w_s >= 0`` and ``eta`` free.

Models are solver-agnostic: variables, linear rows and two objective rows
(``f1`` opening cost, ``f2`` risk-adjusted uncovered demand). Variables are
addressed through ``MipModel.varmap`` keys::

    ("y", j)  ("x", i, j, s)  ("u", j, s)  ("eta",)  ("w", s)  ("z",)

where ``i`` is a node index, ``j`` a candidate index and ``s`` a scenario.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import BadAlpha
from .instances import Instance, ScenarioSet, coverage_mask

BINARY, INTEGER, CONTINUOUS = "binary", "integer", "continuous"
LE, EQ, GE = "<=", "=", ">="
FEAS_TOL = 1e-6


# -- uncertainty modes ---------------------------------------------------------


@dataclass(frozen=True)
class UncertaintyMode:
    kind: str
    alpha: float | None = None

    def __post_init__(self):
        if self.kind not in ("expectation", "worstcase", "cvar"):
            raise ValueError(f"unknown mode {self.kind!r}")
        if self.kind == "cvar":
            a = self.alpha
            if a is None or not (0.0 <= a < 1.0):
                raise BadAlpha(f"alpha must lie in [0, 1), got {a}")

    def aggregate(self, losses) -> float:
        """Risk-adjusted value of per-scenario losses under this mode."""
        losses = np.asarray(losses, dtype=float)
        if self.kind == "expectation":
            return float(losses.mean())
        if self.kind == "worstcase":
            return float(losses.max())
        return cvar(losses, self.alpha)

    @property
    def label(self) -> str:
        if self.kind == "cvar":
            return f"cvar({self.alpha:g})"
        return self.kind


def Expectation() -> UncertaintyMode:
    return UncertaintyMode("expectation")


def WorstCase() -> UncertaintyMode:
    return UncertaintyMode("worstcase")


def CVaR(alpha: float) -> UncertaintyMode:
    return UncertaintyMode("cvar", alpha)


# -- model containers ------------------------------------------------------------


@dataclass(frozen=True)
class Var:
    name: str
    kind: str
    lb: float = 0.0
    ub: float = np.inf

    @property
    def is_integer(self) -> bool:
        return self.kind != CONTINUOUS


@dataclass(frozen=True)
class LinExpr:
    """Sparse linear expression ``sum coef * var + const`` over variable indices."""

    coefs: tuple[tuple[int, float], ...] = ()
    const: float = 0.0

    @classmethod
    def from_dict(cls, d: Mapping[int, float], const: float = 0.0) -> "LinExpr":
        return cls(tuple(sorted((int(k), float(v)) for k, v in d.items() if v != 0)), float(const))

    def value(self, x: Sequence[float]) -> float:
        return self.const + sum(c * x[k] for k, c in self.coefs)

    def as_dict(self) -> dict[int, float]:
        return dict(self.coefs)


@dataclass(frozen=True)
class Constraint:
    coefs: tuple[tuple[int, float], ...]
    sense: str
    rhs: float
    name: str = ""

    def __post_init__(self):
        if self.sense not in (LE, EQ, GE):
            raise ValueError(f"bad sense {self.sense!r}")

    def lhs(self, x: Sequence[float]) -> float:
        return sum(c * x[k] for k, c in self.coefs)

    def violation(self, x: Sequence[float]) -> float:
        a = self.lhs(x)
        if self.sense == LE:
            return max(0.0, a - self.rhs)
        if self.sense == GE:
            return max(0.0, self.rhs - a)
        return abs(a - self.rhs)


def constraint(coefs: Mapping[int, float], sense: str, rhs: float, name: str = "") -> Constraint:
    return Constraint(tuple(sorted((int(k), float(v)) for k, v in coefs.items())), sense, float(rhs), name)


@dataclass(frozen=True, eq=False)
class MipModel:
    """A minimisation MILP with named objective rows.

    ``objective`` names the active row in ``objectives`` (default ``"f2"``).
    ``instance``/``scenarios``/``mode`` are kept so solutions can be mapped
    back to first-stage vectors and re-evaluated exactly.
    """

    vars: tuple[Var, ...]
    constraints: tuple[Constraint, ...]
    objectives: Mapping[str, LinExpr]
    varmap: Mapping[tuple, int]
    objective: str = "f2"
    instance: Instance | None = None
    scenarios: ScenarioSet | None = None
    mode: UncertaintyMode | None = None

    def __post_init__(self):
        nv = len(self.vars)
        for con in self.constraints:
            for k, _ in con.coefs:
                if not 0 <= k < nv:
                    raise ValueError(f"constraint {con.name!r} references undeclared variable {k}")
        if sorted(self.varmap.values()) != list(range(nv)):
            raise ValueError("varmap must be a bijection onto the variables")

    @property
    def n_vars(self) -> int:
        return len(self.vars)

    def index(self, key: tuple) -> int:
        return self.varmap[key]

    def name_of(self, k: int) -> str:
        return self.vars[k].name

    @property
    def y_indices(self) -> list[int]:
        return [self.varmap[("y", j)] for j in range(self.instance.n_candidates)]

    def first_stage(self, x: Sequence[float]) -> tuple[int, ...]:
        return tuple(int(round(x[k])) for k in self.y_indices)

    def objective_value(self, x: Sequence[float], which: str | None = None) -> float:
        return self.objectives[which or self.objective].value(x)

    def max_violation(self, x: Sequence[float], extra: Sequence[Constraint] = ()) -> float:
        worst = 0.0
        for k, v in enumerate(self.vars):
            worst = max(worst, v.lb - x[k], x[k] - v.ub)
            if v.is_integer:
                worst = max(worst, abs(x[k] - round(x[k])))
        for con in itertools.chain(self.constraints, extra):
            worst = max(worst, con.violation(x))
        return worst

    def is_feasible(self, x: Sequence[float], extra: Sequence[Constraint] = (), tol: float = FEAS_TOL) -> bool:
        return self.max_violation(x, extra) <= tol

    def with_objective(self, which: str) -> "MipModel":
        if which not in self.objectives:
            raise KeyError(which)
        return MipModel(
            self.vars, self.constraints, self.objectives, self.varmap, which,
            self.instance, self.scenarios, self.mode,
        )


# -- second stage ------------------------------------------------------------------


def var_name(key: tuple) -> str:
    return "_".join(str(p) for p in key)


@dataclass
class SecondStageBlock:
    """Variables and rows of one scenario, addressed by varmap keys."""

    scenario: int
    vars: dict[tuple, Var] = field(default_factory=dict)
    rows: list[tuple[dict[tuple, float], str, float, str]] = field(default_factory=list)


def build_second_stage(inst: Instance, scenarios: ScenarioSet, s: int) -> SecondStageBlock:
    """Coverage (<= 1), capacity, demand-linking and assignment rows for scenario ``s``.

    Assignment variables for node/candidate pairs outside the radius are not
    created, so nodes nobody can reach get no coverage row.
    """
    if not 0 <= s < scenarios.N:
        raise IndexError(f"scenario {s} out of range")
    psi = coverage_mask(inst)
    q = scenarios.q[s]
    blk = SecondStageBlock(s)
    m = inst.n_candidates
    reach = {j: [i for i in range(inst.n) if psi[i, j]] for j in range(m)}
    for j in range(m):
        for i in reach[j]:
            blk.vars[("x", i, j, s)] = Var(var_name(("x", i, j, s)), BINARY, 0.0, 1.0)
    for j in range(m):
        ub = min(inst.cap[j], int(sum(q[i] for i in reach[j])))
        blk.vars[("u", j, s)] = Var(var_name(("u", j, s)), INTEGER, 0.0, float(ub))

    for i in range(inst.n):
        js = [j for j in range(m) if psi[i, j]]
        if js:
            blk.rows.append(({("x", i, j, s): 1.0 for j in js}, LE, 1.0, f"cover_{i}_{s}"))
    for j in range(m):
        blk.rows.append(({("u", j, s): 1.0, ("y", j): -float(inst.cap[j])}, LE, 0.0, f"cap_{j}_{s}"))
    for j in range(m):
        row = {("u", j, s): 1.0}
        for i in reach[j]:
            if q[i]:
                row[("x", i, j, s)] = -float(q[i])
        blk.rows.append((row, LE, 0.0, f"link_{j}_{s}"))
    for j in range(m):
        for i in reach[j]:
            blk.rows.append(({("x", i, j, s): 1.0, ("y", j): -1.0}, LE, 0.0, f"open_{i}_{j}_{s}"))
    return blk


class _Builder:
    def __init__(self):
        self.vars: list[Var] = []
        self.varmap: dict[tuple, int] = {}
        self.cons: list[Constraint] = []

    def var(self, key, v: Var) -> int:
        self.varmap[key] = len(self.vars)
        self.vars.append(v)
        return self.varmap[key]

    def row(self, coefs: Mapping[tuple, float], sense, rhs, name):
        self.cons.append(constraint({self.varmap[k]: c for k, c in coefs.items()}, sense, rhs, name))


def build_model(inst: Instance, scenarios: ScenarioSet, mode: UncertaintyMode) -> MipModel:
    """Deterministic equivalent over all scenarios for the given risk mode."""
    if scenarios.n_nodes != inst.n:
        raise ValueError("scenario set and instance disagree on the node count")
    N = scenarios.N
    b = _Builder()
    m = inst.n_candidates
    for j in range(m):
        b.var(("y", j), Var(var_name(("y", j)), BINARY, 0.0, 1.0))
    blocks = [build_second_stage(inst, scenarios, s) for s in range(N)]
    for blk in blocks:
        for key, v in blk.vars.items():
            b.var(key, v)
    for blk in blocks:
        for coefs, sense, rhs, name in blk.rows:
            b.row(coefs, sense, rhs, name)

    totals = scenarios.total().astype(float)
    f1 = LinExpr.from_dict({b.varmap[("y", j)]: float(inst.gamma[j]) for j in range(m)})
    if mode.kind == "expectation":
        f2 = LinExpr.from_dict(
            {b.varmap[("u", j, s)]: -1.0 / N for s in range(N) for j in range(m)},
            const=float(totals.sum()) / N,
        )
    elif mode.kind == "worstcase":
        z = b.var(("z",), Var("z", CONTINUOUS, 0.0, np.inf))
        for s in range(N):
            row = {("z",): 1.0, **{("u", j, s): 1.0 for j in range(m)}}
            b.row(row, GE, totals[s], f"epi_{s}")
        f2 = LinExpr.from_dict({z: 1.0})
    else:
        alpha = mode.alpha
        eta = b.var(("eta",), Var("eta", CONTINUOUS, -np.inf, np.inf))
        scale = 1.0 / ((1.0 - alpha) * N)
        obj = {eta: 1.0}
        for s in range(N):
            w = b.var(("w", s), Var(var_name(("w", s)), CONTINUOUS, 0.0, np.inf))
            obj[w] = scale
            row = {("w", s): 1.0, ("eta",): 1.0, **{("u", j, s): 1.0 for j in range(m)}}
            b.row(row, GE, totals[s], f"tail_{s}")
        f2 = LinExpr.from_dict(obj)
    return MipModel(
        tuple(b.vars), tuple(b.cons), {"f1": f1, "f2": f2}, dict(b.varmap), "f2",
        inst, scenarios, mode,
    )


def scenario_losses(model: MipModel, x: Sequence[float]) -> np.ndarray:
    """Per-scenario uncovered demand read off an assignment of ``model``."""
    sc, m = model.scenarios, model.instance.n_candidates
    tot = sc.total().astype(float)
    return np.array(
        [tot[s] - sum(x[model.varmap[("u", j, s)]] for j in range(m)) for s in range(sc.N)]
    )


def recompute_f2(model: MipModel, x: Sequence[float]) -> float:
    return model.mode.aggregate(scenario_losses(model, x))


# -- exact recourse ---------------------------------------------------------------

ENUM_LIMIT = 200_000


def _components(options: list[list[int]]) -> list[list[int]]:
    """Group nodes that share reachable open PODs (union-find)."""
    parent = {}

    def find(a):
        while parent.setdefault(a, a) != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for i, opts in enumerate(options):
        for j in opts:
            ra, rb = find(("n", i)), find(("p", j))
            if ra != rb:
                parent[ra] = rb
    groups: dict = {}
    for i, opts in enumerate(options):
        if opts:
            groups.setdefault(find(("n", i)), []).append(i)
    return list(groups.values())


def _best_cover_enum(nodes, options, q, cap):
    """Max covered demand over all assignments of ``nodes`` (each to one option).

    Returns ``(covered, {node: pod})``.
    """
    pods = sorted({j for i in nodes for j in options[i]})
    col = {j: k for k, j in enumerate(pods)}
    fixed = np.zeros(len(pods))
    free = []
    assign = {}
    for i in nodes:
        if len(options[i]) == 1:
            fixed[col[options[i][0]]] += q[i]
            assign[i] = options[i][0]
        else:
            free.append(i)
    capv = np.array([cap[j] for j in pods], dtype=float)
    if not free:
        return int(np.minimum(fixed, capv).sum()), assign
    # load[c, k]: demand landing on pod k under combination c
    grids = np.meshgrid(*[np.array([col[j] for j in options[i]]) for i in free], indexing="ij")
    combos = np.stack([g.ravel() for g in grids], axis=1)
    load = np.tile(fixed, (combos.shape[0], 1))
    rows = np.arange(combos.shape[0])
    for k, i in enumerate(free):
        np.add.at(load, (rows, combos[:, k]), q[i])
    value = np.minimum(load, capv).sum(axis=1)
    best = int(np.argmax(value))
    for k, i in enumerate(free):
        assign[i] = pods[combos[best, k]]
    return int(value[best]), assign


def _best_cover_mip(nodes, options, q, cap) -> int:
    from .solver import SolveRequest, solve

    pods = sorted({j for i in nodes for j in options[i]})
    vars_, cons, varmap = [], [], {}

    def add(key, v):
        varmap[key] = len(vars_)
        vars_.append(v)

    for i in nodes:
        for j in options[i]:
            add(("x", i, j), Var(var_name(("x", i, j)), BINARY, 0.0, 1.0))
    for j in pods:
        add(("u", j), Var(var_name(("u", j)), INTEGER, 0.0, float(cap[j])))
    for i in nodes:
        cons.append(constraint({varmap[("x", i, j)]: 1.0 for j in options[i]}, LE, 1.0))
    for j in pods:
        row = {varmap[("u", j)]: 1.0}
        for i in nodes:
            if j in options[i]:
                row[varmap[("x", i, j)]] = -float(q[i])
        cons.append(constraint(row, LE, 0.0))
    obj = LinExpr.from_dict({varmap[("u", j)]: -1.0 for j in pods})
    mdl = MipModel(tuple(vars_), tuple(cons), {"cover": obj}, varmap, "cover")
    res = solve(SolveRequest(mdl))
    assign = {}
    for i in nodes:
        for j in options[i]:
            if res.assignment[varmap[("x", i, j)]] > 0.5:
                assign[i] = j
    return int(round(-res.objective)), assign


def recourse_plan(inst: Instance, scenarios: ScenarioSet, s: int, y: Sequence[int]):
    """Optimal second stage of scenario ``s`` for first stage ``y``: ``(loss, {node: pod})``.

    Nodes are split into independent groups sharing open PODs. Small groups
    are enumerated (every reachable node is assigned somewhere, which never
    hurts); larger ones are solved as a small MILP.
    """
    psi = coverage_mask(inst)
    q = [int(v) for v in scenarios.q[s]]
    open_ = [j for j in range(inst.n_candidates) if y[j]]
    options = [[j for j in open_ if psi[i, j]] for i in range(inst.n)]
    covered = 0
    assign = {}
    for nodes in _components(options):
        size = 1
        for i in nodes:
            size *= len(options[i])
        if size <= ENUM_LIMIT:
            c, a = _best_cover_enum(nodes, options, q, inst.cap)
        else:
            c, a = _best_cover_mip(nodes, options, q, inst.cap)
        covered += c
        assign.update(a)
    return sum(q) - covered, assign


def evaluate_recourse(inst: Instance, scenarios: ScenarioSet, s: int, y: Sequence[int]) -> int:
    """Minimum uncovered demand of scenario ``s`` for first stage ``y``."""
    return recourse_plan(inst, scenarios, s, y)[0]


def complete_assignment(model: MipModel, y: Sequence[int]) -> np.ndarray:
    """Full variable vector of ``model`` for first stage ``y`` with optimal recourse."""
    inst, sc, mode = model.instance, model.scenarios, model.mode
    x = np.zeros(model.n_vars)
    vm = model.varmap
    for j, on in enumerate(y):
        x[vm[("y", j)]] = float(bool(on))
    losses = []
    for s in range(sc.N):
        loss, assign = recourse_plan(inst, sc, s, y)
        losses.append(loss)
        load = np.zeros(inst.n_candidates)
        for i, j in assign.items():
            x[vm[("x", i, j, s)]] = 1.0
            load[j] += sc.q[s, i]
        for j in range(inst.n_candidates):
            x[vm[("u", j, s)]] = min(load[j], inst.cap[j]) if y[j] else 0.0
    if mode.kind == "worstcase":
        x[vm[("z",)]] = max(losses)
    elif mode.kind == "cvar":
        eta = var_cvar(losses, mode.alpha)[0]
        x[vm[("eta",)]] = eta
        for s, loss in enumerate(losses):
            x[vm[("w", s)]] = max(loss - eta, 0.0)
    return x


def evaluate_point(inst: Instance, scenarios: ScenarioSet, mode: UncertaintyMode, y: Sequence[int]):
    """Exact ``(f1, f2)`` of a first-stage vector."""
    f1 = float(sum(g for g, on in zip(inst.gamma, y) if on))
    losses = [evaluate_recourse(inst, scenarios, s, y) for s in range(scenarios.N)]
    return f1, mode.aggregate(losses)


# -- CVaR ---------------------------------------------------------------------------


def var_cvar(values, alpha: float) -> tuple[float, float]:
    """``(VaR, CVaR)`` of equiprobable losses at confidence ``alpha``.

    The CVaR objective ``eta + E[(v - eta)+] / (1 - alpha)`` is convex and
    piecewise linear with kinks at the sample values, so the minimum is
    attained at one of them.
    """
    if not 0.0 <= alpha < 1.0:
        raise BadAlpha(f"alpha must lie in [0, 1), got {alpha}")
    v = np.sort(np.asarray(values, dtype=float))
    if v.size == 0:
        raise ValueError("cvar of an empty sample")
    excess = np.maximum(v[None, :] - v[:, None], 0.0).mean(axis=1)
    obj = v + excess / (1.0 - alpha)
    k = int(np.argmin(obj))
    return float(v[k]), float(obj[k])


def cvar(values, alpha: float) -> float:
    return var_cvar(values, alpha)[1]
