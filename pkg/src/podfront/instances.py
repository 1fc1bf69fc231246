"""Instances, demand scenarios, coverage masks and their JSON files.

Scenario sampling
-----------------
Each scenario draws one baseline factor shared by all nodes and one
independent correction per node::

    xi_base = xi_bar - lambda1 + 2 * lambda1 * Z
    xi_i    = xi_base - lambda2 + 2 * lambda2 * Z_i
    q_i     = max(0, round(xi_i * pop_i))

``Z`` and ``Z_i`` are uniform on [0, 1). Draws come from numpy's PCG64 seeded
with ``GenParams.seed``; per scenario the baseline draw is taken first, then
the node draws in node order. Rounding is to the nearest integer, ties to
even.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import BadScenarioCount, DimensionMismatch, ParseError

DEFAULT_D_MAX = 6.0
DEFAULT_OPENING_COST = 5000
CAPACITY_FACTOR = 3


@dataclass(frozen=True, eq=False)
class Instance:
    """A facility-location network.

    ``candidates[j]`` is the node index hosting candidate POD ``j``; ``dist``
    is |I| x |J| in km. ``gamma`` and ``cap`` are indexed by candidate.
    """

    n: int
    candidates: tuple[int, ...]
    dist: np.ndarray
    d_max: float
    gamma: tuple[int, ...]
    cap: tuple[int, ...]
    pop: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "dist", np.asarray(self.dist, dtype=float))
        validate_instance(self)

    @property
    def n_candidates(self) -> int:
        return len(self.candidates)

    def __eq__(self, other):
        if not isinstance(other, Instance):
            return NotImplemented
        return (
            self.n == other.n
            and self.candidates == other.candidates
            and self.d_max == other.d_max
            and self.gamma == other.gamma
            and self.cap == other.cap
            and self.pop == other.pop
            and np.array_equal(self.dist, other.dist)
        )


@dataclass(frozen=True, eq=False)
class ScenarioSet:
    """``q[s, i]`` is the demand of node ``i`` in scenario ``s``; scenarios are equiprobable."""

    q: np.ndarray

    def __post_init__(self):
        q = np.asarray(self.q)
        if q.ndim != 2:
            raise DimensionMismatch(f"demand matrix must be 2-D, got shape {q.shape}")
        if q.shape[0] < 1:
            raise BadScenarioCount("at least one scenario is required")
        if np.any(q < 0):
            raise ValueError("demands must be non-negative")
        object.__setattr__(self, "q", q.astype(np.int64))

    @property
    def N(self) -> int:
        return self.q.shape[0]

    @property
    def n_nodes(self) -> int:
        return self.q.shape[1]

    @property
    def probability(self) -> float:
        return 1.0 / self.N

    def total(self) -> np.ndarray:
        """Total demand per scenario."""
        return self.q.sum(axis=1)

    def __eq__(self, other):
        if not isinstance(other, ScenarioSet):
            return NotImplemented
        return np.array_equal(self.q, other.q)


@dataclass(frozen=True)
class GenParams:
    xi_bar: float = 1.0
    lambda1: float = 0.5
    lambda2: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.lambda1 < 0 or self.lambda2 < 0:
            raise ValueError("lambda1 and lambda2 must be non-negative")


def validate_instance(inst: Instance) -> None:
    n, m = inst.n, len(inst.candidates)
    if m > n:
        raise DimensionMismatch(f"{m} candidates but only {n} nodes")
    if len(set(inst.candidates)) != m or any(not 0 <= c < n for c in inst.candidates):
        raise DimensionMismatch("candidates must be distinct node indices")
    if inst.dist.shape != (n, m):
        raise DimensionMismatch(f"dist has shape {inst.dist.shape}, expected {(n, m)}")
    if len(inst.gamma) != m or len(inst.cap) != m:
        raise DimensionMismatch("gamma and cap need one entry per candidate")
    if len(inst.pop) != n:
        raise DimensionMismatch("pop needs one entry per node")
    if np.any(inst.dist < 0):
        raise ValueError("distances must be non-negative")
    if any(g <= 0 for g in inst.gamma):
        raise ValueError("opening costs must be positive")
    if any(c < 0 for c in inst.cap):
        raise ValueError("capacities must be non-negative")


def coverage_mask(inst: Instance) -> np.ndarray:
    """Boolean |I| x |J| matrix, True where the node is within walking radius."""
    return inst.dist <= inst.d_max


def generate_scenarios(inst: Instance, N: int, params: GenParams) -> ScenarioSet:
    if N < 1:
        raise BadScenarioCount(f"need N >= 1, got {N}")
    rng = np.random.Generator(np.random.PCG64(params.seed))
    pop = np.asarray(inst.pop, dtype=float)
    q = np.empty((N, inst.n), dtype=np.int64)
    l1, l2 = params.lambda1, params.lambda2
    for s in range(N):
        xi_base = params.xi_bar - l1 + 2.0 * l1 * rng.random()
        xi = xi_base - l2 + 2.0 * l2 * rng.random(inst.n)
        q[s] = np.maximum(np.rint(xi * pop), 0)
    return ScenarioSet(q)


def synth_instance(
    n: int,
    candidate_fraction: float,
    seed,
    *,
    side: float | None = None,
    d_max: float = DEFAULT_D_MAX,
    opening_cost: int = DEFAULT_OPENING_COST,
    pop_range: tuple[int, int] = (20, 500),
) -> Instance:
    """Random planar instance.

    Nodes are uniform in a ``side`` x ``side`` km square (default
    ``6 * sqrt(n)``, about three neighbours per node inside the radius).
    Every candidate costs ``opening_cost`` and holds three times its own
    population.
    """
    if n < 2:
        raise ValueError("need at least two nodes")
    if not 0 < candidate_fraction <= 1:
        raise ValueError("candidate_fraction must lie in (0, 1]")
    rng = np.random.Generator(np.random.PCG64(seed))
    if side is None:
        side = d_max * np.sqrt(n)
    xy = rng.random((n, 2)) * side
    pop = rng.integers(pop_range[0], pop_range[1], endpoint=True, size=n)
    m = max(1, int(round(candidate_fraction * n)))
    cand = tuple(sorted(int(c) for c in rng.choice(n, size=m, replace=False)))
    diff = xy[:, None, :] - xy[None, list(cand), :]
    dist = np.round(np.sqrt((diff**2).sum(axis=2)), 3)
    return Instance(
        n=n,
        candidates=cand,
        dist=dist,
        d_max=float(d_max),
        gamma=(int(opening_cost),) * m,
        cap=tuple(int(CAPACITY_FACTOR * pop[c]) for c in cand),
        pop=tuple(int(p) for p in pop),
    )


# -- files -------------------------------------------------------------------


def _dump(obj) -> str:
    return json.dumps(obj, indent=1) + "\n"


def instance_to_json(inst: Instance) -> str:
    return _dump(
        {
            "n": inst.n,
            "candidates": list(inst.candidates),
            "d_max": inst.d_max,
            "gamma": list(inst.gamma),
            "cap": list(inst.cap),
            "pop": list(inst.pop),
            "dist": inst.dist.tolist(),
        }
    )


def scenarios_to_json(sc: ScenarioSet) -> str:
    return _dump({"n_scenarios": sc.N, "demand": sc.q.tolist()})


def write_instance(inst: Instance, path) -> None:
    Path(path).write_text(instance_to_json(inst), encoding="utf-8", newline="")


def write_scenarios(sc: ScenarioSet, path) -> None:
    Path(path).write_text(scenarios_to_json(sc), encoding="utf-8", newline="")


class _JsonFile:
    """Parsed JSON document that can point error messages at source lines."""

    def __init__(self, path):
        self.text = Path(path).read_text(encoding="utf-8")
        try:
            self.obj = json.loads(self.text)
        except json.JSONDecodeError as exc:
            raise ParseError(exc.msg, line=exc.lineno) from None
        if not isinstance(self.obj, dict):
            raise ParseError("top level must be an object", line=1)

    def line_of(self, key, row=None):
        start = self.text.find(f'"{key}"')
        if start < 0:
            return None
        line = self.text.count("\n", 0, start) + 1
        if row is None:
            return line
        # rows are the row-th "[" after the key's opening bracket
        pos = self.text.find("[", start)
        for _ in range(row + 1):
            pos = self.text.find("[", pos + 1)
            if pos < 0:
                return line
        return self.text.count("\n", 0, pos) + 1

    def field(self, key, kind=None):
        if key not in self.obj:
            raise ParseError(f"missing field {key!r}")
        val = self.obj[key]
        ok = True
        if kind == "int":
            ok = isinstance(val, int) and not isinstance(val, bool)
        elif kind == "num":
            ok = isinstance(val, (int, float)) and not isinstance(val, bool)
        elif kind == "ints":
            ok = isinstance(val, list) and all(
                isinstance(v, int) and not isinstance(v, bool) for v in val
            )
        if not ok:
            raise ParseError(f"field {key!r} has the wrong type ({kind})", line=self.line_of(key))
        return val

    def matrix(self, key, numeric_type):
        rows = self.field(key)
        if not isinstance(rows, list) or not all(isinstance(r, list) for r in rows):
            raise ParseError(f"field {key!r} must be a list of rows", line=self.line_of(key))
        width = len(rows[0]) if rows else 0
        for k, r in enumerate(rows):
            if len(r) != width:
                raise ParseError(
                    f"{key} row {k} has {len(r)} entries, expected {width}",
                    line=self.line_of(key, k),
                )
            if not all(isinstance(v, numeric_type) and not isinstance(v, bool) for v in r):
                raise ParseError(f"{key} row {k} has non-numeric entries", line=self.line_of(key, k))
        return rows


def read_instance(path) -> Instance:
    doc = _JsonFile(path)
    n = doc.field("n", "int")
    cand = doc.field("candidates", "ints")
    gamma = doc.field("gamma", "ints")
    cap = doc.field("cap", "ints")
    pop = doc.field("pop", "ints")
    d_max = doc.field("d_max", "num")
    dist = doc.matrix("dist", (int, float))
    if len(cand) > n:
        raise DimensionMismatch(f"{len(cand)} candidates but only {n} nodes")
    dist_arr = np.array(dist, dtype=float).reshape(len(dist), -1 if dist else len(cand))
    return Instance(n, tuple(cand), dist_arr, float(d_max), tuple(gamma), tuple(cap), tuple(pop))


def read_scenarios(path, n_nodes: int | None = None) -> ScenarioSet:
    doc = _JsonFile(path)
    N = doc.field("n_scenarios", "int")
    rows = doc.matrix("demand", int)
    if len(rows) != N:
        raise DimensionMismatch(f"n_scenarios={N} but {len(rows)} demand rows")
    if N < 1:
        raise BadScenarioCount("scenario file holds no scenarios")
    if n_nodes is not None and len(rows[0]) != n_nodes:
        raise DimensionMismatch(f"demand rows have {len(rows[0])} entries, instance has {n_nodes} nodes")
    return ScenarioSet(np.array(rows, dtype=np.int64))
