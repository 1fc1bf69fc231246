"""Acceptance checks, one per criterion, each printing a PASS/FAIL line.

Run under pytest (lines are repeated in the terminal summary) or directly:
``python tests/test_acceptance.py``.
"""
from __future__ import annotations

import functools
import sys
import tempfile
import time
from pathlib import Path

import numpy as np
from scipy.optimize import linprog

sys.path.insert(0, str(Path(__file__).parent))
import oracle  # noqa: E402

from podfront.cli import main as cli_main  # noqa: E402
from podfront.core import fronts_equal, read_front, write_front  # noqa: E402
from podfront.frontier import balanced_box, epsilon_constraint  # noqa: E402
from podfront.instances import (  # noqa: E402
    GenParams, ScenarioSet, generate_scenarios, read_instance, read_scenarios, synth_instance, write_instance,
    write_scenarios,
)
from podfront.matheuristic import MatConfig, mat_frontier  # noqa: E402
from podfront.metrics import hypervolume, monte_carlo_hypervolume, reference_point, value_report  # noqa: E402
from podfront.models import CVaR, Expectation, WorstCase, build_model, cvar  # noqa: E402
from podfront.solver import mps_text  # noqa: E402

TOL_F2 = 1e-6
RESULTS: list[str] = []


def report(n: int, ok: bool, detail: str, started: float):
    line = f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail} ({time.monotonic() - started:.1f}s)"
    RESULTS.append(line)
    print(line, flush=True)
    assert ok, line


def alphas(N: int):
    return sorted({0.0, 0.5, 1.0 - 1.0 / N})


@functools.lru_cache(maxsize=None)
def suite():
    return oracle.suite()


@functools.lru_cache(maxsize=None)
def table(k: int):
    inst, sc = suite()[k]
    return oracle.all_points(inst, sc)


@functools.lru_cache(maxsize=None)
def eps_front(k: int, kind: str, alpha: float = 0.0):
    inst, sc = suite()[k]
    mode = {"expectation": Expectation(), "worstcase": WorstCase()}.get(kind) or CVaR(alpha)
    return epsilon_constraint(build_model(inst, sc, mode))


def matches(front, ref) -> bool:
    got = [(p.f1, p.f2) for p in front.points]
    return len(got) == len(ref) and all(a1 == b1 and abs(a2 - b2) <= TOL_F2 for (a1, a2), (b1, b2) in zip(got, ref))


# -- 1-3: exact fronts on the oracle suite -------------------------------------------------


def test_criterion_1_oracle_equivalence():
    t = time.monotonic()
    bad = []
    runs = 0
    for k in range(len(suite())):
        N = suite()[k][1].N
        for a in alphas(N):
            runs += 1
            if not matches(eps_front(k, "cvar", a), oracle.front(table(k), "cvar", a)):
                bad.append((k, a))
    report(1, not bad, f"{runs - len(bad)}/{runs} epsilon fronts equal the brute-force front; mismatches {bad}", t)


def test_criterion_2_balanced_box_agrees():
    t = time.monotonic()
    bad = []
    runs = 0
    for k in range(len(suite())):
        inst, sc = suite()[k]
        for a in alphas(sc.N):
            runs += 1
            if not fronts_equal(balanced_box(build_model(inst, sc, CVaR(a))), eps_front(k, "cvar", a), TOL_F2):
                bad.append((k, a))
    report(2, not bad, f"{runs - len(bad)}/{runs} balanced-box fronts equal the epsilon fronts; mismatches {bad}", t)


def test_criterion_3_model_specialisation():
    t = time.monotonic()
    bad = []
    for k in range(len(suite())):
        N = suite()[k][1].N
        if not fronts_equal(eps_front(k, "cvar", 0.0), eps_front(k, "expectation"), TOL_F2):
            bad.append((k, "M1"))
        if not fronts_equal(eps_front(k, "cvar", 1.0 - 1.0 / N), eps_front(k, "worstcase"), TOL_F2):
            bad.append((k, "M2"))
    report(3, not bad, f"M3(0)=M1 and M3(1-1/N)=M2 on {len(suite())} instances; mismatches {bad}", t)


# -- 4: CVaR unit properties ---------------------------------------------------------------


def cvar_lp(v, alpha):
    N = len(v)
    c = np.r_[1.0, np.full(N, 1.0 / ((1 - alpha) * N))]
    A = np.hstack([-np.ones((N, 1)), -np.eye(N)])
    res = linprog(c, A_ub=A, b_ub=-np.asarray(v, float), bounds=[(None, None)] + [(0, None)] * N, method="highs")
    return res.fun


def test_criterion_4_cvar_properties():
    t = time.monotonic()
    rng = np.random.default_rng(4)
    worst = {"lp": 0.0, "mono": 0.0, "bounds": 0.0, "shift": 0.0, "scale": 0.0}
    for _ in range(1000):
        N = int(rng.integers(1, 21))
        v = rng.integers(0, 1000, N).astype(float)
        a, b = np.sort(rng.random(2) * 0.99)
        ca = cvar(v, a)
        worst["lp"] = max(worst["lp"], abs(ca - cvar_lp(v, a)) / max(1.0, abs(ca)))
        worst["mono"] = max(worst["mono"], (ca - cvar(v, b)) / max(1.0, abs(ca)))
        worst["bounds"] = max(worst["bounds"], (v.mean() - ca) / max(1.0, abs(ca)), (ca - v.max()) / max(1.0, abs(ca)))
        shift, lam = float(rng.integers(-100, 100)), float(rng.uniform(0.1, 10))
        worst["shift"] = max(worst["shift"], abs(cvar(v + shift, a) - ca - shift) / max(1.0, abs(ca)))
        worst["scale"] = max(worst["scale"], abs(cvar(lam * v, a) - lam * ca) / max(1.0, abs(lam * ca)))
    ok = all(w <= 1e-9 for w in worst.values())
    report(4, ok, "1000 vectors; worst relative deviations " + ", ".join(f"{k}={w:.1e}" for k, w in worst.items()), t)


# -- 5: matheuristic quality ---------------------------------------------------------------

MAT_INSTANCES = [(20 + k, 100 + k) for k in range(10)]
MAT_CANDIDATE_FRACTION = 0.25
# the restricted MIPs get 20 s each instead of the default 150 s
MAT_CONFIG = MatConfig(tilim=20)


@functools.lru_cache(maxsize=None)
def mat_instance(n: int, seed: int):
    inst = synth_instance(n, MAT_CANDIDATE_FRACTION, seed)
    sc = generate_scenarios(inst, 10, GenParams(seed=seed))
    return inst, sc, oracle.enumerated_points(inst, sc)


@functools.lru_cache(maxsize=None)
def mat_front(n: int, seed: int, alpha: float):
    inst, sc, _ = mat_instance(n, seed)
    return mat_frontier(build_model(inst, sc, CVaR(alpha)), MAT_CONFIG)


def test_criterion_5_matheuristic_quality():
    t = time.monotonic()
    problems = []
    ratios = []
    for n, seed in MAT_INSTANCES:
        inst, sc, points = mat_instance(n, seed)
        for a in (0.0, 0.7):
            # exact front by enumerating every first stage, recourse solved per scenario
            exact = oracle.front(points, "cvar", a)
            approx = mat_front(n, seed, a)
            for e in approx:
                f1 = sum(g for g, on in zip(inst.gamma, e.y) if on)
                f2 = oracle.tail_cvar(points[tuple(int(v) for v in e.y)][1], a)
                if f1 != e.f1 or abs(f2 - e.f2) > TOL_F2:
                    problems.append((n, a, "unverified point"))
            got = [(p.f1, p.f2) for p in approx.points]
            ref = reference_point(exact, got)
            h_exact = hypervolume(exact, ref)
            ratio = 1.0 if h_exact == 0 else hypervolume(got, ref) / h_exact
            ratios.append(ratio)
            if ratio < 0.99:
                problems.append((n, a, f"hv ratio {ratio:.4f}"))
    elapsed = time.monotonic() - t
    if elapsed > 1800:
        problems.append(f"took {elapsed:.0f}s")
    report(5, not problems, f"20 runs at 20-29 nodes; min hv ratio {min(ratios):.4f}; problems {problems}", t)


# -- 6: signs of the value measures --------------------------------------------------------


def test_criterion_6_value_measure_signs():
    t = time.monotonic()
    worst = 0.0
    bad = []
    for k in range(len(suite())):
        inst, sc = suite()[k]
        for a in alphas(sc.N):
            rep = value_report(eps_front(k, "cvar", a), inst, sc, CVaR(a))
            for r in rep.rows:
                worst = min(worst, r.rvpi, r.rvss)
                if r.rvpi < -TOL_F2 or r.rvss < -TOL_F2:
                    bad.append((k, a, r.f1))
    zero_bad = []
    for k in range(0, len(suite()), 4):
        inst, sc = suite()[k]
        same = ScenarioSet(np.repeat(sc.q[:1], 3, axis=0))
        for a in (0.0, 0.5, 2 / 3):
            front = epsilon_constraint(build_model(inst, same, CVaR(a)))
            for r in value_report(front, inst, same, CVaR(a)).rows:
                if r.rvpi != 0 or r.rvss != 0:
                    zero_bad.append((k, a, r.f1))
    ok = not bad and not zero_bad
    report(6, ok, f"min(RVPI, RVSS) = {worst:.3g}; negative at {bad}; zero-variance violations {zero_bad}", t)


# -- 7: hypervolume ------------------------------------------------------------------------


def test_criterion_7_hypervolume():
    t = time.monotonic()
    rng = np.random.default_rng(7)
    worst = 0.0
    for i in range(10):
        f1 = np.sort(rng.choice(100, size=int(rng.integers(1, 9)), replace=False)).astype(float)
        f2 = np.sort(rng.choice(100, size=f1.size, replace=False))[::-1].astype(float)
        pts = list(zip(f1, f2))
        ref = (110.0, 110.0)
        exact = hypervolume(pts, ref)
        mc = monte_carlo_hypervolume(pts, ref, samples=10**6, seed=i)
        worst = max(worst, abs(mc - exact) / exact)
    hand = hypervolume([(1, 3), (2, 2), (3, 1)], (4, 4))
    report(7, worst <= 0.005 and hand == 6, f"worst Monte-Carlo deviation {worst:.2%}; hand example {hand}", t)


# -- 8: scenario generator -----------------------------------------------------------------


def test_criterion_8_generator():
    t = time.monotonic()
    inst = synth_instance(30, 0.3, seed=8)
    params = GenParams(xi_bar=1.0, lambda1=0.5, lambda2=0.5, seed=8)
    sc = generate_scenarios(inst, 10_000, params)
    pop = np.asarray(inst.pop)
    inside = bool(np.all(sc.q >= 0) and np.all(sc.q <= 2 * pop))
    with tempfile.TemporaryDirectory() as tmp:
        a, b = Path(tmp) / "a.json", Path(tmp) / "b.json"
        write_scenarios(generate_scenarios(inst, 50, params), a)
        write_scenarios(generate_scenarios(inst, 50, params), b)
        same = a.read_bytes() == b.read_bytes()
    report(8, inside and same, f"10^4 scenarios inside [0, 2 pop]: {inside}; seeded files identical: {same}", t)


# -- 9: formats ----------------------------------------------------------------------------


def _rewrites_identically(write, read, obj, tmp: Path, name: str) -> bool:
    p1, p2 = tmp / f"{name}1", tmp / f"{name}2"
    write(obj, p1)
    write(read(p1), p2)
    return p1.read_bytes() == p2.read_bytes()


def test_criterion_9_formats():
    t = time.monotonic()
    problems = []
    golden = Path(__file__).parent / "data" / "golden_cvar.mps"
    from test_solver import golden_model
    if mps_text(golden_model()) != golden.read_text():
        problems.append("MPS golden file differs")
    verified = 0
    with tempfile.TemporaryDirectory() as tmpdir:
        tmp = Path(tmpdir)
        cases = [(suite()[k], "m3", a, eps_front(k, "cvar", a)) for k in range(len(suite())) for a in alphas(suite()[k][1].N)]
        cases += [(suite()[k], "m1", None, eps_front(k, "expectation")) for k in range(len(suite()))]
        cases += [(suite()[k], "m2", None, eps_front(k, "worstcase")) for k in range(len(suite()))]
        for n, seed in MAT_INSTANCES[:3]:
            for a in (0.0, 0.7):
                inst, sc, _ = mat_instance(n, seed)
                cases.append(((inst, sc), "m3", a, mat_front(n, seed, a)))
        for idx, ((inst, sc), model, a, front) in enumerate(cases):
            ok = (_rewrites_identically(write_instance, read_instance, inst, tmp, "i")
                  and _rewrites_identically(write_scenarios, read_scenarios, sc, tmp, "s")
                  and _rewrites_identically(write_front, read_front, front, tmp, "f"))
            if not ok:
                problems.append(f"round trip {idx}")
            args = ["verify", "--instance", str(tmp / "i1"), "--scenarios", str(tmp / "s1"),
                    "--front", str(tmp / "f1"), "--model", model]
            if a is not None:
                args += ["--alpha", repr(a)]
            if cli_main(args) != 0:
                problems.append(f"verify rejected front {idx}")
            else:
                verified += 1
    report(9, not problems, f"golden MPS, file round trips and verify on {verified} emitted fronts; problems {problems}", t)


if __name__ == "__main__":
    tests = [v for k, v in sorted(globals().items()) if k.startswith("test_criterion_")]
    tests.sort(key=lambda f: int(f.__name__.split("_")[2]))
    failed = 0
    for f in tests:
        try:
            f()
        except AssertionError:
            failed += 1
    sys.exit(1 if failed else 0)
