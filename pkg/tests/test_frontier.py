import time

import pytest

import oracle
from podfront.core import fronts_equal
from podfront.errors import EndpointsTimeout
from podfront.frontier import SearchConfig, balanced_box, endpoints, epsilon_constraint
from podfront.instances import GenParams, generate_scenarios, synth_instance
from podfront.models import CVaR, Expectation, WorstCase, build_model

SMALL = [0, 3, 5, 9, 12, 16]


def as_pairs(front):
    return [(p.f1, p.f2) for p in front.points]


def assert_matches(front, ref):
    got = as_pairs(front)
    assert len(got) == len(ref), (got, ref)
    for (a1, a2), (b1, b2) in zip(got, ref):
        assert a1 == b1
        assert a2 == pytest.approx(b2, abs=1e-6)


@pytest.mark.parametrize("k", SMALL)
def test_epsilon_front_matches_enumeration(k):
    inst, sc = oracle.suite()[k]
    table = oracle.all_points(inst, sc)
    for a in sorted({0.0, 0.5, 1 - 1 / sc.N}):
        front = epsilon_constraint(build_model(inst, sc, CVaR(a)))
        assert front.complete
        assert_matches(front, oracle.front(table, "cvar", a))


@pytest.mark.parametrize("k", SMALL)
def test_balanced_box_agrees(k):
    inst, sc = oracle.suite()[k]
    m = build_model(inst, sc, CVaR(0.5))
    assert fronts_equal(balanced_box(m), epsilon_constraint(m))


@pytest.mark.parametrize("k", SMALL[:4])
def test_expectation_and_worst_case_models(k):
    inst, sc = oracle.suite()[k]
    table = oracle.all_points(inst, sc)
    assert_matches(epsilon_constraint(build_model(inst, sc, Expectation())), oracle.front(table, "expectation"))
    assert_matches(epsilon_constraint(build_model(inst, sc, WorstCase())), oracle.front(table, "worstcase"))


def test_endpoints_are_lexicographic_extremes():
    inst, sc = oracle.suite()[5]
    table = oracle.all_points(inst, sc)
    top, bottom = endpoints(build_model(inst, sc, CVaR(0.5)))
    ref = oracle.front(table, "cvar", 0.5)
    assert (top.f1, top.f2) == (ref[0][0], pytest.approx(ref[0][1]))
    assert (bottom.f1, bottom.f2) == (ref[-1][0], pytest.approx(ref[-1][1]))
    assert top.y == (0,) * inst.n_candidates


def test_front_entries_carry_their_first_stage():
    inst, sc = oracle.suite()[12]
    front = epsilon_constraint(build_model(inst, sc, CVaR(0.5)))
    for e in front:
        assert e.f1 == sum(g for g, on in zip(inst.gamma, e.y) if on)


def test_time_limit_marks_front_incomplete():
    inst = synth_instance(16, 0.4, seed=5)
    sc = generate_scenarios(inst, 6, GenParams(seed=5))
    m = build_model(inst, sc, CVaR(0.7))
    with pytest.raises(EndpointsTimeout):
        epsilon_constraint(m, SearchConfig(total_time_limit=1e-3))
    t = time.monotonic()
    endpoints(m)
    t_ends = time.monotonic() - t
    t = time.monotonic()
    full = epsilon_constraint(m)
    t_full = time.monotonic() - t
    assert full.complete
    # enough for the endpoints, not for the sweep
    front = epsilon_constraint(m, SearchConfig(total_time_limit=(t_ends + t_full) / 2))
    assert not front.complete
    pts = as_pairs(front)
    assert pts == sorted(pts)
    for p in pts:
        assert any(p[0] == q[0] and p[1] == pytest.approx(q[1], abs=1e-6) for q in as_pairs(full))


def test_config_validation():
    with pytest.raises(ValueError):
        SearchConfig(d2=0)
    with pytest.raises(ValueError):
        SearchConfig(d1=-1)
