import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracle
from podfront.errors import BadReferencePoint
from podfront.frontier import epsilon_constraint
from podfront.instances import ScenarioSet
from podfront.metrics import (
    IndicatorReport, IndicatorRow, hypervolume, mean_demand, monte_carlo_hypervolume, rev, rws, value_report,
)
from podfront.models import CVaR, Expectation, build_model, evaluate_point


def test_hypervolume_hand_values():
    assert hypervolume([(1, 3), (2, 2), (3, 1)], (4, 4)) == 6
    assert hypervolume([(0, 0)], (1, 1)) == 1
    assert hypervolume([], (1, 1)) == 0
    with pytest.raises(BadReferencePoint):
        hypervolume([(5, 0)], (4, 4))


def staircase(draw_pts):
    pts = sorted(set(draw_pts))
    out = []
    for p in pts:
        if not out or p[1] < out[-1][1]:
            out.append(p)
    return out


@given(st.lists(st.tuples(st.integers(0, 50), st.integers(0, 50)), min_size=1, max_size=12))
def test_hypervolume_ignores_dominated_points(pts):
    ref = (60, 60)
    assert hypervolume(pts, ref) == hypervolume(staircase(pts), ref)


@given(st.lists(st.tuples(st.integers(0, 50), st.integers(0, 50)), min_size=1, max_size=12),
       st.tuples(st.integers(0, 50), st.integers(0, 50)))
def test_hypervolume_monotone(pts, extra):
    ref = (60, 60)
    assert hypervolume(pts + [extra], ref) >= hypervolume(pts, ref)


def test_monte_carlo_agrees():
    rng = np.random.default_rng(1)
    pts = staircase([tuple(p) for p in rng.integers(0, 100, (8, 2))])
    exact = hypervolume(pts, (110, 110))
    assert monte_carlo_hypervolume(pts, (110, 110), samples=200_000) == pytest.approx(exact, rel=0.02)


@pytest.mark.parametrize("k", [3, 5, 12])
@pytest.mark.parametrize("alpha", [0.0, 0.5])
def test_rws_and_rev_match_enumeration(k, alpha):
    inst, sc = oracle.suite()[k]
    table = oracle.all_points(inst, sc)
    for budget in sorted({f1 for f1, _ in table.values()})[:4]:
        per_scenario = []
        for s in range(sc.N):
            per_scenario.append(min(l[s] for f1, l in table.values() if f1 <= budget))
        assert rws(inst, sc, alpha, budget) == pytest.approx(oracle.tail_cvar(per_scenario, alpha), abs=1e-9)
        # expected-value problem: best y for the rounded mean demand, cheapest among ties
        qbar = mean_demand(sc)
        ys = [y for y, (f1, _) in table.items() if f1 <= budget]
        score = {y: oracle.best_loss(inst, qbar, y) for y in ys}
        best = min(score.values())
        cheapest = min(table[y][0] for y in ys if score[y] == best)
        # several first stages can tie on both; any of them is a valid choice
        allowed = [oracle.tail_cvar(table[y][1], alpha) for y in ys if score[y] == best and table[y][0] == cheapest]
        got = rev(inst, sc, alpha, budget)
        assert min(abs(got - v) for v in allowed) <= 1e-9


def test_single_scenario_has_no_value_of_information():
    inst, sc = oracle.suite()[0]
    assert sc.N == 1
    front = epsilon_constraint(build_model(inst, sc, CVaR(0.0)))
    report = value_report(front, inst, sc, 0.0)
    for row in report.rows:
        assert row.rws == pytest.approx(row.rrp, abs=1e-9)


def test_zero_variance_scenarios():
    inst, sc = oracle.suite()[5]
    same = ScenarioSet(np.repeat(sc.q[:1], 4, axis=0))
    front = epsilon_constraint(build_model(inst, same, CVaR(0.5)))
    report = value_report(front, inst, same, CVaR(0.5))
    for row in report.rows:
        assert row.rvpi == 0 and row.rvss == 0


def test_report_signs_and_aggregates():
    inst, sc = oracle.suite()[12]
    front = epsilon_constraint(build_model(inst, sc, Expectation()))
    report = value_report(front, inst, sc, Expectation())
    assert [r.f1 for r in report.rows] == [p.f1 for p in front.points]
    for r in report.rows:
        assert r.rvpi >= -1e-6 and r.rvss >= -1e-6
    assert report.max_rvpi_rel >= report.avg_rvpi_rel
    assert report.max_rvss_rel >= report.avg_rvss_rel


def test_report_csv_and_undefined_relative_values():
    rep = IndicatorReport((IndicatorRow(0.0, 4.0, 3.0, 5.0), IndicatorRow(5000.0, 0.0, 0.0, 0.0)))
    lines = rep.to_csv().splitlines()
    assert lines[0] == "f1,rrp,rws,rev,rvpi,rvss,rvpi_rel,rvss_rel"
    assert lines[1] == "0,4,3,5,1,1,0.25,0.25"
    assert lines[2] == "5000,0,0,0,0,0,NA,NA"
    assert rep.avg_rvpi_rel == 0.25


def test_evaluate_point_is_what_rrp_reports():
    inst, sc = oracle.suite()[3]
    front = epsilon_constraint(build_model(inst, sc, CVaR(0.5)))
    for e in front:
        assert evaluate_point(inst, sc, CVaR(0.5), e.y)[1] == pytest.approx(e.f2, abs=1e-9)
