import csv
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dagmip.evaluation import mec_equal
from dagmip.formulation import build_problem, check_feasible, integral_point
from dagmip.model import EdgeSet, moral_graph, random_dag, topological_order
from dagmip.scoring import brute_force_optimum, objective
from dagmip.solver import (
    GAP_REACHED,
    OPTIMAL,
    TIME_LIMIT,
    CutPool,
    DegenerateColumn,
    ParentSetTable,
    SolveConfig,
    branch_and_bound,
    gap_target,
    greedy_incumbent,
    oa_cut_at,
    rescale_to_trace,
    solve_integer_log_program,
    solve_node_relaxation,
    write_event_log,
)

from conftest import random_pd


# --- outer approximation ------------------------------------------------------

@pytest.mark.parametrize("anchor, slope, intercept", [
    (4.0, -0.5, 2 - 2 * math.log(4)),
    (1.0, -2.0, 2.0),
    (2.0, -1.0, 2 - 2 * math.log(2)),
])
def test_cut_formulas(anchor, slope, intercept):
    cut = oa_cut_at(0, anchor)
    assert cut.slope == pytest.approx(slope, abs=1e-12)
    assert cut.intercept == pytest.approx(intercept, abs=1e-12)
    assert cut(anchor) == pytest.approx(-2 * math.log(anchor))


def test_cut_anchor_floor():
    with pytest.raises(ValueError):
        oa_cut_at(0, 1e-9)


@settings(max_examples=50, deadline=None)
@given(st.floats(1e-6, 1e3))
def test_cuts_underestimate(anchor):
    cut = oa_cut_at(0, anchor)
    xs = np.random.default_rng(0).uniform(1e-6, 1e3, 1000)
    assert np.all(cut(xs) <= -2 * np.log(xs) + 1e-12)


def test_integer_log_program():
    trace = solve_integer_log_program()
    assert trace.anchors == [4, 1, 2]
    assert trace.iterates == [4, 1, 2, 2]
    assert [c.anchor for c in trace.cuts] == [1.0, 2.0, 4.0]
    assert trace.x == 2 and trace.value == pytest.approx(2 - 2 * math.log(2), abs=1e-9)


def test_cut_pool_minimize_matches_grid():
    pool = CutPool(1)
    for a in (0.5, 1.0, 3.0):
        pool.add_at(0, a)
    assert not pool.add_at(0, 1.0)
    x, v = pool.minimize(0, 0.7, -0.2, 0.1, 5.0)
    grid = np.linspace(0.1, 5.0, 200001)
    vals = 0.7 * grid ** 2 - 0.2 * grid + np.array([pool.value(0, g) for g in grid])
    assert v <= vals.min() + 1e-9 and v == pytest.approx(vals.min(), abs=1e-6)


# --- node relaxations ---------------------------------------------------------

def _pool_at_one(m):
    pool = CutPool(m)
    for i in range(m):
        pool.add_at(i, 1.0)
    return pool


def test_relaxation_all_fixed_out():
    P = build_problem(np.eye(3), EdgeSet.full(3), 0.1)
    pool = _pool_at_one(3)
    rel = solve_node_relaxation(P, pool, {p: 0 for p in P.pairs})
    assert rel.bound == pytest.approx(3.0, abs=1e-6)
    np.testing.assert_allclose(rel.gamma(3), np.eye(3), atol=1e-4)
    for k in range(3):
        assert pool.value(k, rel.columns[k].diag) >= -2 * math.log(rel.columns[k].diag) - 1e-6


def test_relaxation_scalar_toy():
    P = build_problem(np.eye(1), EdgeSet(1), 0.0)
    pool = CutPool(1)
    pool.add_at(0, 4.0)
    rel = solve_node_relaxation(P, pool, {})
    assert rel.bound == pytest.approx(1.0, abs=1e-6)
    assert rel.columns[0].diag == pytest.approx(1.0, abs=1e-3)


def test_root_relaxation_is_a_lower_bound(rng):
    for m in (3, 4):
        for _ in range(6):
            S = random_pd(m, rng)
            for lam in (0.01, 0.1):
                P = build_problem(S, EdgeSet.full(m), lam)
                rel = solve_node_relaxation(P, _pool_at_one(m), {})
                assert rel.bound <= brute_force_optimum(S, lam).objective + 1e-9


# --- gap targets and rescaling ------------------------------------------------

def test_gap_targets():
    assert gap_target("exact") == 0
    assert gap_target("theorem1", 0.02, 20) == pytest.approx(1.9)
    assert gap_target("theorem2", 0.02) == pytest.approx(0.01)
    assert gap_target("custom", tau=0.3) == 0.3
    for bad in (dict(mode="custom", tau=-1), dict(mode="theorem2", lambda_sq=1, c=1.5),
                dict(mode="nope")):
        with pytest.raises(ValueError):
            gap_target(**bad)


def test_rescale_examples():
    np.testing.assert_array_equal(rescale_to_trace(np.eye(3), np.eye(3)), np.eye(3))
    np.testing.assert_allclose(rescale_to_trace(2 * np.eye(3), np.eye(3)), np.eye(3))
    with pytest.raises(DegenerateColumn):
        rescale_to_trace(np.diag([1.0, 0.0]), np.eye(2))


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 6), st.integers(0, 10**6))
def test_rescale_properties(m, seed):
    rng = np.random.default_rng(seed)
    S = random_pd(m, rng)
    G = np.diag(rng.uniform(0.1, 3.0, m))
    order = rng.permutation(m)
    for a in range(m):
        for b in range(a + 1, m):
            if rng.random() < 0.5:
                G[order[a], order[b]] = rng.standard_normal()
    H = rescale_to_trace(G, S)
    assert np.trace(H @ H.T @ S) == pytest.approx(m, abs=1e-9)
    assert np.array_equal(H != 0, G != 0)
    assert objective(H, S, 0.1) <= objective(G, S, 0.1) + 1e-10


# --- branch and bound ---------------------------------------------------------

def test_empty_superstructure():
    S = np.diag([4.0, 1.0, 0.25])
    rep = branch_and_bound(build_problem(S, EdgeSet(3), 0.1))
    assert rep.status == OPTIMAL and rep.nodes_explored == 1 and len(rep.dag) == 0
    np.testing.assert_allclose(rep.gamma, np.diag([0.5, 1.0, 2.0]))


def test_greedy_incumbent_is_feasible(rng):
    S = random_pd(5, rng)
    P = build_problem(S, EdgeSet.full(5), 0.05)
    inc = greedy_incumbent(P)
    assert topological_order(5, inc.dag.edges) is not None


def _check_report(P, S, rep):
    G = rep.gamma
    assert topological_order(P.m, rep.dag.edges) is not None
    assert check_feasible(P, integral_point(P, G)) == []
    assert objective(G, S, P.lambda_sq) == pytest.approx(rep.upper_bound, abs=1e-9)
    assert np.trace(G @ G.T @ S) == pytest.approx(P.m, abs=1e-6)
    ubs = [e[3] for e in rep.events]
    lbs = [e[4] for e in rep.events]
    assert all(b <= a for a, b in zip(ubs, ubs[1:]))
    assert all(b >= a for a, b in zip(lbs, lbs[1:]))


@pytest.mark.parametrize("relaxation", ["parent-set", "perspective"])
def test_matches_oracle(relaxation):
    rng = np.random.default_rng(7)
    for m in (3, 4):
        for _ in range(8):
            S = random_pd(m, rng)
            for lam in (0.01, 0.1):
                P = build_problem(S, EdgeSet.full(m), lam)
                rep = branch_and_bound(P, SolveConfig(relaxation=relaxation))
                best = brute_force_optimum(S, lam)
                assert rep.status == OPTIMAL
                assert rep.objective == pytest.approx(best.objective, abs=1e-6)
                assert mec_equal(rep.dag, best.dag) or len(rep.dag) == len(best.dag)
                assert all(e[4] <= best.objective + 1e-9 for e in rep.events)
                _check_report(P, S, rep)


def test_cuts_at_fractional_agrees(rng):
    S = random_pd(4, rng)
    P = build_problem(S, EdgeSet.full(4), 0.03)
    a = branch_and_bound(P, SolveConfig(relaxation="perspective"))
    b = branch_and_bound(P, SolveConfig(relaxation="perspective", cuts_at_fractional=True))
    assert a.objective == pytest.approx(b.objective, abs=1e-9)
    assert b.oa_cuts >= a.oa_cuts


@pytest.mark.parametrize("group_size", [1, 3, 8])
def test_group_size_does_not_change_optimum(group_size):
    from dagmip.model import generate_data, random_sem, sample_covariance

    dag = random_dag(8, 10, seed=4)
    X = generate_data(random_sem(dag, seed=4), 200, seed=4)
    S = sample_covariance(X)
    E = moral_graph(dag)
    P = build_problem(S, E, 0.02)
    ref = branch_and_bound(P, SolveConfig(group_size=8))
    rep = branch_and_bound(P, SolveConfig(group_size=group_size), parent_sets=ParentSetTable(S, E))
    assert rep.status == OPTIMAL
    assert rep.objective == pytest.approx(ref.objective, abs=1e-9)
    assert rep.nodes_explored >= ref.nodes_explored


def test_deterministic_reports(rng):
    S = random_pd(5, rng)
    P = build_problem(S, EdgeSet.full(5), 0.02)
    a = branch_and_bound(P).to_dict(timings=False)
    b = branch_and_bound(P).to_dict(timings=False)
    assert a == b


def test_gap_target_stops_early_and_is_honoured():
    from dagmip.model import generate_data, random_sem, sample_covariance

    dag = random_dag(12, 16, seed=1)
    X = generate_data(random_sem(dag, seed=1), 100, seed=1)
    S = sample_covariance(X)
    P = build_problem(S, moral_graph(dag), 0.05)
    exact = branch_and_bound(P)
    tau = gap_target("theorem1", 0.05, 12)
    early = branch_and_bound(P, SolveConfig(gap_target=tau))
    assert early.status in (GAP_REACHED, OPTIMAL)
    assert early.gap <= tau
    assert early.nodes_explored <= exact.nodes_explored
    assert early.objective - tau <= exact.objective <= early.objective


def test_node_limit_reports_time_limit(rng):
    S = random_pd(5, rng)
    P = build_problem(S, EdgeSet.full(5), 0.001)
    rep = branch_and_bound(P, SolveConfig(max_nodes=1, relaxation="perspective"))
    assert rep.status == TIME_LIMIT
    assert rep.lower_bound <= rep.upper_bound
    assert rep.lower_bound <= brute_force_optimum(S, 0.001).objective + 1e-9


def test_default_time_limit():
    assert SolveConfig().time_limit(7) == 350
    assert SolveConfig(time_limit_secs=3).time_limit(7) == 3


def test_config_validation():
    for bad in (dict(gap_target=-1), dict(time_limit_secs=0), dict(group_size=0),
                dict(relaxation="lp"), dict(worker_count=0)):
        with pytest.raises(ValueError):
            SolveConfig(**bad)


def test_event_log(tmp_path, rng):
    S = random_pd(4, rng)
    rep = branch_and_bound(build_problem(S, EdgeSet.full(4), 0.01),
                           SolveConfig(event_log=str(tmp_path / "ev.csv")))
    rows = list(csv.reader(open(tmp_path / "ev.csv")))
    assert rows[0] == ["wall_secs", "node", "event", "upper_bound", "lower_bound"]
    assert len(rows) == len(rep.events) + 1
    write_event_log(rep, tmp_path / "ev2.csv", timings=False)
    assert next(csv.reader(open(tmp_path / "ev2.csv")))[0] == "node"


def test_report_json(rng):
    import json

    S = random_pd(3, rng)
    rep = branch_and_bound(build_problem(S, EdgeSet.full(3), 0.01))
    doc = json.loads(rep.to_json())
    assert doc["status"] == OPTIMAL and doc["rgap"] == 0.0
    assert "wall_secs" not in json.loads(rep.to_json(timings=False))
