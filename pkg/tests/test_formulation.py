import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import minimize

from dagmip.formulation import (
    MicpProblem,
    build_problem,
    calibrate_big_m,
    check_feasible,
    choose_delta,
    integral_point,
    micp_objective,
)
from dagmip.model import EdgeSet, random_dag
from dagmip.numerics import is_psd
from dagmip.scoring import brute_force_optimum, dag_mle, objective

from conftest import random_pd


def test_delta_examples():
    np.testing.assert_allclose(choose_delta(np.eye(3)), 1.0, atol=1e-9)
    np.testing.assert_allclose(choose_delta(np.diag([0.5, 2.0, 3.0])), [0.5, 2.0, 3.0], atol=1e-9)
    np.testing.assert_allclose(choose_delta(np.array([[2.0, 1.0], [1.0, 2.0]])), [1.0, 1.0], atol=1e-6)


def test_delta_two_by_two_grid():
    S = np.array([[2.0, 1.0], [1.0, 2.0]])
    best = max(d1 + d2 for d1, d2 in itertools.product(np.linspace(0, 2, 801), repeat=2)
               if (2 - d1) * (2 - d2) >= 1 and d1 <= 2 and d2 <= 2)
    assert choose_delta(S).sum() >= best - 1e-6


def _delta_reference(S):
    m = S.shape[0]
    cons = {"type": "ineq", "fun": lambda d: np.linalg.eigvalsh(S - np.diag(d))[0]}
    res = minimize(lambda d: -d.sum(), np.full(m, 0.5 * np.linalg.eigvalsh(S)[0]),
                   constraints=[cons], bounds=[(0, None)] * m, method="SLSQP",
                   options={"ftol": 1e-12, "maxiter": 500})
    return -res.fun


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 5), st.integers(0, 10**6))
def test_delta_feasible_maximal_and_near_optimal(m, seed):
    S = random_pd(m, np.random.default_rng(seed))
    delta = choose_delta(S)
    assert np.all(delta >= 0)
    assert is_psd(S - np.diag(delta), tol=1e-8)
    for i in range(m):
        bumped = delta.copy()
        bumped[i] += 1e-6
        assert not is_psd(S - np.diag(bumped), tol=1e-8)
    assert delta.sum() >= _delta_reference(S) - 1e-4 * m


def test_delta_singular_is_zero():
    S = np.ones((2, 2))
    np.testing.assert_array_equal(choose_delta(S), 0.0)


def test_big_m_examples():
    assert calibrate_big_m(np.eye(3), EdgeSet.full(3)) == pytest.approx(2.0)
    assert calibrate_big_m(4 * np.eye(3), EdgeSet.full(3)) == pytest.approx(1.0)
    S = np.array([[1.0, 0.5], [0.5, 1.0]])
    M = calibrate_big_m(S, EdgeSet.full(2))
    # closed form: column k with parent j has diag c^-1/2 and off-diagonal -b c^-1/2
    c = 1 - 0.25
    assert M == pytest.approx(2 * max(1 / np.sqrt(c), 0.5 / np.sqrt(c)))
    assert np.max(np.abs(brute_force_optimum(S, 0.01).gamma)) <= M


def test_big_m_bounds_oracle(rng):
    for m in (2, 3, 4):
        for _ in range(5):
            S = random_pd(m, rng)
            M = calibrate_big_m(S, EdgeSet.full(m))
            for lam in (0.0, 0.05):
                assert np.max(np.abs(brute_force_optimum(S, lam).gamma)) <= M


def test_empty_problem():
    P = build_problem(np.eye(3), EdgeSet(3), 1.0)
    assert P.n_binary == 0
    pt = integral_point(P, np.eye(3))
    assert check_feasible(P, pt) == []
    assert micp_objective(P, pt) == pytest.approx(3.0)


def test_variable_counts():
    P = build_problem(random_pd(3, np.random.default_rng(0)), EdgeSet.full(3), 0.1)
    assert P.variable_counts() == {"gamma": 9, "g": 6, "psi": 3, "s": 9, "T": 3}


def test_invalid_problems():
    with pytest.raises(ValueError):
        build_problem(np.eye(2), EdgeSet.full(3), 0.1)
    with pytest.raises(ValueError):
        build_problem(np.eye(2), EdgeSet.full(2), -0.1)
    with pytest.raises(ValueError):
        build_problem(np.eye(2), EdgeSet.full(2), 0.1, delta=[2.0, 2.0])


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 6), st.integers(0, 10**6))
def test_integral_point_objective_matches(m, seed):
    rng = np.random.default_rng(seed)
    S = random_pd(m, rng)
    P = build_problem(S, EdgeSet.full(m), 0.07)
    assert is_psd(P.Q, tol=1e-8)
    dag = random_dag(m, min(m, m * (m - 1) // 2), seed=seed)
    gamma = dag_mle(S, dag, 0.07).gamma
    pt = integral_point(P, gamma)
    assert check_feasible(P, pt) == []
    assert micp_objective(P, pt) == pytest.approx(objective(gamma, S, 0.07), abs=1e-10)


def test_feasibility_checks_catch_violations():
    S = random_pd(3, np.random.default_rng(1))
    P = build_problem(S, EdgeSet(3, frozenset({(0, 1), (1, 0)})), 0.1)
    G = np.eye(3)
    G[0, 2] = 0.3
    assert "support outside superstructure" in check_feasible(P, integral_point(P, G))
    G = np.eye(3)
    G[0, 1] = G[1, 0] = 0.3
    assert any("cyclic" in v for v in check_feasible(P, integral_point(P, G)))


def test_json_roundtrip(tmp_path):
    S = random_pd(4, np.random.default_rng(2))
    P = build_problem(S, EdgeSet.full(4), 0.1)
    Q = MicpProblem.from_json(P.to_json())
    assert Q.to_dict() == P.to_dict()
    P.to_json(tmp_path / "p.json")
    assert MicpProblem.from_json(tmp_path / "p.json").to_dict() == P.to_dict()
