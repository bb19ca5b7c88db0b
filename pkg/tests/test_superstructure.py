import itertools

import numpy as np
import pytest

from dagmip.model import Dag, generate_data, random_sem
from dagmip.numerics import is_positive_definite
from dagmip.superstructure import (
    GlassoConfig,
    MaxIterExceeded,
    estimate_superstructure,
    glasso_objective,
    graphical_lasso,
    threshold_support,
)

from conftest import random_pd


@pytest.mark.parametrize("method", ["newton", "ista"])
def test_identity(method):
    theta = graphical_lasso(np.eye(4), GlassoConfig(0.3, method=method))
    np.testing.assert_allclose(theta, np.eye(4), atol=1e-6)


@pytest.mark.parametrize("method", ["newton", "ista"])
def test_diagonal(method):
    a = np.array([0.5, 2.0, 4.0])
    theta = graphical_lasso(np.diag(a), GlassoConfig(0.2, method=method))
    np.testing.assert_allclose(theta, np.diag(1 / a), atol=1e-6)


def test_two_by_two_grid_oracle():
    S = np.array([[1.0, 0.6], [0.6, 1.5]])
    lam = 0.1
    theta = graphical_lasso(S, GlassoConfig(lam, tol=1e-10))
    f = glasso_objective(theta, S, lam)
    # coarse grid, then a fine grid around the coarse minimizer
    best = (np.inf, None)
    for a, d in itertools.product(np.linspace(0.3, 3, 55), repeat=2):
        for b in np.linspace(-1.5, 1.5, 61):
            T = np.array([[a, b], [b, d]])
            if a * d - b * b > 1e-9:
                best = min(best, (glasso_objective(T, S, lam), (a, b, d)), key=lambda t: t[0])
    a0, b0, d0 = best[1]
    for a, b, d in itertools.product(np.linspace(a0 - 0.05, a0 + 0.05, 41),
                                     np.linspace(b0 - 0.05, b0 + 0.05, 41),
                                     np.linspace(d0 - 0.05, d0 + 0.05, 41)):
        if a * d - b * b > 1e-9:
            best = min(best, (glasso_objective(np.array([[a, b], [b, d]]), S, lam), None),
                       key=lambda t: t[0])
    assert f <= best[0] + 1e-4
    assert abs(f - best[0]) <= 1e-4


@pytest.mark.parametrize("method", ["newton", "ista"])
def test_monotone_and_pd(rng, method):
    S = random_pd(8, rng)
    theta, info = graphical_lasso(S, GlassoConfig(0.05, method=method), return_info=True)
    assert all(b <= a + 1e-12 for a, b in zip(info.objectives, info.objectives[1:]))
    assert is_positive_definite(theta - 1e-8 * np.eye(8), rtol=0.0)
    assert info.residual <= 1e-6


def test_methods_agree(rng):
    S = random_pd(6, rng)
    a = graphical_lasso(S, GlassoConfig(0.05, tol=1e-9))
    b = graphical_lasso(S, GlassoConfig(0.05, tol=1e-9, method="ista", max_iter=50000))
    np.testing.assert_allclose(a, b, atol=1e-6)


def test_max_iter_carries_iterate(rng):
    S = random_pd(6, rng)
    with pytest.raises(MaxIterExceeded) as exc:
        graphical_lasso(S, GlassoConfig(0.05, method="ista", max_iter=2, tol=1e-14))
    assert exc.value.theta.shape == (6, 6) and exc.value.residual > 0


def test_config_validation():
    with pytest.raises(ValueError):
        GlassoConfig(-1.0)
    with pytest.raises(ValueError):
        GlassoConfig(threshold_tau=-0.1)
    with pytest.raises(ValueError):
        GlassoConfig(method="admm")


def test_threshold_support():
    assert len(threshold_support(np.diag([1.0, 2.0, 3.0]), 0.1)) == 0
    theta = np.eye(3)
    theta[0, 2] = theta[2, 0] = 0.2
    theta[0, 1] = theta[1, 0] = 0.1
    assert threshold_support(theta, 0.1).pairs == {(0, 2), (2, 0)}


def test_chain_superstructure_recall():
    m = 10
    chain = Dag(m, frozenset((i, i + 1) for i in range(m - 1)))
    found = total = 0
    for seed in range(30):
        X = generate_data(random_sem(chain, seed=seed), 500, seed=seed)
        E = estimate_superstructure(X)
        assert E.is_symmetric()
        found += sum(e in E.pairs for e in chain.edges)
        total += len(chain)
    assert found / total >= 0.95
