import math

import numpy as np
import pytest

from dagmip.model import EdgeSet, generate_data, moral_graph, random_dag, random_sem
from dagmip.pipeline import Fitter, fit, resolve_superstructure
from dagmip.solver import SolveConfig, gap_target


@pytest.fixture(scope="module")
def instance():
    dag = random_dag(7, 7, seed=11)
    return dag, generate_data(random_sem(dag, seed=11), 300, seed=11)


def test_fixed_lambda(instance):
    dag, X = instance
    res = fit(X, superstructure="true-moral", truth=dag, lambda_sq=0.02)
    assert res.lambda_sq == 0.02 and res.c is None and res.all_optimal
    assert res.superstructure == moral_graph(dag)
    assert set(res.dag.edges) <= res.superstructure.pairs


def test_bic_path(instance):
    dag, X = instance
    res = fit(X, c_grid=range(1, 5))
    assert [row["c"] for row in res.path] == [1, 2, 3, 4]
    best = min(res.path, key=lambda r: r["bic"])
    assert res.c == best["c"]
    assert res.lambda_sq == pytest.approx(res.c ** 2 * math.log(7) / 300)
    doc = res.to_dict(timings=False)
    assert all(row["status"] == "Optimal" for row in doc["lambda_path"])
    assert "wall_secs" not in doc


def test_gap_mode_per_lambda(instance):
    dag, X = instance
    res = fit(X, superstructure="true-moral", truth=dag, c_grid=[1, 3], gap_mode="theorem1")
    for lam, rep in res.reports.items():
        assert rep.gap_target == pytest.approx(gap_target("theorem1", lam, 7))
    res = fit(X, superstructure="true-moral", truth=dag, lambda_sq=0.01, gap_mode=lambda l: 5 * l)
    assert res.report.gap_target == pytest.approx(0.05)


def test_standardize_only_changes_superstructure(instance):
    dag, X = instance
    E = moral_graph(dag)
    a = fit(X, superstructure=E, lambda_sq=0.02)
    b = fit(X, superstructure=E, lambda_sq=0.02, standardize=True)
    from dagmip.evaluation import mec_equal

    assert mec_equal(a.dag, b.dag)
    assert a.report.objective == pytest.approx(b.report.objective + np.sum(np.log(np.mean(X.X ** 2, 0))), abs=1e-8)


def test_resolve_errors(instance):
    dag, X = instance
    with pytest.raises(ValueError):
        resolve_superstructure(X, "true-moral")
    with pytest.raises(ValueError):
        resolve_superstructure(X, EdgeSet.full(3))
    with pytest.raises(ValueError):
        resolve_superstructure(X, "magic")


def test_fitter_caches(instance):
    dag, X = instance
    from dagmip.model import sample_covariance

    f = Fitter(sample_covariance(X), moral_graph(dag), SolveConfig())
    assert f.solve(0.02) is f.solve(0.02)
    assert f(None, None, 0.02) is f.reports[0.02]
