"""Exact DAG learning for Gaussian SEMs with heteroscedastic noise.

The estimator minimizes ``-2 sum log Gamma_ii + tr(Gamma Gamma^T S) +
lambda^2 ||Gamma - diag(Gamma)||_0`` over Gamma supported on a DAG inside
a superstructure, by branch-and-bound with outer-approximation cuts.

Typical use::

    from dagmip import random_dag, random_sem, generate_data, fit
    dag = random_dag(10, 10, seed=0)
    X = generate_data(random_sem(dag, seed=0), 400, seed=0)
    result = fit(X)
    result.dag.sorted_edges()
"""

from .evaluation import d_cpdag, dag_to_cpdag, evaluate, mec_equal
from .formulation import build_problem
from .model import (
    Dag,
    Dataset,
    EdgeSet,
    generate_data,
    moral_graph,
    random_dag,
    random_sem,
    rho_interval,
    sample_covariance,
)
from .pipeline import FitResult, Fitter, fit
from .scoring import bic, dag_mle, objective
from .solver import SolveConfig, SolveReport, branch_and_bound, gap_target
from .superstructure import GlassoConfig, estimate_superstructure, graphical_lasso

__version__ = "0.1.0"

__all__ = [
    "Dag",
    "Dataset",
    "EdgeSet",
    "FitResult",
    "Fitter",
    "GlassoConfig",
    "SolveConfig",
    "SolveReport",
    "bic",
    "branch_and_bound",
    "build_problem",
    "d_cpdag",
    "dag_mle",
    "dag_to_cpdag",
    "estimate_superstructure",
    "evaluate",
    "fit",
    "gap_target",
    "generate_data",
    "graphical_lasso",
    "mec_equal",
    "moral_graph",
    "objective",
    "random_dag",
    "random_sem",
    "rho_interval",
    "sample_covariance",
]
