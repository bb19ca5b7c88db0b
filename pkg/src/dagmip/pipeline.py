"""End-to-end fitting: superstructure, lambda selection, branch-and-bound."""

from dataclasses import dataclass, field, replace
import logging

import numpy as np

from .formulation import build_problem, calibrate_big_m, choose_delta
from .model import EdgeSet, moral_graph, sample_covariance
from .scoring import select_lambda
from .solver.bnb import SolveConfig, branch_and_bound, gap_target
from .solver.parentsets import ParentSetTable
from .superstructure import GlassoConfig, estimate_superstructure

__all__ = ["FitResult", "Fitter", "resolve_superstructure", "fit"]

log = logging.getLogger(__name__)

DEFAULT_C_GRID = tuple(range(1, 16))


@dataclass
class FitResult:
    """Selected model plus the solver report and lambda path."""

    report: object
    lambda_sq: float
    c: int = None
    superstructure: EdgeSet = None
    path: list = field(default_factory=list)
    reports: dict = field(default_factory=dict)

    @property
    def gamma(self):
        return self.report.gamma

    @property
    def dag(self):
        return self.report.dag

    @property
    def all_optimal(self):
        """Whether every solve on the lambda path closed its gap target."""
        return all(r.status != "TimeLimit" for r in self.reports.values())

    def to_dict(self, timings=True):
        out = self.report.to_dict(timings)
        out["c"] = self.c
        out["superstructure"] = [list(p) for p in self.superstructure.sorted_pairs()]
        path = []
        for row in self.path:
            rep = self.reports.get(row["lambda_sq"])
            if rep is not None:
                row = dict(row, status=rep.status, rgap=rep.rgap, nodes_explored=rep.nodes_explored)
            path.append(row)
        out["lambda_path"] = path
        return out


def resolve_superstructure(data, source="estimate", truth=None, glasso=GlassoConfig()):
    """Edge set from ``"estimate"`` (graphical lasso), ``"true-moral"`` or an :class:`EdgeSet`."""
    if isinstance(source, EdgeSet):
        if source.m != data.m:
            raise ValueError(f"superstructure has {source.m} nodes, data has {data.m}")
        return source
    if source == "estimate":
        return estimate_superstructure(data, glasso)
    if source == "true-moral":
        if truth is None:
            raise ValueError("true-moral superstructure needs the true DAG")
        return moral_graph(truth)
    raise ValueError(f"unknown superstructure source {source!r}")


class Fitter:
    """Solves one dataset at many lambdas, reusing everything lambda-free.

    ``delta``, the big-M constant and the parent-set score table depend
    only on ``S`` and the superstructure, so they are computed once.
    """

    def __init__(self, S, E_super, cfg=SolveConfig(), gap_mode=None, tau=None):
        self.S = np.asarray(S, dtype=float)
        self.E = E_super
        self.cfg = cfg
        self.gap_mode = gap_mode
        self.tau = tau
        self.delta = choose_delta(self.S)
        self.big_m = calibrate_big_m(self.S, E_super)
        self.table = ParentSetTable(self.S, E_super) if cfg.relaxation == "parent-set" else None
        self.reports = {}

    def problem(self, lambda_sq):
        return build_problem(self.S, self.E, lambda_sq, delta=self.delta, big_m=self.big_m)

    def solve(self, lambda_sq):
        if lambda_sq not in self.reports:
            cfg = self.cfg
            if callable(self.gap_mode):
                cfg = replace(cfg, gap_target=float(self.gap_mode(lambda_sq)))
            elif self.gap_mode is not None:
                # targets like lambda^2 s-bar move with lambda
                target = gap_target(self.gap_mode, lambda_sq, self.S.shape[0], self.tau)
                cfg = replace(cfg, gap_target=target)
            report = branch_and_bound(self.problem(lambda_sq), cfg, parent_sets=self.table)
            log.info("lambda_sq=%.5g: %s, %d nodes, objective %.8g", lambda_sq, report.status,
                     report.nodes_explored, report.objective)
            self.reports[lambda_sq] = report
        return self.reports[lambda_sq]

    def __call__(self, S, E_super, lambda_sq):
        return self.solve(lambda_sq)


def fit(data, superstructure="estimate", lambda_sq=None, c_grid=DEFAULT_C_GRID,
        cfg=SolveConfig(), truth=None, glasso=GlassoConfig(), standardize=False,
        gap_mode=None, tau=None):
    """Learn a DAG from ``data``.

    With ``lambda_sq=None`` lambda is chosen by BIC over
    ``lambda^2 = c^2 log(m) / n`` for ``c`` in ``c_grid``; otherwise the
    given value is used directly. ``standardize`` rescales columns to
    unit variance first. The penalized likelihood itself is invariant to
    column scaling (only the diagonal of Gamma changes), so this only
    affects the thresholded graphical-lasso superstructure.

    ``gap_mode`` (a mode name for :func:`~dagmip.solver.bnb.gap_target`,
    or a callable ``lambda_sq -> target``) sets the gap target per lambda
    and overrides ``cfg.gap_target``.
    """
    if standardize:
        data = data.standardized()
    E = resolve_superstructure(data, superstructure, truth, glasso)
    S = sample_covariance(data)
    fitter = Fitter(S, E, cfg, gap_mode, tau)
    if lambda_sq is not None:
        lambda_sq = float(lambda_sq)
        return FitResult(fitter.solve(lambda_sq), lambda_sq, None, E, reports=dict(fitter.reports))
    sel = select_lambda(data, E, fitter, c_grid)
    return FitResult(sel.result, sel.lambda_sq, sel.c, E, sel.path, dict(fitter.reports))
