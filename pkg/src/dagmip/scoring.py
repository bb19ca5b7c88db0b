"""Penalized Gaussian likelihood in the Gamma parameterization.

For a DAG with connectivity ``B`` and noise precisions ``D = Omega^{-1}``
the decision matrix is ``Gamma = (I - B) D^{1/2}``; column ``k`` holds
``D_kk^{1/2}`` on the diagonal and ``-B[j, k] D_kk^{1/2}`` for each parent
``j``. The score minimized everywhere in this package is::

    sum_i -2 log Gamma_ii + tr(Gamma Gamma^T S) + lambda^2 * ||offdiag(Gamma)||_0
"""

from dataclasses import dataclass, field
import itertools
import logging
import math
import warnings

import numpy as np

from .model import Dag, sample_covariance, topological_order
from .numerics import NotPositiveDefinite, spd_solve

__all__ = [
    "NonPositiveDiagonal",
    "SingularParentBlock",
    "DagScore",
    "LocalScorer",
    "objective",
    "dag_mle",
    "gamma_to_sem",
    "support_dag",
    "enumerate_dags",
    "count_dags",
    "brute_force_optimum",
    "brute_force_solutions",
    "bic",
    "lambda_grid",
    "select_lambda",
    "LambdaSelection",
]

log = logging.getLogger(__name__)

SINGULAR_TOL = 1e-12
MAX_ENUM_NODES = 5


class NonPositiveDiagonal(ValueError):
    pass


class SingularParentBlock(ValueError):
    def __init__(self, node, parents, value=None):
        self.node = node
        self.parents = tuple(parents)
        self.value = value
        super().__init__(f"conditional variance of node {node} given {list(parents)} is {value!r}")


def _check_gamma(gamma):
    gamma = np.asarray(gamma, dtype=float)
    if gamma.ndim != 2 or gamma.shape[0] != gamma.shape[1]:
        raise ValueError("gamma must be square")
    d = np.diag(gamma)
    if np.any(~(d > 0)):
        raise NonPositiveDiagonal(f"diagonal of gamma must be positive, got {d}")
    return gamma


def _offdiag_nnz(gamma):
    return int(np.count_nonzero(gamma) - np.count_nonzero(np.diag(gamma)))


def objective(gamma, S, lambda_sq):
    """Exact penalized objective at ``gamma``."""
    gamma = _check_gamma(gamma)
    S = np.asarray(S, dtype=float)
    logs = -2.0 * float(np.sum(np.log(np.diag(gamma))))
    trace = float(np.sum(gamma * (S @ gamma)))
    return logs + trace + lambda_sq * _offdiag_nnz(gamma)


def support_dag(gamma):
    """DAG given by the off-diagonal support of ``gamma``."""
    return Dag.from_adjacency(np.asarray(gamma) != 0)


def gamma_to_sem(gamma):
    """Recover ``(B, omega)`` from ``gamma``: ``D = diag(gamma)^2``, ``B = I - gamma D^{-1/2}``."""
    gamma = _check_gamma(gamma)
    d_sqrt = np.diag(gamma)
    B = np.eye(gamma.shape[0]) - gamma / d_sqrt[None, :]
    np.fill_diagonal(B, 0.0)
    return B, 1.0 / d_sqrt**2


class LocalScorer:
    """Per-node closed-form fits for a fixed covariance, memoized by parent set.

    For node ``j`` with parents ``P`` the conditional variance is
    ``c = S_jj - S_jP S_PP^{-1} S_Pj``; the optimal column has
    ``Gamma_jj = c^{-1/2}`` and ``Gamma_Pj = -Gamma_jj S_PP^{-1} S_Pj``, and
    contributes ``1 + log c`` to the unpenalized objective.
    """

    def __init__(self, S, ridge=0.0):
        self.S = np.asarray(S, dtype=float)
        self.ridge = ridge
        self._cache = {}

    @property
    def m(self):
        return self.S.shape[0]

    def local(self, j, parents):
        """Return ``(c_j, coef)`` where ``coef = S_PP^{-1} S_Pj``."""
        key = (j, tuple(sorted(parents)))
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        P = list(key[1])
        S = self.S
        if P:
            block = S[np.ix_(P, P)]
            if self.ridge:
                block = block + self.ridge * np.eye(len(P))
            try:
                coef = spd_solve(block, S[P, j])
            except NotPositiveDefinite:
                raise SingularParentBlock(j, P) from None
            c = float(S[j, j] - S[P, j] @ coef)
        else:
            coef = np.zeros(0)
            c = float(S[j, j])
        if not c > SINGULAR_TOL:
            raise SingularParentBlock(j, P, c)
        self._cache[key] = (c, coef)
        return c, coef

    def column(self, j, parents):
        """Optimal column ``j`` of gamma as a dense vector, and ``c_j``."""
        c, coef = self.local(j, parents)
        col = np.zeros(self.m)
        d = 1.0 / math.sqrt(c)
        col[j] = d
        P = sorted(parents)
        if P:
            col[P] = -d * coef
        return col, c

    def node_score(self, j, parents):
        c, _ = self.local(j, parents)
        return 1.0 + math.log(c)

    def score(self, parent_sets, lambda_sq):
        total = 0.0
        n_edges = 0
        for j, P in enumerate(parent_sets):
            total += self.node_score(j, P)
            n_edges += len(P)
        return total + lambda_sq * n_edges


@dataclass
class DagScore:
    """Per-DAG optimum: gamma, objective value and number of penalized edges."""

    gamma: np.ndarray
    objective: float
    penalty_edges: int
    dag: Dag = None

    def to_dict(self):
        return {
            "objective": self.objective,
            "penalty_edges": self.penalty_edges,
            "edges": [list(e) for e in (self.dag.sorted_edges() if self.dag else [])],
            "gamma": np.asarray(self.gamma).tolist(),
        }


def dag_mle(S, dag, lambda_sq, scorer=None):
    """Closed-form minimizer of the objective over gammas supported on ``dag``."""
    scorer = scorer or LocalScorer(S)
    m = dag.m
    gamma = np.zeros((m, m))
    total = 0.0
    for j in range(m):
        P = dag.parents(j)
        col, c = scorer.column(j, P)
        gamma[:, j] = col
        total += 1.0 + math.log(c)
    return DagScore(gamma, total + lambda_sq * len(dag), len(dag), dag)


def enumerate_dags(m, restrict=None):
    """Yield every labeled DAG on ``m <= 5`` nodes with edges inside ``restrict``.

    Each unordered pair is absent, forward or backward; acyclic combinations
    are yielded in a fixed order.
    """
    if m > MAX_ENUM_NODES:
        raise ValueError(f"enumeration is limited to m <= {MAX_ENUM_NODES}")
    if m < 1:
        raise ValueError("m must be positive")
    allowed = restrict.pairs if restrict is not None else None
    options = []
    for i, j in itertools.combinations(range(m), 2):
        opts = [None]
        if allowed is None or (i, j) in allowed:
            opts.append((i, j))
        if allowed is None or (j, i) in allowed:
            opts.append((j, i))
        options.append(opts)
    for choice in itertools.product(*options):
        edges = [e for e in choice if e is not None]
        if topological_order(m, edges) is not None:
            yield Dag(m, frozenset(edges))


def count_dags(m):
    """Number of labeled DAGs on ``m`` nodes (Robinson's recurrence)."""
    a = [1]
    for n in range(1, m + 1):
        a.append(sum((-1) ** (k + 1) * math.comb(n, k) * 2 ** (k * (n - k)) * a[n - k] for k in range(1, n + 1)))
    return a[m]


def _scored_dags(S, lambda_sq, restrict, m):
    scorer = LocalScorer(S)
    for dag in enumerate_dags(m, restrict):
        parent_sets = [dag.parents(j) for j in range(m)]
        yield scorer.score(parent_sets, lambda_sq), dag


def brute_force_solutions(S, lambda_sq, restrict=None, tol=1e-9):
    """All DAGs whose objective is within ``tol`` of the enumerated optimum.

    Sorted by (edge count, edge list).
    """
    S = np.asarray(S, dtype=float)
    m = S.shape[0]
    scored = list(_scored_dags(S, lambda_sq, restrict, m))
    best = min(v for v, _ in scored)
    ties = [(len(d), d.sorted_edges(), d) for v, d in scored if v <= best + tol]
    ties.sort(key=lambda t: (t[0], t[1]))
    return [d for *_, d in ties], best


def brute_force_optimum(S, lambda_sq, restrict=None, tol=1e-9):
    """Global optimum by enumeration (``m <= 5``).

    Ties within ``tol`` go to the DAG with fewer edges, then the
    lexicographically smallest edge list.
    """
    dags, _ = brute_force_solutions(S, lambda_sq, restrict, tol)
    return dag_mle(S, dags[0], lambda_sq)


def bic(gamma, S, n):
    """``-2n sum log Gamma_ii + n tr(Gamma Gamma^T S) + k log n`` with ``k = nnz(Gamma)``."""
    gamma = _check_gamma(gamma)
    S = np.asarray(S, dtype=float)
    lik = -2.0 * n * float(np.sum(np.log(np.diag(gamma)))) + n * float(np.sum(gamma * (S @ gamma)))
    return lik + np.count_nonzero(gamma) * math.log(n)


def lambda_grid(m, n, c_grid=range(1, 16)):
    """``lambda^2 = c^2 log(m) / n`` for each ``c``."""
    return [(c, c * c * math.log(m) / n) for c in c_grid]


@dataclass
class LambdaSelection:
    lambda_sq: float
    gamma: np.ndarray
    c: int
    result: object = None
    path: list = field(default_factory=list)


def select_lambda(data, E_super, fit, c_grid=range(1, 16)):
    """Pick lambda on the grid ``c^2 log m / n`` by smallest BIC.

    ``fit(S, E_super, lambda_sq)`` returns either a gamma matrix or an
    object with a ``gamma`` attribute. A grid point whose fit raises is
    skipped with a warning; if every point fails the last error propagates.
    Ties go to the smaller ``c``.
    """
    c_grid = list(c_grid)
    if not c_grid:
        raise ValueError("c_grid must be non-empty")
    S = sample_covariance(data)
    n, m = data.n, data.m
    best = None
    path = []
    last_error = None
    for c, lam in lambda_grid(m, n, c_grid):
        try:
            res = fit(S, E_super, lam)
        except Exception as exc:  # noqa: BLE001 - any solver failure skips the grid point
            warnings.warn(f"fit failed at c={c}: {exc}", RuntimeWarning, stacklevel=2)
            last_error = exc
            continue
        gamma = np.asarray(getattr(res, "gamma", res), dtype=float)
        score = bic(gamma, S, n)
        path.append({"c": c, "lambda_sq": lam, "bic": score, "edges": _offdiag_nnz(gamma)})
        log.debug("c=%d lambda_sq=%.5g bic=%.6g", c, lam, score)
        if best is None or score < best[0]:
            best = (score, c, lam, gamma, res)
    if best is None:
        raise last_error
    _, c, lam, gamma, res = best
    return LambdaSelection(lam, gamma, c, res, path)
