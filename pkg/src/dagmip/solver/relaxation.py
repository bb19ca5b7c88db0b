"""Continuous relaxation at a branch-and-bound node.

With the layer variables dropped, the relaxation separates by column of
Gamma. Eliminating the perspective variables ``s`` and the relaxed
indicators ``g`` analytically, column ``k`` reduces to::

    min  x^T A x + h_k(x_0) + sum_p phi_p(x_p)

where ``x_0 = Gamma_kk`` in ``[floor, M]``, ``x_p = Gamma_jk`` for the
parents ``j`` still allowed at the node, ``A`` is the matching block of
``Q`` (with ``S_kk`` in the corner), ``h_k`` is the max of the current
outer-approximation cuts and ``phi_p`` is the cheapest perspective cost
of a given ``|x_p|``:

* ``g`` fixed to one: ``delta_j t^2 + lambda^2``;
* ``g`` free in ``[0, 1]``: ``2 t sqrt(delta_j lambda^2)`` up to
  ``t0 = sqrt(lambda^2 / delta_j)``, then ``delta_j t^2 + lambda^2``
  (``t (delta_j M + lambda^2 / M)`` throughout if ``t0 >= M``).

Every term is convex and the nonsmooth part is separable, so cyclic
coordinate descent with exact one-dimensional steps converges. A lower
bound is certified from the linearization of the quadratic at the
current iterate, so a stalled solve still yields a valid bound.

Acyclicity is not part of the relaxation; it is enforced by branching.
"""

from dataclasses import dataclass
import logging
import math

import numpy as np

from ..formulation import DIAG_FLOOR

__all__ = [
    "FREE",
    "ONE",
    "InfeasibleNode",
    "SubsolverStall",
    "ColumnSolution",
    "NodeRelaxation",
    "phi",
    "relaxed_indicator",
    "solve_column",
    "solve_node_relaxation",
]

log = logging.getLogger(__name__)

FREE = 0
ONE = 1
MAX_SWEEPS = 20000
MAX_OA_ROUNDS = 200


class InfeasibleNode(Exception):
    """The fixings at a node admit no acyclic support."""


class SubsolverStall(RuntimeError):
    """The column solver could not produce a finite bound."""


def _pieces(kind, d, L, M):
    """``(kappa, t1)``: slope of the linear piece and where it ends."""
    if kind == ONE:
        return 0.0, 0.0
    if L <= 0.0:
        return 0.0, 0.0
    if d <= 0.0:
        return L / M, M
    t0 = math.sqrt(L / d)
    if t0 >= M:
        return d * M + L / M, M
    return 2.0 * math.sqrt(d * L), t0


def phi(t, kind, d, L, M):
    """Perspective cost of an off-diagonal entry of magnitude ``|t|``."""
    t = abs(t)
    if kind == ONE:
        return d * t * t + L
    if t == 0.0:
        return 0.0
    kappa, t1 = _pieces(kind, d, L, M)
    if t <= t1:
        return kappa * t
    return d * t * t + L


def relaxed_indicator(t, kind, d, L, M):
    """The ``g`` attaining :func:`phi` (clipped to ``[|t|/M, 1]``)."""
    t = abs(t)
    if kind == ONE:
        return 1.0
    if t == 0.0:
        return 0.0
    _, t1 = _pieces(kind, d, L, M)
    if t1 <= 0.0:
        return 1.0
    return min(max(t / t1, t / M), 1.0)


def _offdiag_min(a, c, kind, d, L, M):
    """Exact minimizer of ``a y^2 + c y + phi(y)`` over ``|y| <= M``."""
    if kind == ONE:
        q = a + d
        if q > 0.0:
            y = min(max(-c / (2.0 * q), -M), M)
        else:
            y = -M if c > 0.0 else (M if c < 0.0 else 0.0)
        return y, q * y * y + c * y + L
    kappa, t1 = _pieces(kind, d, L, M)
    best_y, best_v = 0.0, 0.0
    q = a + d
    for s in (1.0, -1.0):
        sc = s * c
        if t1 > 0.0:
            lin = sc + kappa
            if a > 0.0:
                t = min(max(-lin / (2.0 * a), 0.0), t1)
            else:
                t = 0.0 if lin >= 0.0 else t1
            v = a * t * t + lin * t
            if v < best_v:
                best_y, best_v = s * t, v
        if t1 < M:
            if q > 0.0:
                t = min(max(-sc / (2.0 * q), t1), M)
            else:
                t = t1 if sc >= 0.0 else M
            v = q * t * t + sc * t + L
            if v < best_v:
                best_y, best_v = s * t, v
    return best_y, best_v


@dataclass
class ColumnSolution:
    """Solved relaxation of one column at one set of fixings."""

    k: int
    coords: tuple
    kinds: tuple
    x: list
    value: float
    bound: float
    sig: tuple
    n_sweeps: int = 0

    @property
    def diag(self):
        return self.x[0]


class _ColumnData:
    """Static per-column data shared by all nodes."""

    def __init__(self, problem, k):
        self.k = k
        self.parents = tuple(j for j, c in problem.pairs if c == k)
        self.S_kk = float(problem.S[k, k])


def _column_value(A, x, Ax, pool, k, kinds, ds, L, M):
    val = sum(xi * ai for xi, ai in zip(x, Ax)) + pool.value(k, x[0])
    for p in range(1, len(x)):
        val += phi(x[p], kinds[p], ds[p], L, M)
    return val


def _certify(x, Ax, value, pool, k, kinds, ds, L, M, lo):
    """Lower bound on the column problem from the linearized quadratic."""
    lb = value
    g0 = 2.0 * Ax[0]
    _, v0 = pool.minimize(k, 0.0, g0, lo, M)
    lb += v0 - g0 * x[0] - pool.value(k, x[0])
    for p in range(1, len(x)):
        gp = 2.0 * Ax[p]
        _, vp = _offdiag_min(0.0, gp, kinds[p], ds[p], L, M)
        lb += vp - gp * x[p] - phi(x[p], kinds[p], ds[p], L, M)
    return lb


def _coordinate_descent(A, x, pool, k, kinds, ds, L, M, tol, lo=DIAG_FLOOR):
    n = len(x)
    Ax = [sum(A[q][p] * x[p] for p in range(n)) for q in range(n)]
    value = _column_value(A, x, Ax, pool, k, kinds, ds, L, M)
    lb = -math.inf
    sweeps = 0
    while sweeps < MAX_SWEEPS:
        sweeps += 1
        moved = 0.0
        for p in range(n):
            a = A[p][p]
            c = 2.0 * (Ax[p] - a * x[p])
            if p == 0:
                y, _ = pool.minimize(k, a, c, lo, M)
            else:
                y, _ = _offdiag_min(a, c, kinds[p], ds[p], L, M)
            step = y - x[p]
            if step != 0.0:
                x[p] = y
                col = A[p]
                for q in range(n):
                    Ax[q] += col[q] * step
                moved = max(moved, abs(step))
        value = _column_value(A, x, Ax, pool, k, kinds, ds, L, M)
        if moved <= 1e-10 or sweeps % 8 == 0:
            # refresh Ax to keep rounding drift out of the certificate
            Ax = [sum(A[q][p] * x[p] for p in range(n)) for q in range(n)]
            value = _column_value(A, x, Ax, pool, k, kinds, ds, L, M)
            lb = _certify(x, Ax, value, pool, k, kinds, ds, L, M, lo)
            if value - lb <= tol:
                break
    else:
        log.warning("column %d: coordinate descent stopped at gap %.3g", k, value - lb)
    if not math.isfinite(lb):
        raise SubsolverStall(f"column {k}: no finite bound")
    return x, value, lb, sweeps


def column_signature(col_data, fixed):
    return tuple(fixed.get((j, col_data.k), -1) for j in col_data.parents)


def solve_column(problem, pool, col_data, fixed, warm=None, tol=1e-6, cut_tol=1e-6,
                 add_cuts=True):
    """Solve the relaxation of one column, adding cuts where ``T_k`` is too low."""
    k = col_data.k
    sig = column_signature(col_data, fixed)
    coords = [k] + [j for j, f in zip(col_data.parents, sig) if f != 0]
    kinds = [ONE] + [ONE if fixed.get((j, k)) == 1 else FREE for j in coords[1:]]
    Q = problem.Q
    A = [[float(Q[a, b]) for b in coords] for a in coords]
    A[0][0] = col_data.S_kk
    ds = [0.0] + [float(problem.delta[j]) for j in coords[1:]]
    L, M = problem.lambda_sq, problem.big_m

    x = [min(max(1.0, DIAG_FLOOR), M)] + [0.0] * (len(coords) - 1)
    if warm is not None:
        prev = dict(zip(warm.coords, warm.x))
        x = [prev.get(j, 0.0) for j in coords]
        x[0] = min(max(x[0], DIAG_FLOOR), M)
    if pool.count(k) == 0:
        pool.add_at(k, x[0])

    total_sweeps = 0
    for _ in range(MAX_OA_ROUNDS):
        x, value, lb, sweeps = _coordinate_descent(A, x, pool, k, kinds, ds, L, M, tol)
        total_sweeps += sweeps
        if not add_cuts or pool.value(k, x[0]) >= -2.0 * math.log(x[0]) - cut_tol:
            break
        if not pool.add_at(k, x[0]):
            break
    return ColumnSolution(k, tuple(coords), tuple(kinds), x, value, lb, sig, total_sweeps)


@dataclass
class NodeRelaxation:
    columns: list
    bound: float
    value: float

    def gamma(self, m):
        G = np.zeros((m, m))
        for col in self.columns:
            for j, v in zip(col.coords, col.x):
                G[j, col.k] = v
        return G

    def indicators(self, problem):
        """Relaxed ``g`` for every superstructure pair (0 for pairs fixed out)."""
        L, M = problem.lambda_sq, problem.big_m
        out = {}
        for col in self.columns:
            for j, kind, v in zip(col.coords[1:], col.kinds[1:], col.x[1:]):
                out[(j, col.k)] = relaxed_indicator(v, kind, float(problem.delta[j]), L, M)
        for p in problem.pairs:
            out.setdefault(p, 0.0)
        return out


def solve_node_relaxation(problem, pool, fixed, parent=None, tol=1e-6, cut_tol=1e-6,
                          add_cuts=True, col_data=None):
    """Relaxation bound at a node given its fixings ``{(j, k): 0 or 1}``.

    Columns whose fixings match the parent's cached solution are reused
    as they are, unless the cut pool now shows a violation at them.
    """
    m = problem.m
    col_data = col_data or [_ColumnData(problem, k) for k in range(m)]
    columns = []
    for k in range(m):
        cd = col_data[k]
        warm = parent.columns[k] if parent is not None else None
        if warm is not None and warm.sig == column_signature(cd, fixed):
            x0 = warm.diag
            if not add_cuts or pool.value(k, x0) >= -2.0 * math.log(x0) - cut_tol:
                columns.append(warm)
                continue
        columns.append(solve_column(problem, pool, cd, fixed, warm, tol, cut_tol, add_cuts))
    bound = sum(c.bound for c in columns)
    value = sum(c.value for c in columns)
    return NodeRelaxation(columns, bound, value)
