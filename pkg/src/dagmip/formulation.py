"""Assembly of the perspective-strengthened layered-network program.

Variables of the mixed-integer program, for a superstructure ``E``:

* ``gamma[i, i]`` and ``gamma[j, k]`` for ``(j, k)`` in ``E``;
* binaries ``g[j, k]`` for ``(j, k)`` in ``E``;
* layer values ``psi[k]`` in ``[1, m]``;
* perspective variables ``s[j, k]`` for ``(j, k)`` in ``E`` and ``s[i, i]``;
* epigraph variables ``T[i]`` standing in for ``-2 log gamma[i, i]``.

Objective::

    sum_i T_i + tr(Gamma Gamma^T Q) + sum_E delta_j s_jk + sum_i delta_i s_ii + lambda^2 sum_E g_jk

with ``Q = S - diag(delta)``, subject to ``|gamma_jk| <= M g_jk``,
``gamma_ii <= M``, ``1 - m + m g_jk <= psi_k - psi_j``,
``s_jk g_jk >= gamma_jk^2``, ``s_ii >= gamma_ii^2``, ``s_jk <= M^2 g_jk``
and ``s_ii <= M^2``.
"""

from dataclasses import dataclass, field
import json
import logging
import math

import numpy as np

from .model import EdgeSet, topological_order
from .numerics import as_symmetric, is_psd
from .scoring import LocalScorer, SingularParentBlock

__all__ = [
    "DIAG_FLOOR",
    "MicpProblem",
    "choose_delta",
    "calibrate_big_m",
    "unconstrained_gamma",
    "build_problem",
    "integral_point",
    "micp_objective",
    "check_feasible",
]

log = logging.getLogger(__name__)

DIAG_FLOOR = 1e-6
RIDGE = 1e-8


def _barrier_value(S, delta, mu):
    try:
        L = np.linalg.cholesky(S - np.diag(delta))
    except np.linalg.LinAlgError:
        return -math.inf
    if np.any(delta <= 0):
        return -math.inf
    return float(np.sum(delta)) + mu * (2.0 * float(np.sum(np.log(np.diag(L)))) + float(np.sum(np.log(delta))))


def choose_delta(S, mu_final=1e-12):
    """Largest ``sum(delta)`` with ``S - diag(delta)`` PSD and ``delta >= 0``.

    Solved with a log-barrier path-following Newton method; the final
    iterate is shifted by the remaining slack ``lambda_min(S - diag(delta))``
    so the constraint is tight. Returns zeros if ``S`` is singular.
    """
    S = as_symmetric(S)
    m = S.shape[0]
    lam_min = float(np.linalg.eigvalsh(S)[0])
    scale = float(np.max(np.diag(S)))
    if lam_min <= 1e-12 * scale:
        return np.zeros(m)
    delta = np.full(m, 0.5 * lam_min)
    mu = lam_min
    while True:
        for _ in range(100):
            W = np.linalg.inv(S - np.diag(delta))
            grad = 1.0 - mu * np.diag(W) + mu / delta
            neg_hess = mu * (W * W) + mu * np.diag(1.0 / delta**2)
            step = np.linalg.solve(neg_hess, grad)
            decrement = float(grad @ step)
            if decrement < 1e-14 * max(1.0, scale):
                break
            t = 1.0
            base = _barrier_value(S, delta, mu)
            while t > 1e-12:
                cand = delta + t * step
                if _barrier_value(S, cand, mu) >= base + 0.25 * t * decrement:
                    break
                t *= 0.5
            else:
                break
            delta = cand
        if mu <= mu_final * scale:
            break
        mu *= 0.1
    slack = float(np.linalg.eigvalsh(S - np.diag(delta))[0])
    delta = delta + max(slack - 1e-13 * scale, 0.0)
    return np.maximum(delta, 0.0)


def unconstrained_gamma(S, E_super):
    """Per-column fit using every superstructure parent, ignoring acyclicity.

    A singular parent block is ridge-regularized by ``1e-8 * I``.
    """
    S = np.asarray(S, dtype=float)
    m = S.shape[0]
    scorer = LocalScorer(S)
    ridged = None
    gamma = np.zeros((m, m))
    for k in range(m):
        P = sorted(j for j, c in E_super.pairs if c == k)
        try:
            col, _ = scorer.column(k, P)
        except SingularParentBlock:
            log.warning("singular parent block for node %d; using ridge %.1e", k, RIDGE)
            ridged = ridged or LocalScorer(S, ridge=RIDGE)
            col, _ = ridged.column(k, P)
        gamma[:, k] = col
    return gamma


def calibrate_big_m(S, E_super):
    """``2 * max |gamma_hat|`` over superstructure entries and the diagonal."""
    gamma = unconstrained_gamma(S, E_super)
    mask = E_super.adjacency | np.eye(gamma.shape[0], dtype=bool)
    return 2.0 * float(np.max(np.abs(gamma[mask])))


def _index_maps(m, pairs):
    idx = {}
    counter = 0

    def take(keys):
        nonlocal counter
        out = {}
        for key in keys:
            out[key] = counter
            counter += 1
        return out

    idx["gamma"] = take([(i, i) for i in range(m)] + list(pairs))
    idx["g"] = take(pairs)
    idx["psi"] = take(range(m))
    idx["s"] = take(list(pairs) + [(i, i) for i in range(m)])
    idx["T"] = take(range(m))
    idx["n_vars"] = counter
    return idx


@dataclass(frozen=True, eq=False)
class MicpProblem:
    """Immutable problem instance. Build with :func:`build_problem`."""

    S: np.ndarray
    E_super: EdgeSet
    lambda_sq: float
    big_m: float
    delta: np.ndarray
    Q: np.ndarray
    pairs: tuple = ()
    index: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.big_m > 0:
            raise ValueError("big_m must be positive")
        if self.lambda_sq < 0:
            raise ValueError("lambda_sq must be non-negative")
        if np.any(self.delta < 0):
            raise ValueError("delta must be non-negative")
        if not is_psd(self.Q, tol=1e-8):
            raise ValueError("Q = S - diag(delta) is not PSD")
        for a in (self.S, self.delta, self.Q):
            a.setflags(write=False)

    @property
    def m(self):
        return self.S.shape[0]

    @property
    def n_binary(self):
        return len(self.pairs)

    def variable_counts(self):
        m = self.m
        return {
            "gamma": m + self.n_binary,
            "g": self.n_binary,
            "psi": m,
            "s": self.n_binary + m,
            "T": m,
        }

    def to_dict(self):
        return {
            "m": self.m,
            "S": self.S.tolist(),
            "E_super": [list(p) for p in self.pairs],
            "lambda_sq": self.lambda_sq,
            "big_m": self.big_m,
            "delta": self.delta.tolist(),
        }

    def to_json(self, path=None):
        text = json.dumps(self.to_dict(), indent=2)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text

    @classmethod
    def from_dict(cls, doc):
        m = int(doc["m"])
        E = EdgeSet(m, frozenset(tuple(p) for p in doc["E_super"]))
        return build_problem(np.array(doc["S"]), E, float(doc["lambda_sq"]),
                             delta=np.array(doc["delta"]), big_m=float(doc["big_m"]))

    @classmethod
    def from_json(cls, text_or_path):
        if isinstance(text_or_path, str) and text_or_path.lstrip().startswith("{"):
            doc = json.loads(text_or_path)
        else:
            with open(text_or_path) as fh:
                doc = json.load(fh)
        return cls.from_dict(doc)


def build_problem(S, E_super, lambda_sq, delta=None, big_m=None):
    """Assemble a :class:`MicpProblem`.

    ``delta`` and ``big_m`` depend only on ``S`` and ``E_super``; pass
    precomputed values to reuse them across a lambda grid.
    """
    S = as_symmetric(S).copy()
    S = 0.5 * (S + S.T)
    if E_super.m != S.shape[0]:
        raise ValueError("superstructure size does not match S")
    delta = choose_delta(S) if delta is None else np.array(delta, dtype=float)
    if big_m is None:
        big_m = calibrate_big_m(S, E_super)
    Q = S - np.diag(delta)
    Q = 0.5 * (Q + Q.T)
    pairs = tuple(E_super.sorted_pairs())
    return MicpProblem(S, E_super, float(lambda_sq), float(big_m), delta, Q, pairs,
                       _index_maps(S.shape[0], pairs))


def _layers(m, pairs):
    """Layer values with ``psi_k >= psi_j + 1`` on every edge, all in ``[1, m]``."""
    order = topological_order(m, pairs)
    if order is None:
        return None
    psi = np.ones(m)
    for v in order:
        for j, k in pairs:
            if j == v:
                psi[k] = max(psi[k], psi[v] + 1)
    return psi


def integral_point(problem, gamma):
    """Full variable assignment for an acyclic ``gamma`` supported on ``E_super``.

    ``g`` marks the nonzero off-diagonals, ``s`` equals ``gamma**2`` and
    ``T`` the exact ``-2 log gamma_ii``.
    """
    gamma = np.asarray(gamma, dtype=float)
    g = {p: 1.0 if gamma[p] != 0 else 0.0 for p in problem.pairs}
    edges = [p for p in problem.pairs if g[p] == 1.0]
    psi = _layers(problem.m, edges)
    s = {p: gamma[p] ** 2 for p in problem.pairs}
    s.update({(i, i): gamma[i, i] ** 2 for i in range(problem.m)})
    T = -2.0 * np.log(np.diag(gamma))
    return {"gamma": gamma, "g": g, "psi": psi, "s": s, "T": T}


def micp_objective(problem, point):
    """Objective of the mixed-integer program at a full assignment."""
    gamma = point["gamma"]
    delta = problem.delta
    val = float(np.sum(point["T"]))
    val += float(np.sum(gamma * (problem.Q @ gamma)))
    val += sum(delta[j] * point["s"][(j, k)] for j, k in problem.pairs)
    val += sum(delta[i] * point["s"][(i, i)] for i in range(problem.m))
    val += problem.lambda_sq * sum(point["g"].values())
    return val


def check_feasible(problem, point, tol=1e-9):
    """Names of violated constraints (empty list when feasible)."""
    gamma, g, psi, s = point["gamma"], point["g"], point["psi"], point["s"]
    M, m = problem.big_m, problem.m
    bad = []
    off = np.ones((m, m), dtype=bool)
    np.fill_diagonal(off, False)
    outside = off & ~problem.E_super.adjacency
    if np.any(gamma[outside] != 0):
        bad.append("support outside superstructure")
    for i in range(m):
        if gamma[i, i] > M + tol:
            bad.append(f"diag big-M {i}")
        if gamma[i, i] < DIAG_FLOOR - tol:
            bad.append(f"diag floor {i}")
        if s[(i, i)] < gamma[i, i] ** 2 - tol or s[(i, i)] > M * M + tol:
            bad.append(f"s diag {i}")
    if psi is None:
        bad.append("no layer assignment (cyclic support)")
    for p in problem.pairs:
        j, k = p
        if g[p] not in (0.0, 1.0):
            bad.append(f"fractional g {p}")
        if abs(gamma[p]) > M * g[p] + tol:
            bad.append(f"big-M {p}")
        if psi is not None and 1 - m + m * g[p] > psi[k] - psi[j] + tol:
            bad.append(f"layer {p}")
        if s[p] * g[p] < gamma[p] ** 2 - tol or s[p] > M * M * g[p] + tol:
            bad.append(f"perspective {p}")
    if psi is not None and (np.any(psi < 1 - tol) or np.any(psi > m + tol)):
        bad.append("psi range")
    return bad
