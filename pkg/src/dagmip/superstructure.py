"""Candidate edge sets from an l1-penalized precision estimate."""

from dataclasses import dataclass, replace
import math

import numpy as np

from .model import EdgeSet, sample_covariance
from .numerics import NotPositiveDefinite, cholesky

__all__ = [
    "GlassoConfig",
    "GlassoInfo",
    "MaxIterExceeded",
    "glasso_objective",
    "graphical_lasso",
    "threshold_support",
    "estimate_superstructure",
]

PD_FLOOR = 1e-8
SIGMA = 1e-4


@dataclass(frozen=True)
class GlassoConfig:
    """Penalty weight on off-diagonal ``|Theta_ij|`` and support threshold.

    ``lambda_glasso_sq=None`` means ``log(m) / n``, filled in from the data.
    """

    lambda_glasso_sq: float = None
    threshold_tau: float = 0.1
    max_iter: int = 5000
    tol: float = 1e-6
    method: str = "newton"

    def __post_init__(self):
        if self.lambda_glasso_sq is not None and self.lambda_glasso_sq < 0:
            raise ValueError("lambda_glasso_sq must be non-negative")
        if self.threshold_tau < 0:
            raise ValueError("threshold_tau must be non-negative")
        if self.max_iter < 1 or not self.tol > 0:
            raise ValueError("need max_iter >= 1 and tol > 0")
        if self.method not in ("newton", "ista"):
            raise ValueError(f"unknown method {self.method!r}")

    def resolved(self, m, n):
        if self.lambda_glasso_sq is not None:
            return self
        return replace(self, lambda_glasso_sq=math.log(m) / n)


@dataclass
class GlassoInfo:
    n_iter: int
    residual: float
    objectives: list


class MaxIterExceeded(RuntimeError):
    def __init__(self, theta, residual, info=None):
        self.theta = theta
        self.residual = residual
        self.info = info
        super().__init__(f"graphical lasso did not converge (residual {residual:.3g})")


def _offdiag_l1(theta):
    return float(np.sum(np.abs(theta)) - np.sum(np.abs(np.diag(theta))))


def _logdet_pd(theta):
    """log det, or ``None`` unless ``theta - PD_FLOOR * I`` is positive definite."""
    m = theta.shape[0]
    try:
        cholesky(theta - PD_FLOOR * np.eye(m), rtol=0.0)
        L = cholesky(theta, rtol=0.0)
    except NotPositiveDefinite:
        return None
    return 2.0 * float(np.sum(np.log(np.diag(L))))


def glasso_objective(theta, S, lam):
    logdet = _logdet_pd(np.asarray(theta, dtype=float))
    if logdet is None:
        return math.inf
    return -logdet + float(np.sum(theta * S)) + lam * _offdiag_l1(theta)


def _sym_inv(theta):
    inv = np.linalg.inv(theta)
    return 0.5 * (inv + inv.T)


def _soft_offdiag(A, thresh):
    out = np.sign(A) * np.maximum(np.abs(A) - thresh, 0.0)
    np.fill_diagonal(out, np.diag(A))
    return out


def _residual(theta, grad, lam):
    """Largest entrywise violation of the first-order optimality conditions."""
    r = np.where(theta != 0, np.abs(grad + lam * np.sign(theta)), np.maximum(np.abs(grad) - lam, 0.0))
    np.fill_diagonal(r, np.abs(np.diag(grad)))
    return float(np.max(r))


def _pseudo_gradient(theta, G, lam):
    """Minimum-norm subgradient of the penalized objective."""
    pg = np.where(theta > 0, G + lam, np.where(theta < 0, G - lam, np.sign(G) * np.maximum(np.abs(G) - lam, 0.0)))
    np.fill_diagonal(pg, np.diag(G))
    return pg


def _orthant_newton(theta, W, S, lam):
    """Newton direction on the orthant picked out by the pseudo-gradient.

    Entries that are zero with no descent direction stay at zero; the
    rest keep (or take) the sign that decreases the objective, so the
    penalty is linear there and the reduced problem is a quadratic solved
    exactly. Returns ``(D, sign, model_decrease)``.
    """
    m = theta.shape[0]
    G = S - W
    pg = _pseudo_gradient(theta, G, lam)
    sign = np.where(theta != 0, np.sign(theta), -np.sign(pg))
    iu, ju = np.triu_indices(m)
    keep = (iu == ju) | (sign[iu, ju] != 0)
    I, J = iu[keep], ju[keep]
    off = I != J
    lin = G + lam * sign
    np.fill_diagonal(lin, np.diag(G))
    # coordinates are E_ij = e_i e_j^T + e_j e_i^T (i != j) or e_i e_i^T
    w = np.where(off, 2.0, 1.0)
    r = w * lin[I, J]
    # tr(W E_p W E_q) = (W_ik W_jl + W_il W_jk) w_p w_q / 2
    H = W[np.ix_(I, I)] * W[np.ix_(J, J)] + W[np.ix_(I, J)] * W[np.ix_(J, I)]
    H *= np.outer(w, w) / 2.0
    try:
        d = np.linalg.solve(H, -r)
    except np.linalg.LinAlgError:
        return None
    D = np.zeros_like(theta)
    D[I, J] = d
    D[J, I] = d
    return D, sign, float(r @ d)


def _penalized(theta, S, lam):
    logdet = _logdet_pd(theta)
    if logdet is None:
        return None
    return -logdet + float(np.sum(theta * S)) + lam * _offdiag_l1(theta)


def graphical_lasso(S, cfg=GlassoConfig(), return_info=False):
    """Minimize ``-log det(Theta) + tr(Theta S) + lam * sum_{i != j} |Theta_ij|``.

    ``cfg.method="newton"`` takes proximal Newton steps whose direction
    comes from coordinate descent on the second-order model;
    ``"ista"`` takes proximal gradient steps with Barzilai-Borwein trial
    step sizes. In both cases a step is backtracked until the iterate
    stays above the PD floor and the objective decreases sufficiently, so
    the objective never increases from one iterate to the next.

    Raises
    ------
    MaxIterExceeded
        If the residual is still above ``cfg.tol`` after ``cfg.max_iter`` steps.
    """
    S = np.asarray(S, dtype=float)
    if np.any(np.diag(S) <= 0):
        raise ValueError("S must have a positive diagonal")
    lam = cfg.lambda_glasso_sq if cfg.lambda_glasso_sq is not None else 0.0
    step_fn = _ista_step if cfg.method == "ista" else _newton_step

    theta = np.diag(1.0 / np.diag(S))
    objectives = [_penalized(theta, S, lam)]
    W = _sym_inv(theta)
    residual = _residual(theta, S - W, lam)
    state = {"step": 1.0, "prev": None}
    it = 0
    while residual > cfg.tol:
        if it >= cfg.max_iter:
            raise MaxIterExceeded(theta, residual, GlassoInfo(it, residual, objectives))
        it += 1
        cand = step_fn(theta, W, S, lam, objectives[-1], state, it)
        if cand is None:
            # no admissible step: the current point is as good as it gets
            raise MaxIterExceeded(theta, residual, GlassoInfo(it, residual, objectives))
        theta, obj = cand
        objectives.append(obj)
        W = _sym_inv(theta)
        residual = _residual(theta, S - W, lam)
    if return_info:
        return theta, GlassoInfo(it, residual, objectives)
    return theta


def _newton_step(theta, W, S, lam, f0, state, it):
    out = _orthant_newton(theta, W, S, lam)
    if out is not None:
        D, sign, model = out
        alpha = 1.0
        while alpha > 1e-10 and model < 0:
            cand = theta + alpha * D
            off = ~np.eye(theta.shape[0], dtype=bool)
            cand[off & (np.sign(cand) != sign)] = 0.0
            obj = _penalized(cand, S, lam)
            if obj is not None and obj <= f0 + SIGMA * alpha * model:
                return cand, obj
            alpha *= 0.5
    return _ista_step(theta, W, S, lam, f0, state, it)


def _ista_step(theta, W, S, lam, f0, state, it):
    grad = S - W
    prev = state["prev"]
    step = state["step"]
    if prev is not None:
        d_theta = theta - prev[0]
        d_grad = grad - prev[1]
        curv = float(np.sum(d_theta * d_grad))
        if curv > 0:
            step = float(np.sum(d_theta * d_theta)) / curv
    step = min(max(step, 1e-10), 1e10)
    while step >= 1e-16:
        cand = _soft_offdiag(theta - step * grad, step * lam)
        obj = _penalized(cand, S, lam)
        if obj is not None:
            diff = cand - theta
            if obj <= f0 - SIGMA / (2 * step) * float(np.sum(diff * diff)):
                state["prev"] = (theta, grad)
                state["step"] = step
                return cand, obj
        step *= 0.5
    return None


def threshold_support(theta, tau):
    """Symmetric pairs with ``|Theta_ij| > tau`` (strict)."""
    theta = np.asarray(theta)
    A = np.abs(theta) > tau
    A = A | A.T
    np.fill_diagonal(A, False)
    return EdgeSet.from_adjacency(A)


def estimate_superstructure(data, cfg=GlassoConfig(), return_theta=False):
    """Thresholded graphical-lasso support, as a symmetric edge set.

    With the default config the penalty is ``log(m) / n`` and the
    threshold ``0.1``.
    """
    cfg = cfg.resolved(data.m, data.n)
    theta = graphical_lasso(sample_covariance(data), cfg)
    E = threshold_support(theta, cfg.threshold_tau)
    return (E, theta) if return_theta else E
