"""Outer-approximation cuts for the ``-2 log x`` terms.

A cut anchored at ``x0 > 0`` is the tangent line
``T >= -2 log x0 - (2 / x0) (x - x0) = (2 - 2 log x0) - (2 / x0) x``.
Because ``-2 log`` is convex every cut underestimates it, and the
maximum over a set of cuts is a convex piecewise-linear minorant.
"""

from dataclasses import dataclass
import bisect
import math

import numpy as np

from ..formulation import DIAG_FLOOR

__all__ = ["OaCut", "oa_cut_at", "CutPool", "OaTrace", "solve_integer_log_program"]


@dataclass(frozen=True)
class OaCut:
    node: int
    anchor: float

    @property
    def slope(self):
        return -2.0 / self.anchor

    @property
    def intercept(self):
        return 2.0 - 2.0 * math.log(self.anchor)

    def __call__(self, x):
        return self.intercept + self.slope * x

    def violation(self, x, t):
        """How far ``t`` lies below the true ``-2 log x`` (positive = cut needed)."""
        return -2.0 * math.log(x) - t


def oa_cut_at(i, gamma_ii, floor=DIAG_FLOOR):
    if not gamma_ii >= floor:
        raise ValueError(f"cut anchor {gamma_ii!r} is below the floor {floor}")
    return OaCut(int(i), float(gamma_ii))


class _NodeCuts:
    """Sorted tangents for one variable, with their pairwise breakpoints."""

    __slots__ = ("anchors", "alpha", "beta", "left", "right")

    def __init__(self):
        self.anchors = []
        self._rebuild()

    def _rebuild(self):
        a = np.asarray(self.anchors, dtype=float)
        self.alpha = 2.0 - 2.0 * np.log(a) if a.size else np.zeros(0)
        self.beta = -2.0 / a if a.size else np.zeros(0)
        if a.size > 1:
            a0, a1 = a[:-1], a[1:]
            kinks = (np.log(a1) - np.log(a0)) * a0 * a1 / (a1 - a0)
        else:
            kinks = np.zeros(0)
        self.left = np.concatenate(([-np.inf], kinks))
        self.right = np.concatenate((kinks, [np.inf]))

    def add(self, x):
        pos = bisect.bisect_left(self.anchors, x)
        for q in (pos - 1, pos):
            if 0 <= q < len(self.anchors) and abs(self.anchors[q] - x) <= 1e-12 * x:
                return False
        self.anchors.insert(pos, x)
        self._rebuild()
        return True


class CutPool:
    """Globally valid cuts, append-only, grouped by variable index."""

    def __init__(self, m):
        self.m = m
        self._nodes = [_NodeCuts() for _ in range(m)]
        self.version = [0] * m
        self.n_added = 0

    def add(self, cut):
        if self._nodes[cut.node].add(cut.anchor):
            self.version[cut.node] += 1
            self.n_added += 1
            return True
        return False

    def add_at(self, i, x):
        return self.add(oa_cut_at(i, x))

    def cuts(self, i):
        return [OaCut(i, a) for a in self._nodes[i].anchors]

    def __len__(self):
        return self.n_added

    def count(self, i):
        return len(self._nodes[i].anchors)

    def value(self, i, x):
        """Max over the cuts of variable ``i`` at ``x`` (``-inf`` with no cuts)."""
        nc = self._nodes[i]
        if not nc.anchors:
            return -math.inf
        return float(np.max(nc.alpha + nc.beta * x))

    def minimize(self, i, a, c, lo, hi):
        """Minimize ``a x^2 + c x + max_cuts(x)`` over ``[lo, hi]``, ``a >= 0``.

        On the segment where cut ``q`` is the active one the function is the
        quadratic ``a x^2 + (c + beta_q) x + alpha_q``, so the exact minimum
        is the best of the per-segment minima. Returns ``(x, value)``.
        """
        nc = self._nodes[i]
        if not nc.anchors:
            raise ValueError(f"no cuts for variable {i}: the relaxation is unbounded")
        seg_lo = np.maximum(nc.left, lo)
        seg_hi = np.minimum(nc.right, hi)
        ok = seg_lo <= seg_hi
        slope = c + nc.beta
        if a > 0:
            x = np.clip(-slope / (2.0 * a), seg_lo, seg_hi)
        else:
            x = np.where(slope > 0, seg_lo, seg_hi)
        vals = a * x * x + slope * x + nc.alpha
        vals = np.where(ok, vals, np.inf)
        q = int(np.argmin(vals))
        return float(x[q]), float(vals[q])


@dataclass
class OaTrace:
    """Iterates of an outer-approximation run on a single integer variable.

    ``anchors`` lists the points where cuts were added, in order; the last
    iterate repeats the final anchor once its cut is tight.
    """

    anchors: list
    iterates: list
    cut_values: list
    cuts: list
    x: int
    value: float


def _master_integer(pool, c, lo, hi):
    """Integer minimizer of ``c x + max_cuts(x)`` on ``{lo, ..., hi}``.

    The continuous relaxation is solved first; when its minimizer is
    fractional the two branches ``x <= floor`` and ``x >= ceil`` are
    solved and the better one kept (the objective is convex, so each branch
    is optimal at its boundary).
    """
    x, _ = pool.minimize(0, 0.0, c, float(lo), float(hi))
    if abs(x - round(x)) <= 1e-9:
        cands = [int(round(x))]
    else:
        cands = [max(lo, math.floor(x)), min(hi, math.ceil(x))]
    best = None
    for xi in cands:
        t = pool.value(0, xi)
        val = c * xi + t
        if best is None or val < best[2] - 1e-15:
            best = (xi, t, val)
    return best


def solve_integer_log_program(c=1.0, start=4, lo=1, hi=10**6, tol=1e-9, max_iter=100):
    """Minimize ``-2 log x + c x`` over integers ``lo <= x <= hi`` by outer approximation.

    ``-2 log x`` is replaced by an epigraph variable ``y``. Starting from
    ``x = start`` with ``y = -inf``, a tangent cut is added at the current
    ``x`` whenever ``y < -2 log x``, and the master problem
    ``min y + c x`` over the current cuts is re-solved.
    """
    pool = CutPool(1)
    x, y = int(start), -math.inf
    iterates = [x]
    cut_values = [y]
    anchors = []
    for _ in range(max_iter):
        if y >= -2.0 * math.log(x) - tol:
            break
        pool.add_at(0, float(x))
        anchors.append(x)
        x, y, _ = _master_integer(pool, c, lo, hi)
        iterates.append(x)
        cut_values.append(y)
    else:
        raise RuntimeError("outer approximation did not converge")
    return OaTrace(anchors, iterates, cut_values, pool.cuts(0), x, -2.0 * math.log(x) + c * x)
