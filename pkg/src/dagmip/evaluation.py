"""Markov equivalence and structure-recovery metrics."""

import itertools
import math

import numpy as np

from .model import Cpdag, Dag

__all__ = [
    "dag_to_cpdag",
    "mec_equal",
    "d_cpdag",
    "scaled_d_cpdag",
    "skeleton_metrics",
    "evaluate",
    "mean_sd",
    "DimensionMismatch",
]


class DimensionMismatch(ValueError):
    pass


def _orient(A, i, j):
    A[j, i] = False


def _directed(A, i, j):
    return A[i, j] and not A[j, i]


def _undirected(A, i, j):
    return A[i, j] and A[j, i]


def _adjacent(A, i, j):
    return A[i, j] or A[j, i]


def _meek_pass(A):
    """One sweep of the four orientation rules; returns True if anything changed."""
    m = A.shape[0]
    changed = False
    for a, b in itertools.permutations(range(m), 2):
        if not _undirected(A, a, b):
            continue
        # R1: c -> a - b, c and b non-adjacent  =>  a -> b
        if any(_directed(A, c, a) and not _adjacent(A, c, b) for c in range(m) if c not in (a, b)):
            _orient(A, a, b)
            changed = True
            continue
        # R2: a -> c -> b and a - b  =>  a -> b
        if any(_directed(A, a, c) and _directed(A, c, b) for c in range(m) if c not in (a, b)):
            _orient(A, a, b)
            changed = True
            continue
        # R3: a - c -> b, a - d -> b, c and d non-adjacent  =>  a -> b
        mids = [c for c in range(m) if c not in (a, b) and _undirected(A, a, c) and _directed(A, c, b)]
        if any(not _adjacent(A, c, d) for c, d in itertools.combinations(mids, 2)):
            _orient(A, a, b)
            changed = True
            continue
        # R4: a - c -> d -> b, a adjacent to d, c and b non-adjacent  =>  a -> b
        hit = False
        for c in range(m):
            if c in (a, b) or not _undirected(A, a, c) or _adjacent(A, c, b):
                continue
            for d in range(m):
                if d in (a, b, c):
                    continue
                if _directed(A, c, d) and _directed(A, d, b) and _adjacent(A, a, d):
                    hit = True
                    break
            if hit:
                break
        if hit:
            _orient(A, a, b)
            changed = True
    return changed


def dag_to_cpdag(dag):
    """CPDAG of the Markov equivalence class of ``dag``.

    Starts from the skeleton with v-structures oriented and applies the
    four Meek rules until nothing changes.
    """
    m = dag.m
    A = np.zeros((m, m), dtype=bool)
    for j, k in dag.edges:
        A[j, k] = A[k, j] = True
    for i, k, j in dag.v_structures():
        _orient(A, i, k)
        _orient(A, j, k)
    while _meek_pass(A):
        pass
    return Cpdag(A)


def mec_equal(g1, g2):
    """Same skeleton and same v-structures."""
    if g1.m != g2.m:
        raise DimensionMismatch(f"{g1.m} != {g2.m}")
    return g1.skeleton() == g2.skeleton() and g1.v_structures() == g2.v_structures()


def _adjacency(g):
    if isinstance(g, Cpdag):
        return g.adjacency
    if isinstance(g, Dag):
        return g.adjacency
    return np.asarray(g, dtype=bool)


def d_cpdag(a, b):
    """Number of differing entries between two CPDAG adjacency matrices."""
    A, B = _adjacency(a), _adjacency(b)
    if A.shape != B.shape:
        raise DimensionMismatch(f"{A.shape} != {B.shape}")
    return int(np.count_nonzero(A != B))


def scaled_d_cpdag(a, b, n_true_edges):
    """``d_cpdag`` divided by the true edge count (raw count if there are none)."""
    d = d_cpdag(a, b)
    return d / n_true_edges if n_true_edges > 0 else float(d)


def skeleton_metrics(truth, est):
    """Skeleton SHD, true positive rate and false positive rate.

    TPR is defined as 1 when the true skeleton is empty and FPR as 0 when
    it is complete.
    """
    if truth.m != est.m:
        raise DimensionMismatch(f"{truth.m} != {est.m}")
    t, e = truth.skeleton(), est.skeleton()
    n_pairs = truth.m * (truth.m - 1) // 2
    shd = len(t ^ e)
    tpr = len(t & e) / len(t) if t else 1.0
    negatives = n_pairs - len(t)
    fpr = len(e - t) / negatives if negatives else 0.0
    return {"shd_skeleton": shd, "tpr": tpr, "fpr": fpr}


def evaluate(truth, est):
    """All metrics for one estimate as a flat dict."""
    d = d_cpdag(dag_to_cpdag(truth), dag_to_cpdag(est))
    row = {"d_cpdag": d, "scaled_d_cpdag": d / len(truth) if len(truth) else float(d)}
    row.update(skeleton_metrics(truth, est))
    return row


def mean_sd(values):
    """Table-style ``mean±sd`` with one decimal; a zero spread prints as ``0``.

    >>> mean_sd([2, 2])
    '2.0±0'
    """
    values = [float(v) for v in values]
    if not values:
        return "nan"
    mean = sum(values) / len(values)
    sd = math.sqrt(sum((v - mean) ** 2 for v in values) / (len(values) - 1)) if len(values) > 1 else 0.0
    sd_str = "0" if round(sd, 1) == 0 else f"{sd:.1f}"
    return f"{mean:.1f}±{sd_str}"
