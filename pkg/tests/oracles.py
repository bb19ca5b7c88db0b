"""Brute-force references used by several test modules.

Everything here is written independently of the package so that it can
serve as a check on it.
"""

import itertools
from math import comb

import numpy as np
from scipy.optimize import minimize


def _acyclic(m, edges):
    indeg = [0] * m
    for _, k in edges:
        indeg[k] += 1
    stack = [v for v in range(m) if indeg[v] == 0]
    seen = 0
    while stack:
        v = stack.pop()
        seen += 1
        for j, k in edges:
            if j == v:
                indeg[k] -= 1
                if indeg[k] == 0:
                    stack.append(k)
    return seen == m


def all_dags(m):
    """Every labeled DAG on ``m`` nodes as a frozenset of edges."""
    pairs = list(itertools.combinations(range(m), 2))
    out = []
    for states in itertools.product((0, 1, 2), repeat=len(pairs)):
        edges = set()
        for (i, j), s in zip(pairs, states):
            if s == 1:
                edges.add((i, j))
            elif s == 2:
                edges.add((j, i))
        if _acyclic(m, edges):
            out.append(frozenset(edges))
    return out


def count_dags(m):
    """Robinson's recurrence for the number of labeled DAGs."""
    a = [1]
    for n in range(1, m + 1):
        a.append(sum((-1) ** (k + 1) * comb(n, k) * 2 ** (k * (n - k)) * a[n - k]
                     for k in range(1, n + 1)))
    return a[m]


def signature(m, edges):
    """Skeleton and v-structures, the Markov equivalence invariant."""
    skel = frozenset(frozenset(e) for e in edges)
    vs = set()
    for k in range(m):
        pa = sorted(j for j, c in edges if c == k)
        for a, b in itertools.combinations(pa, 2):
            if frozenset((a, b)) not in skel:
                vs.add((a, b, k))
    return skel, frozenset(vs)


def mec_classes(m):
    groups = {}
    for edges in all_dags(m):
        groups.setdefault(signature(m, edges), []).append(edges)
    return list(groups.values())


def cpdag_by_intersection(m, members):
    """Adjacency of the CPDAG: an orientation survives only if all members share it."""
    A = np.zeros((m, m), dtype=bool)
    for edges in members:
        for j, k in edges:
            A[j, k] = True
    return A


def numeric_dag_objective(S, edges, lambda_sq, restarts=3, seed=0):
    """Minimize the penalized objective over gammas supported on ``edges`` numerically."""
    m = S.shape[0]
    edges = sorted(edges)

    def unpack(z):
        G = np.diag(np.exp(z[:m]))
        for q, (j, k) in enumerate(edges):
            G[j, k] = z[m + q]
        return G

    def f(z):
        G = unpack(z)
        return -2.0 * np.sum(z[:m]) + np.trace(G @ G.T @ S)

    rng = np.random.default_rng(seed)
    best = np.inf
    for r in range(restarts):
        z0 = np.concatenate([np.zeros(m), rng.standard_normal(len(edges)) * 0.1 * r])
        res = minimize(f, z0, method="BFGS", options={"gtol": 1e-11, "maxiter": 10_000})
        best = min(best, res.fun)
    return best + lambda_sq * len(edges)
