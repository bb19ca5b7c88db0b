"""Exact per-column bounds from enumerated parent sets.

Dropping the layer constraints decouples the program by column, and each
column then has a closed-form integer optimum: the parent set ``P``
minimizing ``1 + log c_k(P) + lambda^2 |P|`` among the sets allowed at a
node. The minimum over allowed sets is a valid node bound at least as
strong as the continuous relaxation of the same column.

Candidate sets live in the superstructure. A set is kept only if it
beats every one of its subsets (otherwise dropping parents is never
worse and never creates a cycle), which keeps the lists short.
"""

from dataclasses import dataclass
import logging
import math

import numpy as np

from ..scoring import SINGULAR_TOL

__all__ = ["ParentSetTable", "ParentSetLists", "TooManyParents", "order_optimal"]

log = logging.getLogger(__name__)

MAX_CANDIDATES = 16


class TooManyParents(ValueError):
    pass


def _popcount(a):
    return np.array([bin(int(x)).count("1") for x in a], dtype=np.int64)


def _conditional_variances(S, k, cands, masks_by_size):
    """``c_k(P)`` for every mask, computed in batches of equal size."""
    n_masks = 1 << len(cands)
    c = np.empty(n_masks)
    c[0] = S[k, k]
    cands = np.asarray(cands, dtype=np.int64)
    for size, masks in masks_by_size.items():
        if size == 0:
            continue
        bits = ((masks[:, None] >> np.arange(len(cands))) & 1).astype(bool)
        idx = np.array([cands[b] for b in bits])
        block = S[idx[:, :, None], idx[:, None, :]]
        rhs = S[idx, k]
        try:
            coef = np.linalg.solve(block, rhs[:, :, None])[:, :, 0]
            c[masks] = S[k, k] - np.einsum("ni,ni->n", rhs, coef)
        except np.linalg.LinAlgError:
            for q, mask in enumerate(masks):
                try:
                    sol = np.linalg.solve(block[q], rhs[q])
                    c[mask] = S[k, k] - rhs[q] @ sol
                except np.linalg.LinAlgError:
                    c[mask] = 0.0
    return c


class ParentSetTable:
    """Unpenalized local scores ``1 + log c_k(P)`` for every candidate set.

    Independent of ``lambda``, so one table serves a whole lambda grid.
    Sets whose conditional variance is not above ``SINGULAR_TOL`` get an
    infinite score.
    """

    def __init__(self, S, E_super, max_candidates=MAX_CANDIDATES):
        S = np.asarray(S, dtype=float)
        self.m = S.shape[0]
        self.candidates = []
        self.raw = []
        self.sizes = []
        for k in range(self.m):
            cands = sorted(j for j, c in E_super.pairs if c == k)
            if len(cands) > max_candidates:
                raise TooManyParents(
                    f"node {k} has {len(cands)} candidate parents (limit {max_candidates})")
            masks = np.arange(1 << len(cands), dtype=np.int64)
            size = _popcount(masks)
            by_size = {s: masks[size == s] for s in range(len(cands) + 1)}
            c = _conditional_variances(S, k, cands, by_size)
            with np.errstate(divide="ignore", invalid="ignore"):
                score = np.where(c > SINGULAR_TOL, 1.0 + np.log(np.maximum(c, SINGULAR_TOL)), np.inf)
            self.candidates.append(cands)
            self.raw.append(score)
            self.sizes.append(size)

    def for_lambda(self, lambda_sq):
        return ParentSetLists(self, lambda_sq)


@dataclass
class _Column:
    cands: list
    bit: dict
    masks: np.ndarray
    scores: np.ndarray
    all_masks: np.ndarray
    all_scores: np.ndarray
    sub_best: np.ndarray
    sub_arg: np.ndarray


class ParentSetLists:
    """Parent sets per node sorted by penalized score.

    Queries without required parents scan only the non-dominated sets;
    queries with required parents scan every finite set.
    """

    def __init__(self, table, lambda_sq):
        self.m = table.m
        self.lambda_sq = lambda_sq
        self.columns = []
        for k in range(table.m):
            cands = table.candidates[k]
            pen = table.raw[k] + lambda_sq * table.sizes[k]
            best_sub = pen.copy()
            keep = np.zeros(pen.size, dtype=bool)
            keep[0] = np.isfinite(pen[0])
            order = np.argsort(table.sizes[k], kind="stable")
            sizes = table.sizes[k][order]
            for s in range(1, len(cands) + 1):
                masks = order[sizes == s]
                prior = np.full(masks.size, np.inf)
                for i in range(len(cands)):
                    has = (masks >> i) & 1 == 1
                    prior[has] = np.minimum(prior[has], best_sub[masks[has] ^ (1 << i)])
                keep[masks] = pen[masks] < prior
                best_sub[masks] = np.minimum(pen[masks], prior)
            # argmin over subsets: a mask is its own best subset if kept
            best_arg = np.where(keep, np.arange(pen.size), -1)
            for s in range(1, len(cands) + 1):
                masks = order[sizes == s]
                masks = masks[best_arg[masks] < 0]
                for i in range(len(cands)):
                    has = ((masks >> i) & 1 == 1) & (best_arg[masks] < 0)
                    sub = masks[has] ^ (1 << i)
                    hit = best_sub[sub] == best_sub[masks[has]]
                    best_arg[masks[has][hit]] = best_arg[sub[hit]]
            kept = np.flatnonzero(keep)
            kept = kept[np.lexsort((kept, pen[kept]))]
            finite = np.flatnonzero(np.isfinite(pen))
            finite = finite[np.lexsort((finite, pen[finite]))]
            self.columns.append(_Column(cands, {j: i for i, j in enumerate(cands)},
                                        kept.astype(np.int64), pen[kept],
                                        finite.astype(np.int64), pen[finite],
                                        best_sub, best_arg))

    def n_sets(self):
        return [c.masks.size for c in self.columns]

    def masks_for(self, k, fixed):
        """``(must, forbid)`` bit masks for column ``k`` under ``fixed``."""
        col = self.columns[k]
        must = forbid = 0
        for j, i in col.bit.items():
            v = fixed.get((j, k))
            if v == 1:
                must |= 1 << i
            elif v == 0:
                forbid |= 1 << i
        return must, forbid

    def best(self, k, must=0, forbid=0, within=None):
        """Best kept set with ``must`` bits set and ``forbid`` bits clear.

        ``within`` optionally restricts to subsets of a mask. Returns
        ``(score, parents)`` or ``(inf, None)`` when nothing qualifies.
        """
        col = self.columns[k]
        # pruning is only sound under subset-closed constraints
        masks, scores = (col.masks, col.scores) if must == 0 else (col.all_masks, col.all_scores)
        ok = ((masks & must) == must) & ((masks & forbid) == 0)
        if within is not None:
            ok &= (masks & ~within) == 0
        hits = np.flatnonzero(ok)
        if hits.size == 0:
            return math.inf, None
        q = int(hits[0])
        return float(scores[q]), self.parents(k, int(masks[q]))

    def best_within(self, k, must, forbid, within):
        """Best set with ``must`` set, ``forbid`` clear and inside ``within``; ``(score, mask)``."""
        if must & ~within:
            return math.inf, -1
        col = self.columns[k]
        if must == 0:
            w = within & ~forbid
            return float(col.sub_best[w]), int(col.sub_arg[w])
        ok = ((col.all_masks & must) == must) & ((col.all_masks & (forbid | ~within)) == 0)
        hits = np.flatnonzero(ok)
        if hits.size == 0:
            return math.inf, -1
        q = int(hits[0])
        return float(col.all_scores[q]), int(col.all_masks[q])

    def parents(self, k, mask):
        cands = self.columns[k].cands
        return tuple(j for i, j in enumerate(cands) if mask >> i & 1)

    def mask_of(self, k, nodes):
        bit = self.columns[k].bit
        out = 0
        for j in nodes:
            i = bit.get(j)
            if i is not None:
                out |= 1 << i
        return out


def order_optimal(lists, order):
    """Best parent set for every node among its predecessors in ``order``.

    Returns ``(score, parent_sets)``; the resulting graph is acyclic.
    """
    seen = []
    total = 0.0
    parent_sets = [()] * lists.m
    for v in order:
        score, P = lists.best(v, within=lists.mask_of(v, seen))
        total += score
        parent_sets[v] = P
        seen.append(v)
    return total, parent_sets
