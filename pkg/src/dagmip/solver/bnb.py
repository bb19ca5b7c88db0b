"""Branch-and-bound with outer approximation for the layered-network program."""

from dataclasses import dataclass, field
import csv
import heapq
import json
import logging
import math
import os
import time

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from ..formulation import DIAG_FLOOR, unconstrained_gamma
from ..model import Dag
from ..scoring import LocalScorer, SingularParentBlock, dag_mle, objective
from .oa import CutPool
from .parentsets import ParentSetTable, order_optimal
from .relaxation import (
    InfeasibleNode,
    _ColumnData,
    solve_node_relaxation,
)

__all__ = [
    "SolveConfig",
    "SolveReport",
    "BnbNode",
    "DegenerateColumn",
    "gap_target",
    "rescale_to_trace",
    "greedy_incumbent",
    "branch_and_bound",
    "OPTIMAL",
    "GAP_REACHED",
    "TIME_LIMIT",
]

log = logging.getLogger(__name__)

OPTIMAL = "Optimal"
GAP_REACHED = "GapReached"
TIME_LIMIT = "TimeLimit"

INTEGRALITY_TOL = 1e-6
RELAXATIONS = ("parent-set", "perspective")
GROUP_CACHE_SIZE = 200000


class DegenerateColumn(ValueError):
    pass


def gap_target(mode, lambda_sq=None, m=None, tau=None, c=0.5):
    """Absolute optimality-gap target for an early-stopping mode.

    ``exact`` gives 0, ``theorem1`` gives ``lambda^2 m (m - 1) / 4``,
    ``theorem2`` gives ``c lambda^2`` and ``custom`` returns ``tau``.
    """
    if mode == "exact":
        return 0.0
    if mode == "theorem1":
        return lambda_sq * m * (m - 1) / 4.0
    if mode == "theorem2":
        if not 0 < c < 1:
            raise ValueError("theorem2 needs 0 < c < 1")
        return c * lambda_sq
    if mode == "custom":
        if tau is None or not tau >= 0:
            raise ValueError("custom gap target needs tau >= 0")
        return float(tau)
    raise ValueError(f"unknown gap mode {mode!r}")


def rescale_to_trace(gamma, S):
    """Scale each column so that ``(Gamma^T S Gamma)_ii = 1``.

    Column ``i`` is multiplied by ``(Gamma^T S Gamma)_ii^{-1/2}``; the
    support is unchanged and the objective never increases.
    """
    gamma = np.asarray(gamma, dtype=float)
    S = np.asarray(S, dtype=float)
    w = np.einsum("ji,jk,ki->i", gamma, S, gamma)
    if np.any(w <= 1e-14):
        bad = int(np.argmin(w))
        raise DegenerateColumn(f"column {bad} has (Gamma^T S Gamma)_ii = {w[bad]:.3g}")
    return gamma / np.sqrt(w)[None, :]


@dataclass(frozen=True)
class SolveConfig:
    """Solver settings.

    ``gap_target`` is absolute (see :func:`gap_target`); ``time_limit_secs``
    defaults to ``50 m`` seconds. ``abs_tol`` is the pruning tolerance.

    ``relaxation`` picks the node bound. ``"perspective"`` solves the
    continuous perspective relaxation with outer-approximation cuts for
    the log terms. ``"parent-set"`` drops the layer constraints and solves
    each column exactly over enumerated parent sets, which is never weaker
    and much cheaper per node when the superstructure is sparse. In that
    mode nodes whose best parent sets form a cycle are split into groups
    of at most ``group_size`` and each group is ordered exactly by dynamic
    programming; ``group_size=1`` gives the plain per-column bound.
    In perspective mode cuts are added at the root and at nodes whose
    relaxation is integral; ``cuts_at_fractional`` adds them everywhere.
    Nodes are processed one at a time; ``worker_count`` is accepted for
    interface compatibility and has no effect on the search.
    """

    gap_target: float = 0.0
    time_limit_secs: float = None
    relaxation: str = "parent-set"
    node_relax_tol: float = 1e-6
    cut_tol: float = 1e-6
    abs_tol: float = 1e-7
    deterministic: bool = True
    worker_count: int = 1
    cuts_at_fractional: bool = False
    max_nodes: int = None
    event_log: str = None
    group_size: int = 8

    def __post_init__(self):
        if not self.gap_target >= 0:
            raise ValueError("gap_target must be non-negative")
        if self.time_limit_secs is not None and not self.time_limit_secs > 0:
            raise ValueError("time_limit_secs must be positive")
        if self.worker_count < 1:
            raise ValueError("worker_count must be at least 1")
        if self.group_size < 1:
            raise ValueError("group_size must be at least 1")
        if self.relaxation not in RELAXATIONS:
            raise ValueError(f"relaxation must be one of {RELAXATIONS}")

    def time_limit(self, m):
        return self.time_limit_secs if self.time_limit_secs is not None else 50.0 * m


@dataclass
class SolveReport:
    gamma: np.ndarray
    dag: Dag
    upper_bound: float
    lower_bound: float
    status: str
    nodes_explored: int
    oa_cuts: int
    wall_secs: float
    gap_target: float = 0.0
    lambda_sq: float = None
    events: list = field(default_factory=list)

    @property
    def objective(self):
        return self.upper_bound

    @property
    def gap(self):
        return self.upper_bound - self.lower_bound

    @property
    def rgap(self):
        """``(UB - LB) / |LB|``; 0 when the bounds agree, ``inf`` if ``LB = 0`` otherwise."""
        gap = self.gap
        if gap <= 0:
            return 0.0
        if self.lower_bound == 0:
            return math.inf
        return gap / abs(self.lower_bound)

    @property
    def g(self):
        return {p: 1 for p in self.dag.sorted_edges()}

    def to_dict(self, timings=True):
        out = {
            "status": self.status,
            "objective": self.upper_bound,
            "lower_bound": self.lower_bound,
            "gap": self.gap,
            "rgap": self.rgap,
            "gap_target": self.gap_target,
            "lambda_sq": self.lambda_sq,
            "nodes_explored": self.nodes_explored,
            "oa_cuts": self.oa_cuts,
            "edges": [list(e) for e in self.dag.sorted_edges()],
            "gamma": self.gamma.tolist(),
        }
        if timings:
            out["wall_secs"] = self.wall_secs
        return out

    def to_json(self, path=None, timings=True):
        text = json.dumps(self.to_dict(timings), indent=2)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text


@dataclass
class BnbNode:
    fixed: dict
    reach: np.ndarray
    key: float
    depth: int = 0
    cache: object = None
    branch: tuple = None


def _fix(problem, node, pair, value):
    """Child fixings with acyclicity propagated through fixed-in edges."""
    fixed = dict(node.fixed)
    fixed[pair] = value
    reach = node.reach
    if value == 1:
        j, k = pair
        if reach[k, j]:
            raise InfeasibleNode(f"edge {pair} closes a cycle")
        src = reach[:, j].copy()
        src[j] = True
        dst = reach[k, :].copy()
        dst[k] = True
        reach = reach | np.outer(src, dst)
        for a, b in problem.pairs:
            if (a, b) not in fixed and reach[b, a]:
                fixed[(a, b)] = 0
    return fixed, reach


def _find_cycle(m, edges):
    """Edges of one directed cycle, or ``None``."""
    adj = [[] for _ in range(m)]
    for j, k in edges:
        adj[j].append(k)
    color = [0] * m
    stack_pos = {}
    path = []
    for root in range(m):
        if color[root]:
            continue
        it_stack = [(root, iter(adj[root]))]
        color[root] = 1
        stack_pos[root] = 0
        path.append(root)
        while it_stack:
            v, it = it_stack[-1]
            nxt = next(it, None)
            if nxt is None:
                color[v] = 2
                it_stack.pop()
                path.pop()
                del stack_pos[v]
                continue
            if color[nxt] == 1:
                cyc = path[stack_pos[nxt]:] + [nxt]
                return list(zip(cyc[:-1], cyc[1:]))
            if color[nxt] == 0:
                color[nxt] = 1
                stack_pos[nxt] = len(path)
                path.append(nxt)
                it_stack.append((nxt, iter(adj[nxt])))
    return None


def _dag_from_parents(m, parent_sets):
    return Dag(m, frozenset((j, k) for k, P in enumerate(parent_sets) for j in P))


def _greedy_acyclic(m, ranked_edges):
    """Add edges in order, skipping any that would close a cycle."""
    reach = np.zeros((m, m), dtype=bool)
    kept = []
    for j, k in ranked_edges:
        if j == k or reach[k, j]:
            continue
        src = reach[:, j].copy()
        src[j] = True
        dst = reach[k, :].copy()
        dst[k] = True
        reach |= np.outer(src, dst)
        kept.append((j, k))
    return Dag(m, frozenset(kept))


def greedy_incumbent(problem, scorer=None):
    """Order nodes by repeatedly removing the one with the smallest
    conditional variance given its remaining superstructure neighbours,
    then fit every superstructure edge that agrees with the order."""
    scorer = scorer or LocalScorer(problem.S)
    m = problem.m
    remaining = set(range(m))
    sinks = []
    cand_parents = {k: {j for j, c in problem.pairs if c == k} for k in range(m)}
    while remaining:
        best = None
        for k in sorted(remaining):
            P = sorted(cand_parents[k] & remaining)
            try:
                c, _ = scorer.local(k, P)
            except SingularParentBlock:
                c = math.inf
            if best is None or c < best[0]:
                best = (c, k)
        sinks.append(best[1])
        remaining.discard(best[1])
    order = sinks[::-1]
    pos = {v: i for i, v in enumerate(order)}
    edges = frozenset((j, k) for j, k in problem.pairs if pos[j] < pos[k])
    return dag_mle(problem.S, Dag(m, edges), problem.lambda_sq, scorer)


class _Search:
    def __init__(self, problem, cfg, parent_sets=None):
        self.problem = problem
        self.cfg = cfg
        self.m = problem.m
        self.scorer = LocalScorer(problem.S)
        self.pool = CutPool(self.m)
        self.col_data = [_ColumnData(problem, k) for k in range(self.m)]
        self.lists = None
        if cfg.relaxation == "parent-set":
            table = parent_sets or ParentSetTable(problem.S, problem.E_super)
            self.table = table
            self.lists = table.for_lambda(problem.lambda_sq)
        self.ub = math.inf
        self.incumbent = None
        self.start = time.perf_counter()
        self.events = []
        self.lb = -math.inf
        self.nodes = 0
        self.group_cache = {}

    def elapsed(self):
        return time.perf_counter() - self.start

    def _event(self, kind, node_id):
        self.events.append((self.elapsed(), node_id, kind, self.ub, self.lb))

    def within_big_m(self, gamma):
        M = self.problem.big_m
        return float(np.max(np.abs(gamma))) <= M and float(np.min(np.diag(gamma))) >= DIAG_FLOOR

    def offer(self, gamma, dag, node_id, source):
        """Exact objective of a candidate; becomes the incumbent if better.

        Candidates are rescaled to unit trace per column first, which
        never increases the objective.
        """
        try:
            gamma = rescale_to_trace(gamma, self.problem.S)
            val = objective(gamma, self.problem.S, self.problem.lambda_sq)
        except ValueError:
            return False
        if val < self.ub - 1e-12:
            M = self.problem.big_m
            if not self.within_big_m(gamma):
                if self.lists is None:
                    log.debug("candidate from %s rejected: outside big-M box", source)
                    return False
                # the parent-set bound does not use the box, so neither does the incumbent
                log.warning("incumbent leaves the big-M box (max |Gamma| %.4g > %.4g)",
                            float(np.max(np.abs(gamma))), M)
            elif float(np.max(np.abs(gamma))) > 0.99 * M:
                log.warning("incumbent entry within 1%% of big-M (%.4g); the bound may be binding", M)
            self.ub = val
            self.incumbent = (gamma, dag)
            self._event("incumbent:" + source, node_id)
            log.debug("node %d: incumbent %.10g from %s", node_id, val, source)
            return True
        return False

    def offer_dag(self, dag, node_id, source, fallback=None):
        try:
            fit = dag_mle(self.problem.S, dag, self.problem.lambda_sq, self.scorer)
        except SingularParentBlock:
            fit = None
        if fit is not None and (self.lists is not None or self.within_big_m(fit.gamma)):
            return self.offer(fit.gamma, dag, node_id, source)
        if fallback is not None:
            return self.offer(fallback, dag, node_id, source + "-relaxed")
        return False

    def initial(self):
        p = self.problem
        heur = greedy_incumbent(p, self.scorer)
        self.offer_dag(heur.dag, -1, "greedy")
        if self.lists is not None:
            _, parent_sets = order_optimal(self.lists, heur.dag.topological_order())
            self.offer_dag(_dag_from_parents(self.m, parent_sets), -1, "greedy-order")
        if self.incumbent is None:
            # the empty graph is always feasible
            self.offer_dag(Dag(self.m, frozenset()), -1, "empty", fallback=np.diag(1.0 / np.sqrt(np.diag(p.S))))
        anchors = [np.ones(self.m), np.diag(heur.gamma)]
        try:
            anchors.append(np.diag(unconstrained_gamma(p.S, p.E_super)))
        except SingularParentBlock:
            pass
        for i in range(self.m):
            for a in anchors:
                self.pool.add_at(i, min(max(float(a[i]), DIAG_FLOOR), p.big_m))

    def process(self, node, node_id):
        """Bound a node; return ``(bound, children)`` with the preferred child first."""
        if self.lists is not None:
            return self._process_parent_sets(node, node_id)
        return self._process_perspective(node, node_id)

    def _children(self, node, pair, bound, cache, order):
        children = []
        for val in order:
            try:
                fixed, reach = _fix(self.problem, node, pair, val)
            except InfeasibleNode:
                continue
            children.append(BnbNode(fixed, reach, bound, node.depth + 1, cache, (pair, val)))
        return children

    def _process_parent_sets(self, node, node_id):
        lists, m = self.lists, self.m
        parent_cols = node.cache
        cols = []
        for k in range(m):
            must, forbid = lists.masks_for(k, node.fixed)
            if parent_cols is not None and parent_cols[k][:2] == (must, forbid):
                cols.append(parent_cols[k])
                continue
            score, P = lists.best(k, must, forbid)
            cols.append((must, forbid, score, P))
        if not all(math.isfinite(c[2]) for c in cols):
            return node.key, []
        parent_sets = [c[3] for c in cols]
        raw = sum(c[2] for c in cols)
        edges = [(j, k) for k in range(m) for j in parent_sets[k]]
        if self.cfg.group_size > 1 and _find_cycle(m, edges) is not None:
            for group in self._groups(edges):
                val, sets = self._group_bound(group, cols)
                if not math.isfinite(val):
                    return node.key, []
                raw += val - sum(cols[v][2] for v in group)
                for v, P in zip(group, sets):
                    parent_sets[v] = P
            edges = [(j, k) for k in range(m) for j in parent_sets[k]]
        bound = max(raw, node.key)
        cycle = _find_cycle(m, edges)
        if cycle is None:
            # the relaxed optimum is acyclic, so it solves the node
            self.offer_dag(_dag_from_parents(m, parent_sets), node_id, "integral")
            return bound, []
        self._repair(parent_sets, edges, node_id)
        if bound >= self.ub - self.cfg.abs_tol:
            return bound, []
        best = None
        for j, k in cycle:
            if (j, k) in node.fixed:
                continue
            bit = 1 << lists.columns[k].bit[j]
            must, forbid, score, _ = cols[k]
            alt, _ = lists.best(k, must, forbid | bit)
            key = (alt - score, j, k)
            if best is None or key < best:
                best = key
        pair = best[1:]
        return bound, self._children(node, pair, bound, cols, (0, 1))

    def _groups(self, edges):
        """Strongly connected parts of ``edges`` cut into breadth-first chunks."""
        m, size = self.m, self.cfg.group_size
        graph = csr_matrix((np.ones(len(edges)), tuple(zip(*edges))), shape=(m, m))
        n_comp, label = connected_components(graph, directed=True, connection="strong")
        adj = [set() for _ in range(m)]
        for j, k in edges:
            adj[j].add(k)
            adj[k].add(j)
        groups = []
        for c in range(n_comp):
            members = set(np.flatnonzero(label == c).tolist())
            if len(members) < 2:
                continue
            order = []
            seen = set()
            for root in sorted(members):
                if root in seen:
                    continue
                seen.add(root)
                queue = [root]
                while queue:
                    v = queue.pop(0)
                    order.append(v)
                    for u in sorted(adj[v] & members):
                        if u not in seen:
                            seen.add(u)
                            queue.append(u)
            groups.extend(tuple(order[i:i + size]) for i in range(0, len(order), size))
        return groups

    def _group_bound(self, group, cols):
        """Best total score of ``group`` over acyclic orders of its members.

        Parents outside the group are unrestricted, so this relaxes the
        acyclicity constraint to the group only. Returns the value and the
        chosen parent sets in group order.
        """
        key = (group, tuple(cols[v][:2] for v in group))
        hit = self.group_cache.get(key)
        if hit is not None:
            return hit
        lists = self.lists
        g = len(group)
        full = 1 << g
        base, member = [], []
        for v in group:
            col = lists.columns[v]
            bits = [1 << col.bit[u] if u in col.bit else 0 for u in group]
            base.append(((1 << len(col.cands)) - 1) & ~sum(bits))
            member.append(bits)
        f = [math.inf] * full
        f[0] = 0.0
        choice = [None] * full
        within = [[0] * full for _ in range(g)]
        for i in range(g):
            w = within[i]
            w[0] = base[i]
            for U in range(1, full):
                low = (U & -U).bit_length() - 1
                w[U] = w[U & (U - 1)] | member[i][low]
        for U in range(1, full):
            best = math.inf
            for i in range(g):
                if not U >> i & 1:
                    continue
                rest = U ^ (1 << i)
                if f[rest] == math.inf:
                    continue
                v = group[i]
                sc, mask = lists.best_within(v, cols[v][0], cols[v][1], within[i][rest])
                if f[rest] + sc < best:
                    best = f[rest] + sc
                    choice[U] = (i, mask)
            f[U] = best
        sets = [()] * g
        U = full - 1
        if math.isfinite(f[U]):
            while U:
                i, mask = choice[U]
                sets[i] = lists.parents(group[i], mask)
                U ^= 1 << i
        if len(self.group_cache) > GROUP_CACHE_SIZE:
            self.group_cache.clear()
        self.group_cache[key] = (f[full - 1], sets)
        return f[full - 1], sets

    def _repair(self, parent_sets, edges, node_id):
        """Incumbent from the relaxed parent sets: drop the weakest cycle
        edges, then refit the best parent sets for the resulting order."""
        table, lists = self.table, self.lists
        loss = []
        for j, k in edges:
            col = lists.columns[k]
            mask = lists.mask_of(k, parent_sets[k])
            bit = 1 << col.bit[j]
            loss.append((table.raw[k][mask ^ bit] - table.raw[k][mask], (j, k)))
        loss.sort(key=lambda t: (-t[0], t[1]))
        dag = _greedy_acyclic(self.m, [e for _, e in loss])
        _, parent_sets = order_optimal(lists, dag.topological_order())
        self.offer_dag(_dag_from_parents(self.m, parent_sets), node_id, "repair")

    def _process_perspective(self, node, node_id):
        p, cfg = self.problem, self.cfg
        add_cuts = cfg.cuts_at_fractional or node.depth == 0
        free = [q for q in p.pairs if q not in node.fixed]
        while True:
            relax = solve_node_relaxation(
                p, self.pool, node.fixed, node.cache, cfg.node_relax_tol, cfg.cut_tol,
                add_cuts=add_cuts, col_data=self.col_data,
            )
            gvals = relax.indicators(p)
            fractional = [q for q in free if INTEGRALITY_TOL < gvals[q] < 1.0 - INTEGRALITY_TOL]
            if fractional or add_cuts:
                break
            # integral relaxation: run the cut loop to convergence before trusting it
            add_cuts = True
        bound = max(relax.bound, node.key)
        gamma_r = relax.gamma(self.m)

        support = [q for q in p.pairs if node.fixed.get(q) == 1 or (q not in node.fixed and gvals[q] >= 0.5)]
        ranked = sorted(support, key=lambda q: (node.fixed.get(q) != 1, -gvals[q], -abs(gamma_r[q]), q))
        dag = _greedy_acyclic(self.m, ranked)
        if not fractional and len(dag) == len(support):
            fb = np.where(np.eye(self.m, dtype=bool) | dag.adjacency, gamma_r, 0.0)
            self.offer_dag(dag, node_id, "integral", fallback=fb)
        else:
            self.offer_dag(dag, node_id, "rounding")

        if bound >= self.ub - cfg.abs_tol:
            return bound, []
        if not fractional:
            cycle = _find_cycle(self.m, support)
            if cycle is None:
                # relaxation optimum is feasible: the node is solved
                return bound, []
            cands = [q for q in cycle if q not in node.fixed]
            pair = min(cands, key=lambda q: (abs(gamma_r[q]), q))
        else:
            pair = min(fractional, key=lambda q: (abs(gvals[q] - 0.5), -abs(gamma_r[q]), q))
        prefer = 1 if gvals[pair] >= 0.5 else 0
        return bound, self._children(node, pair, bound, relax, (prefer, 1 - prefer))


def branch_and_bound(problem, cfg=SolveConfig(), parent_sets=None):
    """Solve the mixed-integer program to the configured gap.

    Best-bound search with depth-first plunging: after a node is
    branched its preferred child is processed next, and the other goes to
    the queue keyed by the parent's bound. A node is pruned when its bound
    reaches the incumbent value minus ``cfg.abs_tol``.

    ``parent_sets`` is an optional precomputed :class:`ParentSetTable`
    for the same covariance and superstructure (it does not depend on
    lambda, so it can be shared across a lambda grid).
    """
    search = _Search(problem, cfg, parent_sets)
    m = problem.m
    limit = cfg.time_limit(m)
    search.initial()

    heap = []
    counter = 0
    root = BnbNode({}, np.zeros((m, m), dtype=bool), -math.inf)
    plunge = root
    status = None
    target = cfg.gap_target

    while True:
        if plunge is not None:
            node, plunge = plunge, None
        elif heap:
            node = heapq.heappop(heap)[2]
        else:
            break
        if node.key >= search.ub - cfg.abs_tol:
            continue
        if search.elapsed() > limit or (cfg.max_nodes is not None and search.nodes >= cfg.max_nodes):
            counter += 1
            heapq.heappush(heap, (node.key, counter, node))
            status = TIME_LIMIT
            break
        node_id = search.nodes
        search.nodes += 1
        bound, children = search.process(node, node_id)
        if children:
            first, *rest = children
            if first.key < search.ub - cfg.abs_tol:
                plunge = first
            for child in rest:
                counter += 1
                heapq.heappush(heap, (child.key, counter, child))

        open_keys = [k for k, _, n in heap[:1]]
        if plunge is not None:
            open_keys.append(plunge.key)
        new_lb = min(open_keys) if open_keys else search.ub
        new_lb = min(new_lb, search.ub)
        if new_lb > search.lb:
            search.lb = new_lb
            search._event("bound", node_id)
        if target > 0 and search.ub - search.lb <= target:
            status = GAP_REACHED
            break

    if status is None:
        status = OPTIMAL
        search.lb = search.ub
    elif status == TIME_LIMIT:
        live = [k for k, _, _ in heap if k < search.ub - cfg.abs_tol]
        search.lb = min(min(live), search.ub) if live else search.ub
        if not live:
            status = OPTIMAL
    search.lb = min(search.lb, search.ub)

    gamma, dag = search.incumbent
    report = SolveReport(
        gamma=gamma, dag=dag, upper_bound=search.ub, lower_bound=search.lb, status=status,
        nodes_explored=search.nodes, oa_cuts=len(search.pool), wall_secs=search.elapsed(),
        gap_target=target, lambda_sq=problem.lambda_sq, events=search.events,
    )
    if cfg.event_log:
        write_event_log(report, cfg.event_log)
    return report


def write_event_log(report, path, timings=True):
    """CSV with one row per incumbent or bound improvement.

    ``timings=False`` drops the wall-clock column so that the file is
    reproducible byte for byte.
    """
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        head = ["node", "event", "upper_bound", "lower_bound"]
        w.writerow((["wall_secs"] if timings else []) + head)
        for t, node, kind, ub, lb in report.events:
            row = [node, kind, repr(ub), repr(lb)]
            w.writerow(([f"{t:.6f}"] if timings else []) + row)
