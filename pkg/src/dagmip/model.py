"""Graphs, linear Gaussian structural equation models and synthetic data.

Node indices are 0-based throughout. A directed pair ``(j, k)`` means an
edge ``j -> k`` (``j`` is a parent of ``k``), which matches the layout of the
connectivity matrix where ``B[j, k]`` is the weight of ``j -> k`` and each
variable satisfies ``X_k = sum_j B[j, k] X_j + eps_k``.
"""

from dataclasses import dataclass, field
import heapq
import itertools
import json
import math

import numpy as np

__all__ = [
    "CycleError",
    "Dag",
    "Cpdag",
    "EdgeSet",
    "SemParameters",
    "Dataset",
    "FileFormatError",
    "topological_order",
    "random_dag",
    "random_sem",
    "rho_interval",
    "population_covariance",
    "generate_data",
    "sample_covariance",
    "moral_graph",
    "read_edge_list",
    "write_edge_list",
    "read_dataset",
    "write_dataset",
    "read_sem",
    "write_sem",
    "PAPER_WEIGHTS",
    "PAPER_VARIANCES",
]

PAPER_WEIGHTS = (-0.8, -0.6, 0.6, 0.8)
PAPER_VARIANCES = (0.5, 1.0, 1.5)


class CycleError(ValueError):
    """An edge list that was required to be acyclic contains a cycle."""


class FileFormatError(ValueError):
    """Malformed graph or dataset file; carries the offending line number."""

    def __init__(self, path, lineno, message):
        self.path = str(path)
        self.lineno = lineno
        super().__init__(f"{path}:{lineno}: {message}")


def _check_pairs(m, pairs):
    out = set()
    for j, k in pairs:
        j, k = int(j), int(k)
        if not (0 <= j < m and 0 <= k < m):
            raise ValueError(f"edge ({j}, {k}) out of range for m={m}")
        if j == k:
            raise ValueError(f"self-loop on node {j}")
        out.add((j, k))
    return frozenset(out)


def topological_order(m, pairs):
    """Kahn's algorithm. Returns a list of nodes or ``None`` if cyclic.

    Ties are broken by smallest node index, so the order is deterministic.
    """
    indeg = [0] * m
    children = [[] for _ in range(m)]
    for j, k in pairs:
        indeg[k] += 1
        children[j].append(k)
    ready = [v for v in range(m) if indeg[v] == 0]
    order = []
    heapq.heapify(ready)
    while ready:
        v = heapq.heappop(ready)
        order.append(v)
        for c in children[v]:
            indeg[c] -= 1
            if indeg[c] == 0:
                heapq.heappush(ready, c)
    return order if len(order) == m else None


@dataclass(frozen=True)
class EdgeSet:
    """Set of directed pairs over ``m`` nodes, cycles allowed (superstructure)."""

    m: int
    pairs: frozenset = frozenset()

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("m must be positive")
        object.__setattr__(self, "pairs", _check_pairs(self.m, self.pairs))

    @classmethod
    def full(cls, m):
        return cls(m, frozenset((j, k) for j in range(m) for k in range(m) if j != k))

    @classmethod
    def from_adjacency(cls, A):
        A = np.asarray(A, dtype=bool)
        return cls(A.shape[0], frozenset(zip(*map(lambda a: a.tolist(), np.nonzero(A)))))

    @property
    def adjacency(self):
        A = np.zeros((self.m, self.m), dtype=bool)
        for j, k in self.pairs:
            A[j, k] = True
        return A

    def symmetrized(self):
        return EdgeSet(self.m, self.pairs | {(k, j) for j, k in self.pairs})

    def is_symmetric(self):
        return all((k, j) in self.pairs for j, k in self.pairs)

    def sorted_pairs(self):
        return sorted(self.pairs)

    def __contains__(self, pair):
        return tuple(pair) in self.pairs

    def __len__(self):
        return len(self.pairs)

    def __iter__(self):
        return iter(self.sorted_pairs())


@dataclass(frozen=True)
class Dag:
    """Directed acyclic graph on nodes ``0..m-1``.

    Construction fails with :class:`CycleError` if the edges contain a cycle.
    """

    m: int
    edges: frozenset = frozenset()

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("m must be positive")
        edges = _check_pairs(self.m, self.edges)
        if topological_order(self.m, edges) is None:
            raise CycleError(f"edge set is cyclic: {sorted(edges)}")
        object.__setattr__(self, "edges", edges)

    @classmethod
    def from_adjacency(cls, A):
        A = np.asarray(A) != 0
        np.fill_diagonal(A, False)
        return cls(A.shape[0], frozenset(zip(*map(lambda a: a.tolist(), np.nonzero(A)))))

    @property
    def adjacency(self):
        A = np.zeros((self.m, self.m), dtype=bool)
        for j, k in self.edges:
            A[j, k] = True
        return A

    def parents(self, k):
        return sorted(j for j, c in self.edges if c == k)

    def children(self, j):
        return sorted(k for p, k in self.edges if p == j)

    def topological_order(self):
        return topological_order(self.m, self.edges)

    def skeleton(self):
        """Undirected pairs ``(min, max)``."""
        return frozenset((min(j, k), max(j, k)) for j, k in self.edges)

    def v_structures(self):
        """Triples ``(i, k, j)`` with ``i -> k <- j``, ``i < j``, ``i`` and ``j`` non-adjacent."""
        skel = self.skeleton()
        out = set()
        for k in range(self.m):
            pa = self.parents(k)
            for i, j in itertools.combinations(pa, 2):
                if (i, j) not in skel:
                    out.add((i, k, j))
        return frozenset(out)

    def sorted_edges(self):
        return sorted(self.edges)

    def __len__(self):
        return len(self.edges)


@dataclass(frozen=True, eq=False)
class Cpdag:
    """Completed partially directed graph as a boolean adjacency matrix.

    A directed edge ``i -> j`` sets only ``adjacency[i, j]``; an undirected
    edge ``i - j`` sets both entries.
    """

    adjacency: np.ndarray

    def __post_init__(self):
        A = np.array(self.adjacency, dtype=bool)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError("adjacency must be square")
        if A.diagonal().any():
            raise ValueError("adjacency must have an empty diagonal")
        directed = A & ~A.T
        if topological_order(A.shape[0], zip(*np.nonzero(directed))) is None:
            raise CycleError("directed part of the CPDAG is cyclic")
        A.setflags(write=False)
        object.__setattr__(self, "adjacency", A)

    @property
    def m(self):
        return self.adjacency.shape[0]

    def directed_edges(self):
        A = self.adjacency
        return sorted((int(i), int(j)) for i, j in zip(*np.nonzero(A & ~A.T)))

    def undirected_edges(self):
        A = self.adjacency
        return sorted((int(i), int(j)) for i, j in zip(*np.nonzero(A & A.T)) if i < j)

    def __eq__(self, other):
        return isinstance(other, Cpdag) and np.array_equal(self.adjacency, other.adjacency)

    def __hash__(self):
        return hash(self.adjacency.tobytes())


@dataclass(frozen=True, eq=False)
class SemParameters:
    """Connectivity matrix ``B`` and noise variances ``omega`` (diagonal of Omega)."""

    B: np.ndarray
    omega: np.ndarray

    def __post_init__(self):
        B = np.array(self.B, dtype=float)
        omega = np.array(self.omega, dtype=float).ravel()
        m = B.shape[0]
        if B.shape != (m, m) or omega.shape != (m,):
            raise ValueError("B must be m x m and omega length m")
        if np.any(np.diag(B) != 0):
            raise ValueError("B must have a zero diagonal")
        if np.any(~(omega > 0)):
            raise ValueError("noise variances must be positive")
        self.dag  # raises CycleError on cyclic support
        B.setflags(write=False)
        omega.setflags(write=False)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "omega", omega)

    @property
    def m(self):
        return self.B.shape[0]

    @property
    def dag(self):
        return Dag.from_adjacency(self.B != 0)


@dataclass(frozen=True, eq=False)
class Dataset:
    """``n`` samples of ``m`` variables, rows are samples."""

    X: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        X = np.array(self.X, dtype=float)
        if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
            raise ValueError(f"dataset must be a non-empty 2-D array, got shape {X.shape}")
        if not np.all(np.isfinite(X)):
            raise ValueError("dataset contains non-finite entries")
        X.setflags(write=False)
        object.__setattr__(self, "X", X)

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def m(self):
        return self.X.shape[1]

    def standardized(self):
        """Columns scaled to unit second moment, matching :func:`sample_covariance`."""
        sd = np.sqrt(np.mean(self.X ** 2, axis=0))
        sd[sd == 0] = 1.0
        return Dataset(self.X / sd, dict(self.meta, standardized=True))


def random_dag(m, n_edges, seed):
    """Uniform random DAG with exactly ``n_edges`` edges.

    A random node ordering is drawn first, then ``n_edges`` of the
    ``m(m-1)/2`` order-compatible pairs are picked without replacement.
    """
    max_edges = m * (m - 1) // 2
    if not 0 <= n_edges <= max_edges:
        raise ValueError(f"n_edges must lie in [0, {max_edges}]")
    rng = np.random.default_rng(seed)
    order = rng.permutation(m)
    slots = [(order[a], order[b]) for a in range(m) for b in range(a + 1, m)]
    chosen = rng.choice(len(slots), size=n_edges, replace=False)
    return Dag(m, frozenset((int(slots[c][0]), int(slots[c][1])) for c in chosen))


def random_sem(dag, weight_set=PAPER_WEIGHTS, variances=PAPER_VARIANCES, seed=None):
    """Random SEM on ``dag``.

    Parameters
    ----------
    dag : Dag
    weight_set : sequence of float
        Each edge weight is drawn uniformly from this set (zero not allowed).
    variances : sequence of float or ("interval", lo, hi)
        Either a finite set of noise variances to draw from, or a tuple
        ``("interval", lo, hi)`` for uniform draws on ``[lo, hi]``.
    seed : int
    """
    weights = np.asarray(list(weight_set), dtype=float)
    if weights.size == 0:
        raise ValueError("weight set must be non-empty")
    if np.any(weights == 0):
        raise ValueError("weight set must not contain zero")
    rng = np.random.default_rng(seed)
    m = dag.m
    B = np.zeros((m, m))
    for j, k in dag.sorted_edges():
        B[j, k] = weights[rng.integers(weights.size)]
    if isinstance(variances, tuple) and len(variances) == 3 and variances[0] == "interval":
        lo, hi = float(variances[1]), float(variances[2])
        if not (lo >= 0 and hi > lo):
            raise ValueError("variance interval must satisfy 0 <= lo < hi")
        omega = rng.uniform(lo, hi, size=m)
        # the open lower end can only be hit with probability zero, but a
        # zero variance would make the model degenerate
        omega = np.maximum(omega, np.nextafter(0.0, 1.0)) if lo == 0 else omega
    else:
        vals = np.asarray(list(variances), dtype=float)
        if vals.size == 0 or np.any(vals <= 0):
            raise ValueError("variance set must be non-empty and positive")
        omega = vals[rng.integers(vals.size, size=m)]
    return SemParameters(B, omega)


def rho_interval(rho):
    """Variance specification ``[4 - rho, 4 + rho]`` for heteroscedasticity sweeps."""
    return ("interval", 4.0 - rho, 4.0 + rho)


def population_covariance(params):
    """``(I - B)^{-T} Omega (I - B)^{-1}``."""
    m = params.m
    inv = np.linalg.inv(np.eye(m) - params.B)
    sigma = inv.T @ np.diag(params.omega) @ inv
    return 0.5 * (sigma + sigma.T)


def _check_exponent(exponent):
    if not (0.5 <= exponent <= 0.8 or 1.2 <= exponent <= 2.0):
        raise ValueError("power-noise exponent must lie in [0.5, 0.8] or [1.2, 2.0]")


def generate_data(params, n, seed, noise="gaussian", exponent=None):
    """Draw ``n`` samples from the SEM.

    Each noise column gets its own generator, spawned from ``seed`` via
    :class:`numpy.random.SeedSequence` (column ``j`` uses child ``j``), so a
    column's noise does not depend on the other columns.

    ``noise="power"`` draws Gaussian noise and maps it through
    ``sign(e) * |e| ** exponent``.
    """
    if n < 1:
        raise ValueError("n must be positive")
    if noise not in ("gaussian", "power"):
        raise ValueError(f"unknown noise kind {noise!r}")
    if noise == "power":
        if exponent is None:
            raise ValueError("power noise needs an exponent")
        _check_exponent(exponent)
    m = params.m
    children = np.random.SeedSequence(seed).spawn(m)
    eps = np.empty((n, m))
    for j in range(m):
        rng = np.random.Generator(np.random.PCG64(children[j]))
        e = rng.standard_normal(n) * math.sqrt(params.omega[j])
        if noise == "power":
            e = np.sign(e) * np.abs(e) ** exponent
        eps[:, j] = e
    X = np.zeros((n, m))
    B = params.B
    for k in params.dag.topological_order():
        X[:, k] = X @ B[:, k] + eps[:, k]
    return Dataset(X, {"seed": seed, "noise": noise, "exponent": exponent})


def sample_covariance(data):
    """``X^T X / n`` without re-centering (the model is centered)."""
    X = data.X if isinstance(data, Dataset) else np.asarray(data, dtype=float)
    S = X.T @ X / X.shape[0]
    return 0.5 * (S + S.T)


def moral_graph(dag):
    """Symmetric edge set of the moral graph of ``dag``."""
    pairs = set()
    for j, k in dag.edges:
        pairs.add((j, k))
        pairs.add((k, j))
    for k in range(dag.m):
        for a, b in itertools.combinations(dag.parents(k), 2):
            pairs.add((a, b))
            pairs.add((b, a))
    return EdgeSet(dag.m, frozenset(pairs))


# --- file formats -----------------------------------------------------------

def write_edge_list(path, m, pairs):
    lines = [str(m)] + [f"{j} {k}" for j, k in sorted(pairs)]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_edge_list(path, acyclic=True):
    """Read ``m`` on the first line, then one ``parent child`` pair per line.

    Blank lines and ``#`` comments are ignored. Returns a :class:`Dag` when
    ``acyclic`` is true, otherwise an :class:`EdgeSet`.
    """
    m = None
    pairs = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if m is None:
                if len(parts) != 1 or not parts[0].isdigit() or int(parts[0]) < 1:
                    raise FileFormatError(path, lineno, f"expected node count, got {line!r}")
                m = int(parts[0])
                continue
            if len(parts) != 2:
                raise FileFormatError(path, lineno, f"expected 'parent child', got {line!r}")
            try:
                j, k = int(parts[0]), int(parts[1])
            except ValueError:
                raise FileFormatError(path, lineno, f"non-integer node in {line!r}") from None
            if not (0 <= j < m and 0 <= k < m) or j == k:
                raise FileFormatError(path, lineno, f"invalid edge {j} {k} for m={m}")
            pairs.append((j, k))
    if m is None:
        raise FileFormatError(path, 1, "empty graph file")
    if acyclic:
        try:
            return Dag(m, frozenset(pairs))
        except CycleError as exc:
            raise FileFormatError(path, 0, str(exc)) from None
    return EdgeSet(m, frozenset(pairs))


def write_dataset(path, data):
    np.savetxt(path, data.X, delimiter=",", fmt="%.17g")


def read_dataset(path):
    """Headerless CSV, one sample per row."""
    rows = []
    width = None
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            try:
                row = [float(v) for v in line.split(",")]
            except ValueError:
                raise FileFormatError(path, lineno, "non-numeric entry") from None
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise FileFormatError(path, lineno, f"expected {width} columns, got {len(row)}")
            if not all(math.isfinite(v) for v in row):
                raise FileFormatError(path, lineno, "non-finite entry")
            rows.append(row)
    if not rows:
        raise FileFormatError(path, 1, "empty dataset")
    return Dataset(np.array(rows))


def write_sem(path, params):
    doc = {"m": params.m, "B": params.B.tolist(), "omega": params.omega.tolist()}
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2)


def read_sem(path):
    with open(path) as fh:
        doc = json.load(fh)
    return SemParameters(np.array(doc["B"]), np.array(doc["omega"]))
