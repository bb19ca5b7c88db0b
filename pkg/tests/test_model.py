import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dagmip.model import (
    PAPER_WEIGHTS,
    CycleError,
    Dag,
    Dataset,
    EdgeSet,
    FileFormatError,
    SemParameters,
    generate_data,
    moral_graph,
    population_covariance,
    random_dag,
    random_sem,
    read_dataset,
    read_edge_list,
    read_sem,
    rho_interval,
    sample_covariance,
    write_dataset,
    write_edge_list,
    write_sem,
)
from dagmip.numerics import cholesky


def _undirected(E):
    return {frozenset(p) for p in E.pairs}


def test_population_covariance_identity():
    sem = SemParameters(np.zeros((3, 3)), np.ones(3))
    np.testing.assert_allclose(population_covariance(sem), np.eye(3))


def test_population_covariance_single_edge():
    B = np.array([[0.0, 1.0], [0.0, 0.0]])
    sigma = population_covariance(SemParameters(B, np.ones(2)))
    np.testing.assert_allclose(sigma, [[1.0, 1.0], [1.0, 2.0]], atol=1e-12)
    X = generate_data(SemParameters(B, np.ones(2)), 200_000, seed=0)
    assert np.max(np.abs(sample_covariance(X) - sigma)) <= 0.05


def test_population_covariance_chain_is_pd():
    dag = Dag(3, frozenset({(0, 1), (1, 2)}))
    cholesky(population_covariance(random_sem(dag, seed=1)))


def test_generate_identity_covariance():
    X = generate_data(SemParameters(np.zeros((3, 3)), np.ones(3)), 100_000, seed=4)
    assert np.max(np.abs(sample_covariance(X) - np.eye(3))) <= 0.05


def test_generate_weighted_edge():
    sem = SemParameters(np.array([[0.0, 0.6], [0.0, 0.0]]), np.ones(2))
    X = generate_data(sem, 200_000, seed=5)
    assert np.max(np.abs(sample_covariance(X) - population_covariance(sem))) <= 0.05


def test_generate_is_deterministic():
    sem = random_sem(random_dag(5, 5, seed=2), seed=2)
    a = generate_data(sem, 50, seed=9)
    b = generate_data(sem, 50, seed=9)
    assert np.array_equal(a.X, b.X)
    assert not np.array_equal(a.X, generate_data(sem, 50, seed=10).X)


def test_power_noise_exponent_checked():
    sem = random_sem(random_dag(3, 2, seed=0), seed=0)
    generate_data(sem, 10, seed=0, noise="power", exponent=1.5)
    for bad in (0.3, 1.0, 2.5):
        with pytest.raises(ValueError):
            generate_data(sem, 10, seed=0, noise="power", exponent=bad)


def test_random_sem_empty_dag():
    sem = random_sem(Dag(4), seed=0)
    assert not sem.B.any()
    assert set(sem.omega) <= {0.5, 1.0, 1.5}


def test_random_sem_weights_and_rho():
    dag = random_dag(10, 20, seed=3)
    sem = random_sem(dag, PAPER_WEIGHTS, rho_interval(4), seed=3)
    assert set(sem.B[sem.B != 0]) <= set(PAPER_WEIGHTS)
    assert np.count_nonzero(sem.B) == 20
    assert np.all((sem.omega > 0) & (sem.omega < 8))


def test_random_sem_rejects_bad_specs():
    dag = random_dag(3, 2, seed=0)
    with pytest.raises(ValueError):
        random_sem(dag, weight_set=(), seed=0)
    with pytest.raises(ValueError):
        random_sem(dag, variances=(1.0, -1.0), seed=0)
    with pytest.raises(ValueError):
        random_sem(dag, variances=("interval", 2.0, 1.0), seed=0)


def test_sample_covariance_examples(rng):
    np.testing.assert_array_equal(sample_covariance(np.array([[1.0, 0.0], [-1.0, 0.0]])),
                                  [[1.0, 0.0], [0.0, 0.0]])
    np.testing.assert_array_equal(sample_covariance(np.zeros((1, 3))), np.zeros((3, 3)))
    X = rng.standard_normal((50, 4))
    naive = np.zeros((4, 4))
    for i in range(4):
        for j in range(4):
            naive[i, j] = sum(X[r, i] * X[r, j] for r in range(50)) / 50
    np.testing.assert_allclose(sample_covariance(X), naive, atol=1e-12)


def test_moral_graph_examples():
    collider = Dag(3, frozenset({(0, 2), (1, 2)}))
    assert _undirected(moral_graph(collider)) == {frozenset(p) for p in [(0, 2), (1, 2), (0, 1)]}
    assert moral_graph(collider).is_symmetric()
    chain = Dag(3, frozenset({(0, 1), (1, 2)}))
    assert _undirected(moral_graph(chain)) == {frozenset((0, 1)), frozenset((1, 2))}
    diamond = Dag(4, frozenset({(0, 1), (0, 2), (1, 3), (2, 3)}))
    assert _undirected(moral_graph(diamond)) == {frozenset(p) for p in
                                                 [(0, 1), (0, 2), (1, 3), (2, 3), (1, 2)]}


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 8), st.data())
def test_back_edge_on_chain_rejected(m, data):
    perm = data.draw(st.permutations(range(m)))
    chain = {(perm[i], perm[i + 1]) for i in range(m - 1)}
    Dag(m, frozenset(chain))
    i = data.draw(st.integers(0, m - 2))
    j = data.draw(st.integers(i + 1, m - 1))
    with pytest.raises(CycleError):
        Dag(m, frozenset(chain | {(perm[j], perm[i])}))


def test_dag_rejects_self_loop_and_range():
    with pytest.raises(ValueError):
        Dag(2, frozenset({(0, 0)}))
    with pytest.raises(ValueError):
        Dag(2, frozenset({(0, 2)}))


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 12), st.integers(0, 10**6))
def test_random_dag_edge_count(m, seed):
    k = min(m * (m - 1) // 2, m)
    dag = random_dag(m, k, seed=seed)
    assert len(dag) == k


def test_edge_list_roundtrip(tmp_path):
    dag = random_dag(6, 7, seed=1)
    write_edge_list(tmp_path / "g.txt", dag.m, dag.edges)
    assert read_edge_list(tmp_path / "g.txt") == dag
    E = EdgeSet(3, frozenset({(0, 1), (1, 0)}))
    write_edge_list(tmp_path / "e.txt", 3, E.pairs)
    assert read_edge_list(tmp_path / "e.txt", acyclic=False) == E


@pytest.mark.parametrize("text, line", [
    ("3\n0 1\n1 x\n", 3),
    ("3\n0 1 2\n", 2),
    ("three\n", 1),
    ("3\n0 5\n", 2),
    ("", 1),
])
def test_edge_list_errors_have_line_numbers(tmp_path, text, line):
    p = tmp_path / "bad.txt"
    p.write_text(text)
    with pytest.raises(FileFormatError) as exc:
        read_edge_list(p)
    assert f"bad.txt:{line}:" in str(exc.value)


def test_edge_list_cycle_rejected(tmp_path):
    p = tmp_path / "cyc.txt"
    p.write_text("3\n0 1\n1 2\n2 0\n")
    with pytest.raises(FileFormatError):
        read_edge_list(p)
    assert len(read_edge_list(p, acyclic=False)) == 3


def test_dataset_roundtrip(tmp_path):
    X = generate_data(random_sem(random_dag(4, 3, seed=0), seed=0), 20, seed=0)
    write_dataset(tmp_path / "d.csv", X)
    assert np.array_equal(read_dataset(tmp_path / "d.csv").X, X.X)


def test_dataset_errors(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("1,2\n3,4,5\n")
    with pytest.raises(FileFormatError, match="d.csv:2:"):
        read_dataset(p)
    p.write_text("1,2\n3,abc\n")
    with pytest.raises(FileFormatError, match="d.csv:2:"):
        read_dataset(p)


def test_sem_roundtrip(tmp_path):
    sem = random_sem(random_dag(5, 5, seed=1), seed=1)
    write_sem(tmp_path / "s.json", sem)
    back = read_sem(tmp_path / "s.json")
    assert np.array_equal(back.B, sem.B) and np.array_equal(back.omega, sem.omega)


def test_standardized():
    X = generate_data(random_sem(random_dag(4, 3, seed=0), seed=0), 200, seed=0)
    Z = X.standardized()
    np.testing.assert_allclose(np.diag(sample_covariance(Z)), 1.0)
    assert isinstance(Z, Dataset)
