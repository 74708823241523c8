import numpy as np
import pytest

from narfield.errors import DomainError, ParseError
from narfield.network import (Network, check_gram_diagonal_decay, check_network_decay, companion_matrix,
                              expected_edge_count, generate_power_decay_network, load_edge_list,
                              matrix_powers, row_normalized_weights, spectral_radius)


def cycle(N):
    return Network(N, frozenset((i, i % N + 1) for i in range(1, N + 1)))


def banded(N, width=1):
    return Network(N, frozenset((i, j) for i in range(1, N + 1) for j in range(1, N + 1)
                                if 0 < abs(i - j) <= width))


def test_load_edge_list_basic():
    net = load_edge_list("1 2\n2 1\n", N=2)
    assert net.N == 2 and net.edges == {(1, 2), (2, 1)}
    assert len(load_edge_list("1 2\n1 2\n").edges) == 1


def test_load_edge_list_comments_header_and_bytes():
    net = load_edge_list(b"# nodes 4\n\n# a comment\n1 3\n")
    assert net.N == 4 and net.edges == {(1, 3)}


@pytest.mark.parametrize("text,line", [("1 1\n", 1), ("1 2\n2 x\n", 2), ("1 2 3\n", 1), ("1 2\n\n3 1\n", 3)])
def test_load_edge_list_errors_carry_line(text, line):
    with pytest.raises(ParseError) as info:
        load_edge_list(text, N=2)
    assert info.value.line == line
    assert f"line {line}" in str(info.value)


def test_network_rejects_self_loops_and_range():
    with pytest.raises(DomainError):
        Network(3, frozenset({(2, 2)}))
    with pytest.raises(DomainError):
        Network(3, frozenset({(1, 4)}))


def test_row_normalized_weights():
    net = Network(4, frozenset({(1, 2), (1, 4), (3, 1)}))
    w = row_normalized_weights(net).to_dense()
    np.testing.assert_array_equal(w[0], [0, 0.5, 0, 0.5])
    np.testing.assert_array_equal(w[1], [0, 0, 0, 0])
    np.testing.assert_array_equal(w[2], [1, 0, 0, 0])
    assert np.all(np.diag(w) == 0)


def test_companion_matrix_examples():
    w = row_normalized_weights(cycle(5))
    np.testing.assert_array_equal(companion_matrix(w, 0.0, 0.5).to_dense(), 0.5 * np.eye(5))
    g = companion_matrix(row_normalized_weights(banded(6)), 0.3, 0.4)
    assert np.max(np.abs(g.to_dense()).sum(axis=1)) <= 0.7 + 1e-15
    with pytest.raises(DomainError, match="stationarity"):
        companion_matrix(w, 0.6, 0.5)


def test_spectral_radius_examples():
    w = row_normalized_weights(cycle(3))
    assert spectral_radius(companion_matrix(w, 0.0, 0.5)).value == pytest.approx(0.5, abs=1e-12)
    g = companion_matrix(w, 0.5, 0.2)
    dense = np.max(np.abs(np.linalg.eigvals(g.to_dense())))
    res = spectral_radius(g)
    assert res.converged and abs(res.value - dense) < 1e-8
    g2 = companion_matrix(row_normalized_weights(banded(12, 2)), 0.3, 0.4)
    assert spectral_radius(g2).value <= 0.7 + 1e-12


def test_spectral_radius_non_convergence_flag():
    # a start vector of ones is already the Perron vector of row-stochastic |G|,
    # so use a network with isolated nodes
    net = Network(30, frozenset({(1, 2), (2, 3), (3, 1), (4, 1)}))
    res = spectral_radius(companion_matrix(row_normalized_weights(net), 0.5, 0.2), max_iter=2)
    assert not res.converged and res.iterations == 2


def test_matrix_powers_match_dense():
    g = companion_matrix(row_normalized_weights(generate_power_decay_network(25, 1.0, 4, 3)), 0.4, 0.3)
    dense = g.to_dense()
    acc = np.eye(25)
    for k, pk in enumerate(matrix_powers(g, 8), start=1):
        acc = acc @ dense
        np.testing.assert_allclose(pk.toarray(), acc, atol=1e-10, rtol=0)


def test_network_decay_diagonal_passes():
    g = companion_matrix(row_normalized_weights(banded(10)), 0.0, 0.5)
    rep = check_network_decay(g, alpha=7.0, k_max=5)
    assert rep.passed and rep.constant == 0.0


def test_network_decay_banded_gives_finite_constant():
    g = companion_matrix(row_normalized_weights(banded(20)), 0.3, 0.3)
    rep = check_network_decay(g, alpha=2.0, k_max=6)
    dense = g.to_dense()
    # independent evaluation of the constant at the reported rate
    c1, acc = 0.0, np.eye(20)
    i, j = np.indices((20, 20))
    off = i != j
    for k in range(1, 7):
        acc = acc @ dense
        c1 = max(c1, np.max(np.abs(acc[off]) * np.abs(j - i)[off] ** 4.0 / rep.rate**k))
    assert rep.passed and np.isfinite(rep.constant)
    assert rep.constant == pytest.approx(c1, rel=1e-12)
    k, bi, bj = rep.binding
    assert 1 <= k <= 6 and bi != bj


def test_network_decay_dense_network_fails():
    N = 20
    dense = Network(N, frozenset((i, j) for i in range(1, N + 1) for j in range(1, N + 1) if i != j))
    rep = check_network_decay(companion_matrix(row_normalized_weights(dense), 0.5, 0.3), alpha=5.0, k_max=4)
    assert not rep.passed and rep.constant > 1e4


def test_gram_diagonal_examples():
    g = companion_matrix(row_normalized_weights(banded(6)), 0.0, 0.5)
    rep = check_gram_diagonal_decay(g, 6)
    np.testing.assert_allclose(rep.details["max_diagonal"], 0.25 ** np.arange(1, 7), rtol=1e-13)
    assert rep.rate == pytest.approx(0.25, rel=1e-12) and rep.passed
    single = check_gram_diagonal_decay(g, 1)
    assert single.rate == 0.25 and single.constant == 1.0


def test_gram_diagonal_row_stochastic_envelope():
    g = companion_matrix(row_normalized_weights(generate_power_decay_network(10, 1.0, 3, 1)), 0.4, 0.3)
    rep = check_gram_diagonal_decay(g, 8)
    dense = g.to_dense()
    gg = dense @ dense.T
    acc = np.eye(10)
    for k in range(1, 9):
        acc = acc @ gg
        assert np.max(np.diag(acc)) == pytest.approx(rep.details["max_diagonal"][k - 1], rel=1e-10)
        assert np.max(np.diag(acc)) <= 0.7 ** (2 * k) + 1e-15
    assert rep.passed


def test_generator_band_one_and_determinism():
    net = generate_power_decay_network(30, 2.0, 1, 5)
    w = row_normalized_weights(net).matrix
    assert max(np.diff(w.indptr)) <= 2
    assert net == generate_power_decay_network(30, 2.0, 1, 5)
    assert np.all(net.out_degrees() >= 1)


def test_generator_edge_count_matches_expectation():
    mean, var = expected_edge_count(50, 10.0, 5)
    counts = [len(generate_power_decay_network(50, 10.0, 5, seed).edges) for seed in range(100)]
    assert abs(np.mean(counts) - mean) <= 4 * np.sqrt(var / 100)
    assert all(abs(c - mean) <= 4 * np.sqrt(var) + 1 for c in counts)
