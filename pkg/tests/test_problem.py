"""Cost models: quadratic forms, spin mapping, reordering, file formats."""

import math

import numpy as np
import pytest

from conftest import exact_minimum
from hwvqe.ansatz import DickeSpec
from hwvqe.partition import bitstrings_of_weight
from hwvqe.problem import (
    BisectionProblem,
    PortfolioProblem,
    ReducedBisection,
    batch_evaluator,
    cost_binary,
    cost_binary_batch,
    cost_bisection,
    cost_bisection_batch,
    dicke_spec_for,
    ingest_csv,
    load_graph,
    load_portfolio,
    reorder,
    reorder_bisection,
    reverse_assets,
    reverse_nodes,
    reverse_problem,
    save_graph,
    save_portfolio,
    synth_assets,
    synth_graph,
    synth_price_paths,
    to_ising,
)


def _random_portfolio(rng, n=8, q=0.7, budget=None):
    M = rng.normal(size=(n, n))
    A = M @ M.T / n + np.eye(n) * 0.1
    mu = rng.normal(0.01, 0.005, size=n)
    return PortfolioProblem(n=n, q=q, A=A, mu=mu, budget=budget or n // 2)


def _bits_vector(x, n):
    return np.array([(x >> i) & 1 for i in range(n)], dtype=float)


def test_cost_binary_matches_quadratic_form(rng):
    p = _random_portfolio(rng)
    for bits in bitstrings_of_weight(p.n, p.budget)[:40]:
        x = _bits_vector(int(bits), p.n)
        expected = p.q * x @ p.A @ x - p.mu @ x
        assert abs(cost_binary(p, int(bits)) - expected) < 1e-12


def test_cost_binary_modes(rng):
    p = _random_portfolio(rng)
    bits = int(bitstrings_of_weight(p.n, p.budget)[7])
    x = _bits_vector(bits, p.n)
    # "covariance" is the bare quadratic (no risk weight), "returns" is -mu.x
    assert abs(cost_binary(p, bits, mode="covariance") - x @ p.A @ x) < 1e-12
    assert abs(cost_binary(p, bits, mode="returns") - (-p.mu @ x)) < 1e-12
    full = cost_binary(p, bits, mode="full")
    assert abs(
        full
        - p.q * cost_binary(p, bits, mode="covariance")
        - cost_binary(p, bits, mode="returns")
    ) < 1e-12
    with pytest.raises(ValueError):
        cost_binary(p, bits, mode="mixed")


def test_cost_binary_rejects_wrong_weight(rng):
    p = _random_portfolio(rng)
    with pytest.raises(ValueError):
        cost_binary(p, 0b1)  # weight 1 != budget 4


def test_cost_binary_batch_equals_loop(rng):
    p = _random_portfolio(rng)
    states = bitstrings_of_weight(p.n, p.budget).astype(np.int64)
    batch = cost_binary_batch(p, states)
    loop = np.array([cost_binary(p, int(b)) for b in states])
    assert np.allclose(batch, loop, atol=1e-12)


def test_spin_mapping_matches_binary_cost(rng):
    # checked over every feasible state for several seeded instances
    for seed in range(50):
        local = np.random.default_rng(seed)
        p = _random_portfolio(local, n=8)
        ising = to_ising(p)
        for bits in bitstrings_of_weight(p.n, p.budget):
            x = _bits_vector(int(bits), p.n)
            z = 1.0 - 2.0 * x  # x_i = (1 - z_i) / 2
            spin_value = ising.energy_spin(z) + ising.constant
            assert abs(spin_value - cost_binary(p, int(bits))) < 1e-9


def test_portfolio_validation():
    A = np.eye(4)
    mu = np.zeros(4)
    with pytest.raises(ValueError):
        PortfolioProblem(n=4, q=-1.0, A=A, mu=mu, budget=2)
    with pytest.raises(ValueError):
        PortfolioProblem(n=4, q=0.5, A=A, mu=mu, budget=5)
    bad = A.copy()
    bad[0, 1] = 0.5  # asymmetric
    with pytest.raises(ValueError):
        PortfolioProblem(n=4, q=0.5, A=bad, mu=mu, budget=2)


def test_reorder_by_return_sorts_mu_ascending(rng):
    p = _random_portfolio(rng, n=10)
    q, sigma = reorder(p, "by-return")
    assert np.all(np.diff(q.mu) >= 0)
    assert sorted(sigma) == list(range(10))
    # cost is invariant under the permutation of both problem and state
    bits = int(bitstrings_of_weight(10, 5)[123])
    permuted = 0
    for new_pos, old_pos in enumerate(sigma):
        if (bits >> old_pos) & 1:
            permuted |= 1 << new_pos
    assert abs(cost_binary(q, permuted) - cost_binary(p, bits)) < 1e-12


def test_reorder_by_variance_sorts_diagonal(rng):
    p = _random_portfolio(rng, n=10)
    q, _ = reorder(p, "by-variance")
    assert np.all(np.diff(np.diag(q.A)) >= 0)
    with pytest.raises(ValueError):
        reorder(p, "by-magic")


def test_reverse_assets_mirrors_cost(rng):
    p = _random_portfolio(rng, n=8)
    r, _ = reverse_assets(p)
    for bits in bitstrings_of_weight(8, 4)[:30]:
        mirrored = int(format(int(bits), "08b")[::-1], 2)
        assert abs(cost_binary(r, mirrored) - cost_binary(p, int(bits))) < 1e-12


def test_bisection_cost_tiny_graph_oracle():
    # path graph 0-1-2-3 with weights 1, 2, 3; cut of b = sum of crossing edges
    W = np.zeros((4, 4))
    W[0, 1] = W[1, 0] = 1.0
    W[1, 2] = W[2, 1] = 2.0
    W[2, 3] = W[3, 2] = 3.0
    b = BisectionProblem(n=4, weights=W, offset=0.0)
    cuts = {}
    for bits in bitstrings_of_weight(4, 2):
        side = _bits_vector(int(bits), 4)
        cut = sum(
            W[i, j]
            for i in range(4)
            for j in range(i + 1, 4)
            if side[i] != side[j]
        )
        cuts[int(bits)] = cut
        assert abs(cost_bisection(b, int(bits)) - cut) < 1e-12
    # balanced min-cut of the path splits the lightest edge
    assert min(cuts, key=cuts.get) == 0b0011  # nodes {0,1} vs {2,3}: cut = 2


def test_bisection_batch_and_offset(rng):
    g = synth_graph(8, 0.6, seed_graph=4, seed_weights=5, offset=-3.0)
    states = bitstrings_of_weight(8, 4).astype(np.int64)
    batch = cost_bisection_batch(g, states)
    loop = np.array([cost_bisection(g, int(b)) for b in states])
    assert np.allclose(batch, loop, atol=1e-12)
    g0 = synth_graph(8, 0.6, seed_graph=4, seed_weights=5, offset=0.0)
    assert np.allclose(batch, cost_bisection_batch(g0, states) - 3.0, atol=1e-12)


def test_bisection_validation():
    with pytest.raises(ValueError):
        BisectionProblem(n=5, weights=np.zeros((5, 5)), offset=0.0)
    W = np.zeros((4, 4))
    W[0, 0] = 1.0
    with pytest.raises(ValueError):
        BisectionProblem(n=4, weights=W, offset=0.0)


def test_reorder_bisection_sorts_weighted_degree():
    g = synth_graph(10, 0.5, seed_graph=1, seed_weights=2)
    r, sigma = reorder_bisection(g)
    assert np.all(np.diff(r.weighted_degree) >= 0)
    assert sorted(sigma) == list(range(10))


def test_reverse_nodes_mirrors_cost():
    g = synth_graph(6, 0.7, seed_graph=9, seed_weights=9)
    r, _ = reverse_nodes(g)
    for bits in bitstrings_of_weight(6, 3):
        mirrored = int(format(int(bits), "06b")[::-1], 2)
        assert abs(cost_bisection(r, mirrored) - cost_bisection(g, int(bits))) < 1e-12


def test_reduced_bisection_equals_pinned_full_cost():
    g = synth_graph(8, 0.6, seed_graph=11, seed_weights=12, fixed_top_bit=True)
    reduced = ReducedBisection(g)
    assert reduced.n == 7 and reduced.budget == 3
    states = bitstrings_of_weight(7, 3).astype(np.int64)
    reduced_costs = reduced.cost_batch(states)
    for bits, value in zip(states, reduced_costs):
        full_bits = reduced.lift(int(bits))
        assert full_bits >> 7 == 1
        assert abs(value - cost_bisection(g, full_bits)) < 1e-12


def test_dicke_spec_for_all_problem_shapes():
    p = synth_assets(8, 1, budget=3)
    assert dicke_spec_for(p) == DickeSpec(8, 3)
    g = synth_graph(8, 0.5, 1, 2)
    assert dicke_spec_for(g) == DickeSpec(8, 4)
    gf = synth_graph(8, 0.5, 1, 2, fixed_top_bit=True)
    assert dicke_spec_for(ReducedBisection(gf)) == DickeSpec(7, 3)


def test_batch_evaluator_mode_applies_to_portfolio_only():
    g = synth_graph(6, 0.5, 1, 2)
    with pytest.raises(ValueError):
        batch_evaluator(g, "returns")
    p = synth_assets(6, 1)
    states = bitstrings_of_weight(6, 3).astype(np.int64)
    assert np.allclose(
        batch_evaluator(p, "returns")(states),
        cost_binary_batch(p, states, mode="returns"),
        atol=1e-12,
    )


def test_reverse_problem_dispatch(rng):
    p = _random_portfolio(rng)
    assert isinstance(reverse_problem(p)[0], PortfolioProblem)
    g = synth_graph(6, 0.5, 1, 2)
    assert isinstance(reverse_problem(g)[0], BisectionProblem)


def test_synth_assets_deterministic_and_valid():
    a = synth_assets(10, 77)
    b = synth_assets(10, 77)
    assert np.array_equal(a.A, b.A) and np.array_equal(a.mu, b.mu)
    assert a.budget == 5 and a.q == 0.9
    eigenvalues = np.linalg.eigvalsh(a.A)
    assert eigenvalues.min() > 0  # sample covariance of rich paths is PD
    c = synth_assets(10, 78)
    assert not np.array_equal(a.mu, c.mu)


def test_synth_price_paths_feed_the_same_statistics():
    prices = synth_price_paths(6, 31)
    assert prices.shape == (253, 6)
    assert np.array_equal(prices[0], np.ones(6))
    returns = prices[1:] / prices[:-1] - 1.0
    p = synth_assets(6, 31)
    assert np.allclose(p.mu, returns.mean(axis=0), atol=1e-15)
    assert np.allclose(p.A, np.cov(returns, rowvar=False, ddof=1), atol=1e-15)


def test_synth_graph_shape_and_density():
    g = synth_graph(20, 0.3, seed_graph=5, seed_weights=6)
    W = g.weights
    assert np.allclose(W, W.T)
    assert np.all(np.diag(W) == 0)
    edges = np.count_nonzero(np.triu(W, 1))
    assert 30 <= edges <= 85  # Binomial(190, 0.3), generous window
    assert np.array_equal(W, synth_graph(20, 0.3, 5, 6).weights)


def test_ingest_csv_happy_path(tmp_path):
    f = tmp_path / "prices.csv"
    f.write_text(
        "date,asset_0,asset_1\n"
        "2024-01-01,1.0,2.0\n"
        "2024-01-02,1.1,1.9\n"
        "2024-01-03,1.2,2.1\n"
        "2024-01-04,1.15,2.2\n"
    )
    p = ingest_csv(f, q=0.5, budget=1)
    assert p.n == 2 and p.budget == 1 and p.q == 0.5
    prices = np.array([[1.0, 2.0], [1.1, 1.9], [1.2, 2.1], [1.15, 2.2]])
    returns = prices[1:] / prices[:-1] - 1.0
    assert np.allclose(p.mu, returns.mean(axis=0), atol=1e-15)


@pytest.mark.parametrize(
    "rows, fragment",
    [
        ("time,a,b\n2024-01-01,1,2\n", "header"),
        ("date,a\n2024-01-01,1\n2024-01-02,2\n", "at least 3"),
        ("date,a\n2024-01-01,1\nbad-date,2\n2024-01-03,3\n", ":3"),
        ("date,a\n2024-01-02,1\n2024-01-01,2\n2024-01-03,3\n", ":3"),
        ("date,a\n2024-01-01,1\n2024-01-02,\n2024-01-03,3\n", ":3"),
        ("date,a\n2024-01-01,1\n2024-01-02,oops\n2024-01-03,3\n", ":3"),
        ("date,a\n2024-01-01,1\n2024-01-02,2,9\n2024-01-03,3\n", ":3"),
    ],
)
def test_ingest_csv_line_precise_errors(tmp_path, rows, fragment):
    f = tmp_path / "bad.csv"
    f.write_text(rows)
    with pytest.raises(ValueError) as err:
        ingest_csv(f)
    assert fragment in str(err.value)


def test_portfolio_save_load_round_trip(tmp_path, rng):
    p = _random_portfolio(rng, n=6)
    p, _ = reorder(p, "by-return")
    path = tmp_path / "p.json"
    save_portfolio(p, path)
    q = load_portfolio(path)
    assert q.n == p.n and q.q == p.q and q.budget == p.budget
    assert np.array_equal(q.A, p.A) and np.array_equal(q.mu, p.mu)
    assert q.permutation == p.permutation


def test_graph_save_load_round_trip(tmp_path):
    g = synth_graph(8, 0.5, 3, 4, offset=-1.25, fixed_top_bit=False)
    path = tmp_path / "g.txt"
    save_graph(g, path)
    h = load_graph(path)
    assert h.n == g.n and h.offset == g.offset and h.fixed_top_bit == g.fixed_top_bit
    assert np.array_equal(h.weights, g.weights)


def test_exact_minimum_helper_agrees_with_argmin(rng):
    p = _random_portfolio(rng, n=8)
    bits, energy = exact_minimum(p)
    states = bitstrings_of_weight(8, 4).astype(np.int64)
    energies = cost_binary_batch(p, states)
    assert energy == energies.min()
    assert bits in states[energies == energy]
    assert abs(cost_binary(p, bits) - energy) < 1e-12
