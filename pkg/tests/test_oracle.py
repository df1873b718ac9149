import numpy as np
import pytest

from pprsearch.graph import Graph, generate_synthetic
from pprsearch.oracle import (
    OracleTooLarge,
    exact_ppr,
    exact_top_k,
    global_pagerank,
    max_iterations,
    rank_scores,
)
from pprsearch.walks import walk_endpoints

from conftest import ppr_matrix, random_graph


class TestExactPpr:
    def test_self_loop(self):
        g = Graph.from_edges(1, [(0, 0)])
        # stopping at change < tol leaves at most tol * (1 - alpha) / alpha
        assert exact_ppr(g, 0.2, 0).vector.tolist() == pytest.approx([1.0], abs=4e-12)

    def test_two_cycle(self, cycle2):
        pi = exact_ppr(cycle2, 0.2, 0).vector
        assert pi == pytest.approx([5 / 9, 4 / 9], abs=1e-11)

    def test_three_cycle(self, cycle3):
        pi = exact_ppr(cycle3, 0.2, 0).vector
        norm = 1 - 0.8**3
        expected = [0.2 * 0.8**i / norm for i in range(3)]
        assert pi == pytest.approx(expected, abs=1e-11)
        assert pi == pytest.approx([0.40984, 0.32787, 0.26230], abs=5e-6)

    @pytest.mark.parametrize("seed", range(5))
    def test_matches_linear_solve(self, seed):
        g = random_graph(50, seed)
        M = ppr_matrix(g, 0.2)
        for s in (0, 17, 49):
            assert np.max(np.abs(exact_ppr(g, 0.2, s).vector - M[s])) < 1e-10

    def test_source_distribution(self):
        g = random_graph(30, 1)
        M = ppr_matrix(g, 0.3)
        pi = exact_ppr(g, 0.3, {2: 0.5, 9: 0.25, 20: 0.25}).vector
        assert np.max(np.abs(pi - (0.5 * M[2] + 0.25 * M[9] + 0.25 * M[20]))) < 1e-10

    @pytest.mark.parametrize("alpha", [0.05, 0.2, 0.5, 0.9])
    def test_fixed_point_and_iteration_bound(self, alpha):
        g = random_graph(40, 3)
        ex = exact_ppr(g, alpha, 5)
        W = g.transition_matrix()
        sigma = np.zeros(g.n)
        sigma[5] = 1
        resid = np.abs(alpha * sigma + (1 - alpha) * (W.T @ ex.vector) - ex.vector).sum()
        assert resid < 1e-11
        assert abs(ex.vector.sum() - 1) < 1e-10
        assert ex.vector.min() >= 0
        assert ex.iterations <= max_iterations(alpha)

    def test_worst_case_iteration_bound(self, cycle2):
        # a periodic chain converges slowest; the bound must still hold
        ex = exact_ppr(cycle2, 0.2, 0)
        assert ex.iterations <= max_iterations(0.2)

    def test_cap(self):
        g = generate_synthetic(60, "cycle")
        with pytest.raises(OracleTooLarge):
            exact_ppr(g, 0.2, 0, max_nodes=50)

    def test_walk_definition_agrees(self):
        g = random_graph(20, 8)
        pi = exact_ppr(g, 0.2, 4).vector
        ends = walk_endpoints(g, 0.2, 4, 200_000, np.random.default_rng(0))
        freq = np.bincount(ends, minlength=g.n) / len(ends)
        sigma = np.sqrt(pi * (1 - pi) / len(ends))
        assert np.all(np.abs(freq - pi) <= 5 * sigma + 1e-12)


class TestTopK:
    def test_three_cycle_all(self, cycle3):
        assert [t for t, _ in exact_top_k(cycle3, 0.2, 0, [0, 1, 2], 3)] == [0, 1, 2]

    def test_unreachable_in_id_order(self):
        g = Graph.from_edges(4, [(0, 1), (1, 0), (2, 3), (3, 2)])
        top = exact_top_k(g, 0.2, 0, [3, 2], 2)
        assert top == [(2, 0.0), (3, 0.0)]

    def test_k_too_large(self, cycle3):
        with pytest.raises(ValueError):
            exact_top_k(cycle3, 0.2, 0, [0, 1], 3)

    def test_ties_by_id(self):
        assert rank_scores({5: 0.1, 2: 0.1, 7: 0.3}) == [(7, 0.3), (2, 0.1), (5, 0.1)]


class TestGlobalPagerank:
    def test_uniform_average(self):
        g = random_graph(30, 2)
        M = ppr_matrix(g, 0.2)
        assert np.max(np.abs(global_pagerank(g, 0.2) - M.mean(axis=0))) < 1e-9
