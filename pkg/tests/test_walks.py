import math

import numpy as np
import pytest

from pprsearch.graph import Graph, generate_synthetic
from pprsearch.oracle import exact_ppr, rank_scores
from pprsearch.sampler_search import power_law_delta
from pprsearch.walks import (
    forward_vector,
    make_rng,
    mc_walks_for_delta,
    monte_carlo_search,
    rank_counts,
    sample_walk,
    walk_endpoints,
    walk_lengths,
)

from conftest import random_graph

ALPHA = 0.2


def within_binomial(count, total, p, z=4.0):
    sigma = math.sqrt(total * p * (1 - p))
    return abs(count - total * p) <= z * sigma


class TestSampleWalk:
    def test_stays_at_start_with_prob_alpha(self):
        # a long cycle, so walks practically never return to the start
        g = generate_synthetic(1000, "cycle")
        ends = walk_endpoints(g, ALPHA, 0, 100_000, make_rng(1))
        assert within_binomial(int(np.sum(ends == 0)), 100_000, ALPHA)

    def test_two_cycle(self, cycle2):
        ends = walk_endpoints(cycle2, ALPHA, 0, 100_000, make_rng(2))
        assert within_binomial(int(np.sum(ends == 1)), 100_000, 4 / 9)

    def test_three_cycle(self, cycle3):
        ends = walk_endpoints(cycle3, ALPHA, 0, 100_000, make_rng(3))
        counts = np.bincount(ends, minlength=3)
        for v, p in enumerate([0.40984, 0.32787, 0.26230]):
            assert within_binomial(int(counts[v]), 100_000, p)

    def test_single_walk(self, cycle3):
        v = sample_walk(cycle3, ALPHA, 1, make_rng(0))
        assert v in (0, 1, 2)

    def test_weighted_transitions(self):
        g = Graph.from_edges(3, [(0, 1), (0, 2), (1, 1), (2, 2)], [1.0, 3.0, 1.0, 1.0])
        ends = walk_endpoints(g, ALPHA, 0, 100_000, make_rng(4))
        # endpoint 2 iff the first step is taken and goes to 2
        assert within_binomial(int(np.sum(ends == 2)), 100_000, 0.8 * 0.75)

    def test_source_distribution(self):
        g = generate_synthetic(1000, "cycle")
        ends = walk_endpoints(g, ALPHA, {10: 0.25, 500: 0.75}, 100_000, make_rng(5))
        assert within_binomial(int(np.sum(ends == 10)), 100_000, 0.25 * ALPHA)
        assert within_binomial(int(np.sum(ends == 500)), 100_000, 0.75 * ALPHA)

    def test_mean_length(self):
        lengths = walk_lengths(ALPHA, 100_000, make_rng(6))
        mean = (1 - ALPHA) / ALPHA
        sd = math.sqrt(1 - ALPHA) / ALPHA
        assert abs(lengths.mean() - mean) <= 4 * sd / math.sqrt(len(lengths))
        assert lengths.min() == 0

    def test_bad_alpha(self, cycle3):
        with pytest.raises(ValueError):
            walk_endpoints(cycle3, 1.0, 0, 10, make_rng(0))


class TestForwardVector:
    def test_one_walk(self, cycle3):
        x = forward_vector(cycle3, ALPHA, 0, 1, make_rng(0))
        assert sum(x.endpoint_counts.values()) == 1
        assert len(x.endpoint_counts) == 1

    def test_deterministic(self):
        g = random_graph(50, 1)
        a = forward_vector(g, ALPHA, 3, 5000, make_rng(42))
        b = forward_vector(g, ALPHA, 3, 5000, make_rng(42))
        assert a == b

    def test_blocks(self):
        g = random_graph(50, 1)
        x = forward_vector(g, ALPHA, {3: 0.5, 7: 0.5}, 1000, make_rng(0))
        assert sum(x.endpoint_counts.values()) == 1000
        assert sum(v for _, v in x.r_block()) == pytest.approx(1.0)
        assert x.p_block() == [(3, 0.5), (7, 0.5)]
        dense = x.dense()
        assert dense.shape == (100,)
        assert dense[:50].sum() == pytest.approx(1.0)
        assert dense[50:].sum() == pytest.approx(1.0)
        assert np.all(dense >= 0)

    @pytest.mark.parametrize("seed", range(3))
    def test_total_variation(self, seed):
        g = random_graph(50, seed)
        x = forward_vector(g, ALPHA, 0, 100_000, make_rng(seed))
        pi = exact_ppr(g, ALPHA, 0).vector
        emp = np.zeros(g.n)
        for v, c in x.endpoint_counts.items():
            emp[v] = c / x.w
        assert 0.5 * np.abs(emp - pi).sum() < 0.01

    def test_unbiased(self):
        g = random_graph(12, 4)
        pi = exact_ppr(g, ALPHA, 2).vector
        rng = make_rng(9)
        K, w = 4000, 10
        total = np.zeros(g.n)
        for _ in range(K):
            x = forward_vector(g, ALPHA, 2, w, rng)
            for v, c in x.endpoint_counts.items():
                total[v] += c / w
        mean = total / K
        sd = np.sqrt(pi * (1 - pi) / (K * w))
        assert np.all(np.abs(mean - pi) <= 5 * sd + 1e-12)

    def test_needs_a_walk(self, cycle3):
        with pytest.raises(ValueError):
            forward_vector(cycle3, ALPHA, 0, 0, make_rng(0))


class TestMonteCarloSearch:
    def test_unreachable_truncates(self):
        g = Graph.from_edges(4, [(0, 1), (1, 0), (2, 3), (3, 2)])
        res = monte_carlo_search(g, ALPHA, 0, [3], 10, make_rng(0), max_walks=5000)
        assert res.truncated
        assert res.extra["hits"] == 0
        assert res.walks == 5000
        assert res.ranking == [(3, 0)]

    def test_two_cycle_ratio(self, cycle2):
        res = monte_carlo_search(cycle2, ALPHA, 0, [0, 1], 90_000, make_rng(1))
        counts = dict(res.ranking)
        assert counts[0] + counts[1] == 90_000
        assert res.walks == 90_000
        assert within_binomial(counts[1], 90_000, 4 / 9)
        assert res.top(2) == [0, 1]

    def test_stops_at_requested_hits(self):
        g = random_graph(50, 3)
        res = monte_carlo_search(g, ALPHA, 0, [5, 9, 11], 250, make_rng(2), batch=100)
        assert res.extra["hits"] == 250
        assert sum(c for _, c in res.ranking) == 250
        assert not res.truncated

    def test_ranking_ties_by_id(self):
        assert rank_counts([9, 2, 4], {9: 3, 4: 3}) == [(4, 3), (9, 3), (2, 0)]

    def test_recovers_top3(self):
        g = generate_synthetic(100, "directed_power_law", seed=5)
        rng = make_rng(0)
        walks = mc_walks_for_delta(power_law_delta(10, 10 / 100, 3))
        precisions = []
        for _ in range(100):
            T = sorted(rng.choice(100, 10, replace=False).tolist())
            s = int(rng.integers(100))
            pi = exact_ppr(g, ALPHA, s).vector
            exact = {t for t, _ in rank_scores({t: pi[t] for t in T})[:3]}
            res = monte_carlo_search(g, ALPHA, s, T, walks, rng, max_walks=walks)
            precisions.append(len(set(res.top(3)) & exact) / 3)
        assert np.mean(precisions) >= 0.9

    def test_empty_targets(self, cycle3):
        with pytest.raises(ValueError):
            monte_carlo_search(cycle3, ALPHA, 0, [], 10, make_rng(0))
