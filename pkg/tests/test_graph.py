import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pprsearch.graph import (
    Graph,
    GraphFormatError,
    SourceDistribution,
    as_source,
    generate_synthetic,
    load_edge_list,
    load_keywords,
    write_edge_list,
)


def load(text, weighted=False):
    return load_edge_list(io.StringIO(text), weighted=weighted)


class TestLoadEdgeList:
    def test_two_cycle(self):
        g = load("0\t1\n1\t0\n")
        assert (g.n, g.m) == (2, 2)
        assert g.out_adj == [[(1, 1.0)], [(0, 1.0)]]

    def test_uniform_weights(self):
        g = load("0\t1\n0\t2\n")
        assert g.out_neighbors(0) == [(1, 0.5), (2, 0.5)]

    def test_weighted_normalized(self):
        g = load("0\t1\t0.3\n0\t2\t0.9\n", weighted=True)
        (v1, w1), (v2, w2) = g.out_neighbors(0)
        assert (v1, v2) == (1, 2)
        assert w1 == pytest.approx(0.25, abs=1e-12)
        assert w2 == pytest.approx(0.75, abs=1e-12)

    def test_comments_and_whitespace(self):
        g = load("# a comment\n0 1\n\n1\t0\n")
        assert g.m == 2

    def test_nodes_header_allows_isolated(self):
        g = load("#nodes 5\n0\t1\n1\t0\n")
        assert g.n == 5
        # nodes 2..4 have no edges, so each gets a self-loop
        assert g.dangling == 3
        assert g.out_neighbors(4) == [(4, 1.0)]

    def test_sink_gets_self_loop(self):
        g = load("0\t1\n")
        assert g.out_neighbors(1) == [(1, 1.0)]
        assert g.dangling == 1

    @pytest.mark.parametrize(
        "text,weighted,lineno",
        [
            ("0\t1\n1\tx\n", False, 2),
            ("0\t1\t2\n", False, 1),
            ("0\t1\t-0.5\n", True, 1),
            ("0\t1\n1\t0\n0\t1\n", False, 3),
            ("0\t99999999999\n", False, 1),
            ("#nodes 2\n0\t1\n1\t2\n", False, 3),
            ("0\t-1\n", False, 1),
            ("0\t1\n", True, 1),
        ],
        ids=["malformed", "extra-column", "negative-weight", "duplicate", "overflow",
             "beyond-header", "negative-id", "missing-weight"],
    )
    def test_errors_report_line(self, text, weighted, lineno):
        with pytest.raises(GraphFormatError) as info:
            load(text, weighted)
        assert info.value.lineno == lineno
        assert f"line {lineno}" in str(info.value)

    def test_empty(self):
        with pytest.raises(GraphFormatError):
            load("# nothing\n")

    def test_write_round_trip(self):
        g = generate_synthetic(30, "erdos_renyi", seed=4, p=0.2)
        buf = io.StringIO()
        write_edge_list(g, buf)
        h = load(buf.getvalue(), weighted=True)
        assert np.array_equal(h.out_indptr, g.out_indptr)
        assert np.array_equal(h.out_indices, g.out_indices)
        # reloading renormalizes, which may move the last bit
        assert np.allclose(h.out_weights, g.out_weights, rtol=0, atol=1e-15)


class TestKeywords:
    def test_single(self):
        kw = load_keywords(io.StringIO("5\tjohn\n"))
        assert kw.targets("john") == [5]

    def test_sorted(self):
        kw = load_keywords(io.StringIO("5\tjohn\n2\tjohn\n"))
        assert kw.targets("john") == [2, 5]

    def test_gamma(self):
        kw = load_keywords(io.StringIO("5\tjohn,smith\n"))
        assert kw.keywords_by_node[5] == ("john", "smith")
        assert kw.gamma == 2

    def test_unknown_node(self):
        with pytest.raises(GraphFormatError):
            load_keywords(io.StringIO("5\tjohn\n"), n=5)

    def test_unknown_keyword(self):
        kw = load_keywords(io.StringIO("1\ta\n"))
        with pytest.raises(KeyError):
            kw.targets("b")


class TestSynthetic:
    def test_cycles(self):
        assert sorted(generate_synthetic(2, "cycle").edges()) == [(0, 1, 1.0), (1, 0, 1.0)]
        assert [(u, v) for u, v, _ in generate_synthetic(3, "cycle").edges()] == [(0, 1), (1, 2), (2, 0)]

    def test_erdos_renyi_deterministic(self):
        a = generate_synthetic(50, "erdos_renyi", seed=7, p=0.1)
        b = generate_synthetic(50, "erdos_renyi", seed=7, p=0.1)
        assert a == b
        assert a.fingerprint() == b.fingerprint()

    def test_power_law_deterministic_and_total(self):
        a = generate_synthetic(500, "directed_power_law", seed=2)
        b = generate_synthetic(500, "directed_power_law", seed=2)
        assert a == b
        assert np.all(np.diff(a.out_indptr) >= 1)

    def test_power_law_heavy_tail(self):
        g = generate_synthetic(5000, "directed_power_law", seed=1)
        indeg = g.in_degrees
        assert indeg.max() > 20 * np.median(indeg)

    def test_bad_model(self):
        with pytest.raises(ValueError):
            generate_synthetic(5, "lattice")


class TestGraphStructure:
    def test_duplicate_edge_rejected(self):
        with pytest.raises(ValueError):
            Graph.from_edges(2, [(0, 1), (0, 1)])

    def test_nonpositive_weight_rejected(self):
        with pytest.raises(ValueError):
            Graph.from_edges(2, [(0, 1), (1, 0)], [1.0, 0.0])

    def test_arrays_read_only(self):
        g = generate_synthetic(3, "cycle")
        with pytest.raises(ValueError):
            g.out_weights[0] = 0.5

    def test_fingerprint_sensitive_to_weights(self):
        a = Graph.from_edges(2, [(0, 1), (0, 0), (1, 0)], [1, 1, 1])
        b = Graph.from_edges(2, [(0, 1), (0, 0), (1, 0)], [1, 2, 1])
        assert a.fingerprint() != b.fingerprint()


edge_sets = st.integers(2, 25).flatmap(
    lambda n: st.tuples(
        st.just(n),
        st.sets(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)), max_size=4 * n),
        st.integers(0, 2**32 - 1),
    )
)


class TestGraphProperties:
    @settings(max_examples=60, deadline=None)
    @given(edge_sets)
    def test_transpose_consistency(self, case):
        n, edges, seed = case
        rng = np.random.default_rng(seed)
        edges = sorted(edges)
        g = Graph.from_edges(n, edges, rng.uniform(0.1, 2.0, size=len(edges)))
        out = {(u, v): w for u in range(n) for v, w in g.out_neighbors(u)}
        inn = {(u, v): w for v in range(n) for u, w in g.in_neighbors(v)}
        assert out == inn

    @settings(max_examples=60, deadline=None)
    @given(edge_sets)
    def test_row_stochastic(self, case):
        n, edges, seed = case
        rng = np.random.default_rng(seed)
        edges = sorted(edges)
        g = Graph.from_edges(n, edges, rng.uniform(0.1, 2.0, size=len(edges)))
        sums = np.add.reduceat(g.out_weights, g.out_indptr[:-1])
        assert np.all(np.abs(sums - 1) < 1e-9)
        assert np.all(g.out_weights > 0)

    @settings(max_examples=30, deadline=None)
    @given(edge_sets)
    def test_load_deterministic(self, case):
        n, edges, _ = case
        text = "#nodes %d\n" % n + "".join(f"{u}\t{v}\n" for u, v in sorted(edges))
        a, b = load(text), load(text)
        assert a == b
        assert a.out_indices.tobytes() == b.out_indices.tobytes()
        assert a.out_weights.tobytes() == b.out_weights.tobytes()


class TestSourceDistribution:
    def test_single(self):
        assert as_source(3).items() == [(3, 1.0)]

    def test_mapping(self):
        src = as_source({2: 0.25, 0: 0.75})
        assert src.items() == [(0, 0.75), (2, 0.25)]

    @pytest.mark.parametrize("sigma", [{0: 0.5}, {0: 1.5, 1: -0.5}])
    def test_invalid(self, sigma):
        with pytest.raises(ValueError):
            SourceDistribution.from_mapping(sigma)
