import io
import math

import numpy as np
import pytest

from pie_routing.errors import EdgeListParseError, EstimationError, ValidationError
from pie_routing.graph import (Graph, GlpParams, WeightMode, assign_weights,
                               bfs_hops, component_labels, diameter_estimate,
                               dump_edge_list, estimate_power_law_exponent,
                               generate_glp, hill_exponent, is_connected,
                               largest_component, load_edge_list, shortest_path)

from conftest import bellman_ford, random_connected_graph


class TestConstruction:
    def test_symmetry_and_sorting(self):
        g = Graph.from_edges(4, [0, 2, 1], [1, 0, 3], [2.0, 1.5, 3.0])
        for u in range(4):
            for v, w in zip(g.neighbors(u), g.neighbor_weights(u)):
                assert g.weight(int(v), u) == w
            assert list(g.neighbors(u)) == sorted(g.neighbors(u))

    def test_duplicate_edges_keep_minimum_weight(self):
        g = Graph.from_edges(2, [0, 1, 0], [1, 0, 1], [5.0, 2.0, 7.0])
        assert g.num_edges == 1
        assert g.weight(0, 1) == 2.0

    def test_self_loop_rejected(self):
        with pytest.raises(ValidationError):
            Graph.from_edges(2, [0], [0], [1.0])

    def test_nonpositive_weight_rejected(self):
        with pytest.raises(ValidationError):
            Graph.from_edges(2, [0], [1], [0.0])
        with pytest.raises(ValidationError):
            Graph.from_edges(2, [0], [1], [-3.0])


class TestEdgeList:
    def test_minimal_path_graph(self):
        g, orig = load_edge_list(b"0 1\n1 2\n")
        assert g.n == 3 and g.num_edges == 2
        assert list(g.weights) == [1.0] * 4
        assert list(orig) == [0, 1, 2]

    def test_duplicate_collapsed_symmetric(self):
        g, _ = load_edge_list("0 1 2.5\n1 0 2.5\n")
        assert g.num_edges == 1
        assert g.weight(0, 1) == 2.5 == g.weight(1, 0)

    def test_nonpositive_weight_is_error(self):
        with pytest.raises(EdgeListParseError):
            load_edge_list("0 1 0\n")

    def test_malformed_line_reports_number(self):
        with pytest.raises(EdgeListParseError) as err:
            load_edge_list("0 1\nbogus line here extra\n")
        assert err.value.line_no == 2

    def test_comments_blanks_and_id_compaction(self):
        text = "# a comment\n\n10 30\n30 20 2\n"
        g, orig = load_edge_list(io.BytesIO(text.encode()))
        assert g.n == 3
        assert list(orig) == [10, 20, 30]
        assert g.weight(2, 1) == 2.0  # 30-20 edge

    def test_roundtrip_through_dump(self):
        g = random_connected_graph(40, seed=3, max_w=7)
        buf = io.StringIO()
        dump_edge_list(g, buf, header="test")
        g2, orig = load_edge_list(buf.getvalue())
        assert g2 == g
        assert list(orig) == list(range(g.n))


class TestGlp:
    def test_exponent_in_band(self):
        g = generate_glp(GlpParams(n=1000, lam=2.1), seed=7)
        assert 1.9 <= estimate_power_law_exponent(g) <= 2.4

    def test_exponent_band_over_ten_seeds(self):
        ests = [estimate_power_law_exponent(generate_glp(GlpParams(n=1000), seed=s))
                for s in range(10)]
        assert all(1.9 <= e <= 2.4 for e in ests)

    def test_degenerate_clique(self):
        g = generate_glp(GlpParams(n=10, clique_size=10), seed=1)
        assert g.n == 10 and g.num_edges == 45
        assert all(d == 9 for d in g.degrees())

    def test_deterministic(self):
        a = generate_glp(GlpParams(n=1000, lam=2.1), seed=7)
        b = generate_glp(GlpParams(n=1000, lam=2.1), seed=7)
        assert a == b

    def test_connected(self):
        for seed in range(5):
            assert is_connected(generate_glp(GlpParams(n=500), seed=seed))

    def test_bad_params(self):
        with pytest.raises(ValidationError):
            GlpParams(n=5, clique_size=10).validate()
        with pytest.raises(ValidationError):
            GlpParams(n=10, mix_prob=1.0).validate()
        with pytest.raises(ValidationError):
            GlpParams(n=10, beta=1.5).validate()
        with pytest.raises(ValidationError):
            # derived beta >= 1 for an unreachable exponent target
            GlpParams(n=10, lam=2.0, edges_per_step=2.0, mix_prob=0.3,
                      beta=None).validate()


class TestWeights:
    def test_unit_mode(self):
        g = random_connected_graph(30, seed=1, max_w=9)
        gu = assign_weights(g, WeightMode.UNIT, seed=5)
        assert (gu.weights == 1.0).all()

    def test_uniform_symmetric_and_in_range(self):
        g = random_connected_graph(30, seed=2)
        gw = assign_weights(g, WeightMode.UNIFORM_INT, seed=5)
        u, v, w = gw.edge_array()
        assert set(np.unique(w)) <= set(range(1, 11))
        for a, b, x in zip(u[:50], v[:50], w[:50]):
            assert gw.weight(int(b), int(a)) == x

    def test_uniform_mean_large_sample(self):
        # law of large numbers over uniform {1..10}: mean 5.5 +- 0.1
        rng = np.random.default_rng(0)
        n = 2000
        seen = set()
        while len(seen) < 110_000:
            a, b = rng.integers(0, n, size=2)
            if a != b:
                seen.add((min(a, b), max(a, b)))
        us, vs = zip(*seen)
        g = Graph.from_edges(n, us, vs, np.ones(len(us)))
        assert g.num_edges >= 100_000
        gw = assign_weights(g, WeightMode.UNIFORM_INT, seed=11)
        _, _, w = gw.edge_array()
        assert abs(w.mean() - 5.5) < 0.1

    def test_deterministic(self):
        g = random_connected_graph(30, seed=2)
        a = assign_weights(g, WeightMode.UNIFORM_INT, seed=5)
        b = assign_weights(g, WeightMode.UNIFORM_INT, seed=5)
        assert a == b


class TestComponents:
    def test_two_triangles_plus_pendant(self):
        # triangle {0,1,2} with pendant 6, triangle {3,4,5}
        g = Graph.from_edges(7, [0, 1, 2, 3, 4, 5, 0],
                             [1, 2, 0, 4, 5, 3, 6], [1.0] * 7)
        big = largest_component(g)
        assert big.n == 4 and big.num_edges == 4

    def test_connected_graph_unchanged(self):
        g = random_connected_graph(50, seed=4)
        assert largest_component(g) is g

    def test_bfs_reachability_after_extraction(self):
        rng = np.random.default_rng(0)
        us, vs = [], []
        for _ in range(60):  # sparse random fragments
            a, b = rng.integers(0, 80, size=2)
            if a != b:
                us.append(int(a))
                vs.append(int(b))
        g = Graph.from_edges(80, us, vs, np.ones(len(us)))
        big = largest_component(g)
        assert is_connected(big)
        assert (bfs_hops(big, 0) >= 0).all()


class TestShortestPath:
    def test_triangle_forced_by_weights(self):
        g = Graph.from_edges(3, [0, 1, 0], [1, 2, 2], [1.0, 1.0, 3.0])
        dist, path = shortest_path(g, 0, 2)
        assert dist == 2.0 and path == [0, 1, 2]

    def test_identity(self):
        g = random_connected_graph(10, seed=1)
        assert shortest_path(g, 4, 4) == (0.0, [4])

    def test_unreachable(self):
        g = Graph.from_edges(4, [0, 2], [1, 3], [1.0, 1.0])
        dist, path = shortest_path(g, 0, 3)
        assert math.isinf(dist) and path is None

    def test_against_bellman_ford(self):
        g = random_connected_graph(100, seed=9, max_w=10)
        for src in (0, 13, 57, 99):
            oracle = bellman_ford(g, src)
            for dst in range(0, 100, 7):
                dist, path = shortest_path(g, src, dst)
                assert dist == oracle[dst]
                if dst != src:
                    assert len(path) >= 2
                    assert sum(g.weight(a, b)
                               for a, b in zip(path, path[1:])) == dist

    def test_triangle_inequality_sampled(self):
        g = random_connected_graph(60, seed=5, max_w=10)
        rng = np.random.default_rng(1)
        dists = {s: bellman_ford(g, s) for s in range(g.n)}
        for _ in range(200):
            a, b, c = rng.integers(0, g.n, size=3)
            assert dists[a][c] <= dists[a][b] + dists[b][c] + 1e-9


class TestExponentEstimator:
    def test_pareto_samples_recover_exponent(self):
        rng = np.random.default_rng(42)
        lam = 2.1
        samples = rng.pareto(lam - 1.0, size=100_000) + 1.0
        est = hill_exponent(samples, k_min=2.0)
        assert 2.05 <= est <= 2.15

    def test_regular_graph_is_degenerate(self):
        # 2-regular ring: every degree equals k_min -> divergent estimate
        n = 300
        g = Graph.from_edges(n, list(range(n)), [(i + 1) % n for i in range(n)],
                             np.ones(n))
        with pytest.raises(EstimationError):
            estimate_power_law_exponent(g, k_min=2)

    def test_too_few_tail_nodes(self):
        g = random_connected_graph(50, seed=2)
        with pytest.raises(EstimationError):
            estimate_power_law_exponent(g, k_min=10**6)


def test_diameter_estimate_on_path():
    n = 30
    g = Graph.from_edges(n, range(n - 1), range(1, n), np.ones(n - 1))
    assert diameter_estimate(g) == n - 1
