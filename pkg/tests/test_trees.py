import numpy as np
import pytest

from pie_routing.errors import ForestInvariantError, ValidationError
from pie_routing.graph import Graph, GlpParams, generate_glp, sssp_distances
from pie_routing.simkernel import SimConfig
from pie_routing.trees import (Forest, RootElection, TreeLevelState, TreeMsg,
                               build_forests, elect_roots, handle_tree_msg,
                               verify_forest)

from conftest import random_connected_graph


def figure_tree_graph() -> Graph:
    # 8 nodes a..h = 0..7; unit weights except (e,g) = 4
    us = [0, 0, 1, 1, 4, 4, 4]
    vs = [1, 4, 2, 3, 5, 6, 7]
    ws = [1, 1, 1, 1, 1, 4, 1]
    return Graph.from_edges(8, us, vs, ws)


def forced_election(graph: Graph, root: int, m: int = 1) -> RootElection:
    keys = np.zeros(graph.n)
    keys[root] = 1.0
    return RootElection(keys, tuple([frozenset([root])] * m),
                        tuple([1.0 / graph.n] * m))


class TestElectRoots:
    def test_single_level_deterministic_root(self):
        g = random_connected_graph(50, seed=3)
        el = elect_roots(g, 1, seed=11)
        assert el.levels == 1
        assert el.roots[0] == frozenset([el.level0_root])
        deg = g.degrees()
        assert deg[el.level0_root] == deg.max()

    def test_salt_breaks_degree_ties(self):
        # ring: every degree equal, still exactly one root
        n = 12
        g = Graph.from_edges(n, range(n), [(i + 1) % n for i in range(n)],
                             np.ones(n))
        el = elect_roots(g, 1, seed=0)
        assert len(el.roots[0]) == 1

    def test_probability_one_level_elects_everyone(self):
        g = random_connected_graph(4, seed=1)
        el = elect_roots(g, 3, seed=5)
        assert el.roots[2] == frozenset(range(4))  # 2^2/4 = 1

    def test_mean_root_count_binomial(self):
        g = random_connected_graph(1024, seed=2, extra=0.5)
        counts = {l: [] for l in (1, 2, 3)}
        for seed in range(60):
            el = elect_roots(g, 4, seed=seed)
            for l in counts:
                counts[l].append(len(el.roots[l]))
        for l, vals in counts.items():
            expected = 2 ** l
            sigma = np.sqrt(expected * (1 - expected / 1024))
            assert abs(np.mean(vals) - expected) <= 3 * sigma

    def test_empty_level_falls_back_to_level0_root(self):
        g = random_connected_graph(30, seed=4)
        el = elect_roots(g, 6, seed=123)
        for level in range(1, 6):
            assert len(el.roots[level]) >= 1

    def test_m_validation(self):
        g = random_connected_graph(10, seed=0)
        with pytest.raises(ValidationError):
            elect_roots(g, 0, seed=0)

    def test_deterministic(self):
        g = random_connected_graph(100, seed=5)
        assert elect_roots(g, 4, seed=9).roots == elect_roots(g, 4, seed=9).roots


class TestHandleTreeMsg:
    def test_root_ignores_smaller_key(self):
        state = TreeLevelState(0, 0, 9.5, 0, 0.0, -1, frozenset())
        msg = TreeMsg(0, 3.2, 4, 0.0, -1)
        assert handle_tree_msg(state, msg, sender=4, link_weight=1.0) is state

    def test_level0_adopts_larger_key(self):
        state = TreeLevelState(1, 0, 2.5, 1, 0.0, -1, frozenset())
        msg = TreeMsg(0, 9.5, 0, 0.0, -1)
        out = handle_tree_msg(state, msg, sender=0, link_weight=2.0)
        assert (out.root_key, out.root_id, out.height, out.parent) == (9.5, 0, 2.0, 0)

    def test_level0_equal_key_needs_strictly_smaller_height(self):
        state = TreeLevelState(1, 0, 9.5, 0, 3.0, 2, frozenset())
        same = TreeMsg(0, 9.5, 0, 2.0, -1)
        assert handle_tree_msg(state, same, sender=5, link_weight=1.0) is state
        better = TreeMsg(0, 9.5, 0, 1.0, -1)
        out = handle_tree_msg(state, better, sender=5, link_weight=1.0)
        assert out.parent == 5 and out.height == 2.0

    def test_higher_level_nearest_root_tiebreak(self):
        # equidistant offers from roots 7 and 9: join the larger root id
        state = TreeLevelState(1, 2, 7.0, 7, 3.0, 4, frozenset())
        offer = TreeMsg(2, 9.0, 9, 2.0, -1)
        out = handle_tree_msg(state, offer, sender=6, link_weight=1.0)
        assert out.root_id == 9 and out.parent == 6
        worse = TreeMsg(2, 5.0, 5, 2.0, -1)
        assert handle_tree_msg(out, worse, sender=3, link_weight=1.0) is out

    def test_children_follow_advertised_parent(self):
        state = TreeLevelState(3, 0, 9.0, 0, 1.0, 0, frozenset())
        joins = TreeMsg(0, 9.0, 0, 2.0, 3)
        out = handle_tree_msg(state, joins, sender=8, link_weight=1.0)
        assert out.children == {8}
        leaves = TreeMsg(0, 9.0, 0, 2.0, 5)
        out2 = handle_tree_msg(out, leaves, sender=8, link_weight=1.0)
        assert out2.children == frozenset()


class TestFigureTree:
    def test_converged_heights_and_children(self):
        g = figure_tree_graph()
        forests, _ = build_forests(g, forced_election(g, root=0),
                                   engine="protocol")
        f = forests[0]
        expected = {0: 0, 1: 1, 2: 2, 3: 2, 4: 1, 5: 2, 6: 5, 7: 2}
        for node, h in expected.items():
            assert f.height[node] == h
        assert set(f.children(4)) == {5, 6, 7}
        assert set(f.children(0)) == {1, 4}
        assert f.parent[0] == -1

    def test_kernel_engine_matches(self):
        g = figure_tree_graph()
        el = forced_election(g, root=0)
        a, ia = build_forests(g, el, engine="protocol")
        b, ib = build_forests(g, el, engine="kernel")
        assert np.array_equal(a[0].parent, b[0].parent)
        assert np.array_equal(a[0].height, b[0].height)
        assert (ia.rounds, ia.messages) == (ib.rounds, ib.messages)


class TestBuildAndVerify:
    def test_level0_spans_graph(self):
        g = random_connected_graph(120, seed=7, max_w=3)
        forests, _ = build_forests(g, elect_roots(g, 3, seed=7))
        assert forests[0].tree_sizes() == {int(forests[0].root_id[0]): 120}

    def test_heights_equal_dijkstra_to_root(self):
        for seed in range(8):
            g = random_connected_graph(60, seed=seed, max_w=10)
            forests, _ = build_forests(g, elect_roots(g, 1, seed=seed))
            root = int(np.flatnonzero(forests[0].parent == -1)[0])
            assert np.array_equal(forests[0].height, sssp_distances(g, root))

    def test_levels_partition_nodes(self):
        g = random_connected_graph(150, seed=8)
        forests, _ = build_forests(g, elect_roots(g, 4, seed=8))
        for f in forests:
            assert sum(f.tree_sizes().values()) == g.n

    def test_nearest_root_membership_with_tiebreak(self):
        for seed in range(6):
            g = random_connected_graph(80, seed=100 + seed, max_w=4)
            el = elect_roots(g, 3, seed=seed)
            forests, _ = build_forests(g, el)
            for level in (1, 2):
                f = forests[level]
                roots = sorted(el.roots[level])
                dist = {r: sssp_distances(g, r) for r in roots}
                for u in range(g.n):
                    best = min(dist[r][u] for r in roots)
                    winner = max(r for r in roots if dist[r][u] == best)
                    assert f.height[u] == best
                    assert f.root_id[u] == winner

    def test_verify_forest_passes_and_counts(self):
        g = random_connected_graph(90, seed=9, max_w=10)
        forests, _ = build_forests(g, elect_roots(g, 3, seed=9))
        for f in forests:
            diag = verify_forest(f, g)
            assert diag.ok
            assert sum(diag.tree_sizes.values()) == g.n

    def test_verify_forest_flags_corruption(self):
        g = random_connected_graph(40, seed=10)
        forests, _ = build_forests(g, elect_roots(g, 1, seed=10))
        f = forests[0]
        bad_height = f.height.copy()
        bad_height[5] += 1.0
        broken = Forest(0, f.root_key, f.root_id, bad_height, f.parent)
        with pytest.raises(ForestInvariantError) as err:
            verify_forest(broken, g)
        assert err.value.offenders

    def test_acyclic_parent_components(self):
        g = random_connected_graph(100, seed=11)
        el = elect_roots(g, 3, seed=11)
        forests, _ = build_forests(g, el)
        for level, f in enumerate(forests):
            n_roots = int((f.parent == -1).sum())
            assert n_roots == len(el.roots[level])
            # following parents always terminates at a root
            for u in range(g.n):
                cur, hops = u, 0
                while f.parent[cur] != -1:
                    cur = int(f.parent[cur])
                    hops += 1
                    assert hops <= g.n
                assert f.root_id[u] == cur

    def test_glp_level0_spans(self):
        g = generate_glp(GlpParams(n=400), seed=13)
        forests, info = build_forests(g, elect_roots(g, 2, seed=13))
        assert info.converged
        assert set(forests[0].tree_sizes().values()) == {g.n}
