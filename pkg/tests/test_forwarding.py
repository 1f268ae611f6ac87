import numpy as np
import pytest

from pie_routing.errors import ValidationError
from pie_routing.graph import Graph, shortest_path, sssp_distances
from pie_routing.embedding import CoordinateTable, build_coordinates
from pie_routing.forwarding import (Outcome, RouteTrace, common_trees,
                                    next_hop, stretch, trace_route,
                                    trace_routes_bulk)
from pie_routing.simkernel import FailureSet
from pie_routing.trees import Forest, TreeId, build_forests, elect_roots

from conftest import random_connected_graph
from test_trees import forced_election


def manual_coords(graph: Graph, levels: list[dict]) -> CoordinateTable:
    """Hand-build a CoordinateTable; levels = [{node: (root, coords)}]."""
    n = graph.n
    forests = []
    vals = []
    off = [0]
    for level, table in enumerate(levels):
        root = np.array([table[u][0] for u in range(n)], np.int32)
        forests.append(Forest(level, np.zeros(n), root, np.zeros(n),
                              np.full(n, -1, np.int32)))
    for table in levels:
        for u in range(n):
            vals.extend(table[u][1])
            off.append(len(vals))
    return CoordinateTable(graph, forests,
                           np.asarray(off, np.int64), np.asarray(vals, float))


def two_tree_scenario():
    """A source with two neighbors where the level-1 tree is the shortcut.

    Nodes: 0 = source, 1/2 = neighbors, 3 = destination.  Level-0 distances
    to the destination: nbr1 = 4, nbr2 = 5; level-1: nbr1 = 3, nbr2 = 1.
    Greedy must pick nbr2 through the level-1 tree (cost 1+1=2 beats 1+3=4).
    """
    g = Graph.from_edges(4, [0, 0, 1, 2], [1, 2, 3, 3], [1.0, 1.0, 4.0, 5.0])
    level0 = {0: (3, (6.0,)), 1: (3, (4.0,)), 2: (3, (5.0,)), 3: (3, (0.0,))}
    level1 = {0: (3, (4.0,)), 1: (3, (3.0,)), 2: (3, (1.0,)), 3: (3, (0.0,))}
    return g, manual_coords(g, [level0, level1])


def embedded(graph, m, seed):
    forests, _ = build_forests(graph, elect_roots(graph, m, seed))
    return build_coordinates(graph, forests)


class TestCommonTrees:
    def test_level0_always_shared(self):
        g = random_connected_graph(60, seed=1)
        coords = embedded(g, 3, seed=1)
        for u, v in [(0, 59), (5, 41), (17, 3)]:
            shared = common_trees(coords.node_coord_set(u), coords.node_coord_set(v))
            assert shared[0].level == 0

    def test_node_with_itself(self):
        g = random_connected_graph(30, seed=2)
        coords = embedded(g, 3, seed=2)
        own = coords.node_coord_set(7)
        assert common_trees(own, own) == sorted(own, key=lambda t: t.level)

    def test_two_tree_scenario_shares_both(self):
        g, coords = two_tree_scenario()
        shared = common_trees(coords.node_coord_set(1), coords.node_coord_set(3))
        assert [t.level for t in shared] == [0, 1]


class TestNextHop:
    def test_level1_shortcut_wins(self):
        g, coords = two_tree_scenario()
        hop = next_hop(0, 3, coords, g)
        assert hop is not None
        nxt, tree = hop
        assert nxt == 2 and tree.level == 1

    def test_level0_choice_without_level1(self):
        g, coords = two_tree_scenario()
        only0 = CoordinateTable(g, coords.forests[:1],
                                coords.off[:g.n + 1], coords.val[:g.n])
        nxt, tree = next_hop(0, 3, only0, g)
        assert nxt == 1 and tree.level == 0

    def test_adjacent_destination_zero_term(self):
        g = random_connected_graph(50, seed=3, max_w=10)
        coords = embedded(g, 2, seed=3)
        u = 0
        v = int(g.neighbors(u)[0])
        hop = next_hop(u, v, coords, g)
        assert hop is not None
        # candidate (v, level0) has cost w(u,v): any winner costs no more
        assert g.weight(u, hop[0]) <= g.weight(u, v) or hop[0] == v

    def test_never_none_without_failures(self):
        for seed in range(4):
            g = random_connected_graph(40, seed=seed, max_w=5)
            coords = embedded(g, 2, seed=seed)
            for v in range(g.n):
                for t in range(0, g.n, 5):
                    if t != v:
                        assert next_hop(v, t, coords, g) is not None

    def test_v_equals_t_rejected(self):
        g, coords = two_tree_scenario()
        with pytest.raises(ValidationError):
            next_hop(2, 2, coords, g)

    def test_strict_progress_in_used_tree(self):
        from pie_routing.embedding import linf_distance
        g = random_connected_graph(60, seed=5, max_w=10)
        coords = embedded(g, 3, seed=5)
        for (v, t) in [(0, 30), (10, 55), (42, 7)]:
            nxt, tree = next_hop(v, t, coords, g)
            l = tree.level
            assert linf_distance(coords.vector(nxt, l), coords.vector(t, l)) < \
                linf_distance(coords.vector(v, l), coords.vector(t, l))


class TestTraceRoute:
    def test_self_route(self):
        g, coords = two_tree_scenario()
        tr = trace_route(2, 2, coords, g)
        assert tr.path == (2,) and tr.length == 0.0
        assert tr.outcome is Outcome.DELIVERED

    def test_two_tree_scenario_route(self):
        g, coords = two_tree_scenario()
        tr = trace_route(0, 3, coords, g)
        assert tr.outcome is Outcome.DELIVERED
        assert tr.path == (0, 2, 3)

    def test_exhaustive_delivery_small_graphs(self):
        for seed in range(6):
            g = random_connected_graph(30, seed=10 + seed, max_w=10)
            coords = embedded(g, (seed % 3) + 1, seed=seed)
            for s in range(g.n):
                for d in range(g.n):
                    tr = trace_route(s, d, coords, g)
                    assert tr.outcome is Outcome.DELIVERED, (seed, s, d)
                    # consecutive entries are neighbors, length adds up
                    total = sum(g.weight(a, b)
                                for a, b in zip(tr.path, tr.path[1:]))
                    assert total == tr.length

    def test_single_tree_monotone_distance(self):
        from pie_routing.embedding import linf_distance
        g = random_connected_graph(50, seed=20, max_w=10)
        coords = embedded(g, 1, seed=20)
        for (s, d) in [(0, 49), (3, 31), (44, 2)]:
            tr = trace_route(s, d, coords, g, ttl=10**6)
            assert tr.outcome is Outcome.DELIVERED
            dists = [linf_distance(coords.vector(u, 0), coords.vector(d, 0))
                     for u in tr.path]
            assert all(a > b for a, b in zip(dists, dists[1:]))

    def test_stuck_under_heavy_failure(self):
        # star center failed: satellites cannot reach anyone
        n = 6
        g = Graph.from_edges(n, [0] * (n - 1), range(1, n), np.ones(n - 1))
        coords = embedded(g, 1, seed=0)
        tr = trace_route(1, 2, coords, g, failures=FailureSet(frozenset({0})))
        assert tr.outcome is Outcome.STUCK


class TestStretch:
    def test_exact_route(self):
        tr = RouteTrace((0, 1), 3.0, Outcome.DELIVERED)
        assert stretch(tr, 3.0) == 1.0

    def test_undelivered_rejected(self):
        tr = RouteTrace((0, 1), 3.0, Outcome.STUCK)
        with pytest.raises(ValidationError):
            stretch(tr, 3.0)

    def test_self_pair_rejected(self):
        tr = RouteTrace((0,), 0.0, Outcome.DELIVERED)
        with pytest.raises(ValidationError):
            stretch(tr, 1.0)

    def test_cycle_worst_case_at_most_two(self):
        # C6: tree routing detours at worst around the cycle
        n = 6
        g = Graph.from_edges(n, range(n), [(i + 1) % n for i in range(n)],
                             np.ones(n))
        worst = 0.0
        for seed in range(5):
            forests, _ = build_forests(g, forced_election(g, root=seed % n))
            coords = build_coordinates(g, forests)
            for s in range(n):
                for d in range(n):
                    if s == d:
                        continue
                    tr = trace_route(s, d, coords, g)
                    assert tr.outcome is Outcome.DELIVERED
                    dg, _ = shortest_path(g, s, d)
                    worst = max(worst, stretch(tr, dg))
        assert worst <= 2.0

    def test_adjacent_pair_stretch_one_when_edge_is_shortest(self):
        for seed in range(4):
            g = random_connected_graph(40, seed=30 + seed, max_w=10)
            coords = embedded(g, 2, seed=seed)
            dist = {u: sssp_distances(g, u) for u in range(g.n)}
            for u in range(g.n):
                for v in g.neighbors(u):
                    v = int(v)
                    if g.weight(u, v) == dist[u][v]:
                        tr = trace_route(u, v, coords, g)
                        assert stretch(tr, dist[u][v]) == 1.0


class TestBulkTraces:
    def test_matches_reference(self):
        g = random_connected_graph(50, seed=40, max_w=7)
        coords = embedded(g, 3, seed=40)
        rng = np.random.default_rng(0)
        src = rng.integers(0, g.n, size=200).astype(np.int32)
        dst = ((src + 1 + rng.integers(0, g.n - 1, size=200)) % g.n).astype(np.int32)
        bulk = trace_routes_bulk(coords, g, src, dst, record_paths=True)
        for i in range(src.size):
            ref = trace_route(int(src[i]), int(dst[i]), coords, g)
            got = bulk.route_trace(i)
            assert got.path == ref.path
            assert got.length == ref.length
            assert got.outcome == ref.outcome
            assert got.used_levels == tuple(sorted(ref.used_levels))

    def test_failure_monotonicity(self):
        # more failures can only shrink the delivered set
        g = random_connected_graph(60, seed=41, max_w=3)
        coords = embedded(g, 2, seed=41)
        rng = np.random.default_rng(1)
        small = frozenset(int(x) for x in rng.choice(g.n, 5, replace=False))
        big = small | frozenset(int(x)
                                for x in rng.choice(g.n, 8, replace=False))
        alive_small = np.ones(g.n, bool)
        alive_small[list(small)] = False
        ids = np.flatnonzero(alive_small & np.isin(
            np.arange(g.n), list(big), invert=True))
        src = np.repeat(ids[:20], 5).astype(np.int32)
        dst = np.tile(ids[20:25], 20).astype(np.int32)
        keep = src != dst
        src, dst = src[keep], dst[keep]
        d_small = trace_routes_bulk(coords, g, src, dst,
                                    failures=FailureSet(small)).delivered
        d_big = trace_routes_bulk(coords, g, src, dst,
                                  failures=FailureSet(big)).delivered
        assert not np.any(d_big & ~d_small)
