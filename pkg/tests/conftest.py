import numpy as np
import pytest

from pie_routing.graph import Graph, is_connected
from pie_routing.kernels import backend


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    """Compile the numba kernels once up front (no-op on the numpy backend)."""
    backend.warmup()


def random_connected_graph(n: int, seed: int, extra: float = 1.0,
                           max_w: int = 1) -> Graph:
    """Random tree plus ~extra*n shortcut edges; weights in {1..max_w}."""
    rng = np.random.default_rng(seed)
    us = list(range(1, n))
    vs = [int(rng.integers(0, i)) for i in range(1, n)]
    edges = {(min(u, v), max(u, v)) for u, v in zip(us, vs)}
    for _ in range(int(extra * n)):
        a, b = int(rng.integers(0, n)), int(rng.integers(0, n))
        if a != b:
            edges.add((min(a, b), max(a, b)))
    eu, ev = zip(*sorted(edges))
    w = rng.integers(1, max_w + 1, size=len(eu)).astype(float)
    g = Graph.from_edges(n, eu, ev, w)
    assert is_connected(g)
    return g


def random_tree_graph(n: int, seed: int, max_w: int = 10) -> Graph:
    """Random attachment tree with integer weights in {1..max_w}."""
    rng = np.random.default_rng(seed)
    us = np.arange(1, n)
    vs = np.array([rng.integers(0, i) for i in range(1, n)])
    w = rng.integers(1, max_w + 1, size=n - 1).astype(float)
    return Graph.from_edges(n, us, vs, w)


def bellman_ford(graph: Graph, source: int) -> np.ndarray:
    """Independent shortest-path oracle: edge relaxation to fixpoint."""
    dist = np.full(graph.n, np.inf)
    dist[source] = 0.0
    src = np.repeat(np.arange(graph.n), np.diff(graph.indptr))
    dst = graph.indices
    for _ in range(graph.n):
        relaxed = dist[src] + graph.weights
        new = dist.copy()
        np.minimum.at(new, dst, relaxed)
        if np.array_equal(new, dist):
            break
        dist = new
    return dist


def tree_distances_from(graph: Graph, tree_parent: np.ndarray,
                        source: int) -> np.ndarray:
    """Distance oracle along tree edges only, by BFS from the source."""
    n = graph.n
    nbrs: list[list[tuple[int, float]]] = [[] for _ in range(n)]
    for v in range(n):
        p = int(tree_parent[v])
        if p >= 0:
            w = graph.weight(v, p)
            nbrs[v].append((p, w))
            nbrs[p].append((v, w))
    dist = np.full(n, np.inf)
    dist[source] = 0.0
    frontier = [source]
    while frontier:
        nxt = []
        for u in frontier:
            for v, w in nbrs[u]:
                if not np.isfinite(dist[v]):
                    dist[v] = dist[u] + w
                    nxt.append(v)
        frontier = nxt
    return dist


def all_pairs_tree_distances(graph: Graph, tree_parent: np.ndarray) -> np.ndarray:
    n = graph.n
    out = np.empty((n, n))
    for s in range(n):
        out[s] = tree_distances_from(graph, tree_parent, s)
    return out
