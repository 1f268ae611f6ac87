"""Weighted undirected graphs: construction, generators, and shortest paths.

Graphs are stored in CSR form (``indptr``/``indices``/``weights``) with every
edge present in both directions and neighbor lists sorted by node id.  All
instances are immutable after construction so converged routing state can be
read concurrently.
"""
from __future__ import annotations

import io
import math
from dataclasses import dataclass
from enum import Enum
from typing import IO, Iterable, Optional

import numpy as np

from .errors import EdgeListParseError, EstimationError, ValidationError
from .seeds import rng_for, GLP_TAG, WEIGHT_TAG


class WeightMode(Enum):
    """Edge weighting: hop-count metric or integer costs drawn from {1..10}."""

    UNIT = "unit"
    UNIFORM_INT = "uniform"


@dataclass(frozen=True)
class GlpParams:
    """Knobs of the generalized-linear-preference attachment generator.

    ``edges_per_step`` may be fractional: a step adds floor(m) links plus one
    more with probability frac(m) (the original model was fitted to the
    Internet with a non-integer value).  The defaults were tuned once for an
    AS-like substrate: average degree around 7, a heavy low-degree fringe,
    and a tail exponent near ``lam`` (growth theory gives
    ``lam = 1 + (2*m - beta*(1-p)) / (m*(1+p))``, about 2.12 here).  Passing
    ``beta=None`` derives it from ``lam`` with that formula instead, for
    callers targeting a different exponent with compatible ``mix_prob`` and
    ``edges_per_step``.
    """

    n: int
    lam: float = 2.1
    clique_size: int = 3
    edges_per_step: float = 1.6
    mix_prob: float = 0.55
    beta: Optional[float] = 0.95

    def resolved_beta(self) -> float:
        if self.beta is not None:
            return self.beta
        m, p = self.edges_per_step, self.mix_prob
        return (2.0 * m - (self.lam - 1.0) * m * (1.0 + p)) / (1.0 - p)

    def validate(self) -> None:
        if self.n < 2:
            raise ValidationError(f"need at least 2 nodes, got {self.n}")
        if not 2 <= self.clique_size <= self.n:
            raise ValidationError(
                f"clique size {self.clique_size} outside [2, n={self.n}]"
            )
        if not 0.0 <= self.mix_prob <= 1.0:
            raise ValidationError(f"mix probability {self.mix_prob} outside [0, 1]")
        if self.mix_prob == 1.0 and self.n > self.clique_size:
            raise ValidationError("mix probability 1 never adds nodes; n unreachable")
        if self.edges_per_step < 1:
            raise ValidationError("need at least one edge per growth step")
        if math.ceil(self.edges_per_step) >= self.clique_size + 1:
            raise ValidationError("edges per step must not exceed the clique size")
        if self.resolved_beta() >= 1.0:
            raise ValidationError(
                f"preference shift beta={self.resolved_beta():.4f} >= 1 makes "
                "degree-1 nodes unattractive or weights nonpositive"
            )


class Graph:
    """Immutable undirected weighted graph in CSR form."""

    __slots__ = ("n", "indptr", "indices", "weights")

    def __init__(self, n: int, indptr: np.ndarray, indices: np.ndarray,
                 weights: np.ndarray):
        self.n = int(n)
        self.indptr = indptr
        self.indices = indices
        self.weights = weights
        for a in (indptr, indices, weights):
            a.flags.writeable = False

    # -- construction ------------------------------------------------------

    @staticmethod
    def from_edges(n: int, u: Iterable[int], v: Iterable[int],
                   w: Iterable[float]) -> "Graph":
        """Build a graph from undirected edge arrays.

        Self loops are rejected; duplicate edges collapse to the minimum
        weight; every weight must be strictly positive.
        """
        u = np.asarray(list(u) if not isinstance(u, np.ndarray) else u, dtype=np.int64)
        v = np.asarray(list(v) if not isinstance(v, np.ndarray) else v, dtype=np.int64)
        w = np.asarray(list(w) if not isinstance(w, np.ndarray) else w, dtype=np.float64)
        if not (u.shape == v.shape == w.shape):
            raise ValidationError("edge arrays must have identical length")
        if u.size and (u.min() < 0 or v.min() < 0 or max(u.max(), v.max()) >= n):
            raise ValidationError("edge endpoint outside [0, n)")
        if np.any(u == v):
            raise ValidationError("self loops are not allowed")
        if np.any(w <= 0) or not np.all(np.isfinite(w)):
            raise ValidationError("edge weights must be strictly positive and finite")

        lo, hi = np.minimum(u, v), np.maximum(u, v)
        keys = lo * np.int64(n) + hi
        order = np.lexsort((w, keys))
        keys, w = keys[order], w[order]
        first = np.ones(keys.size, dtype=bool)
        first[1:] = keys[1:] != keys[:-1]
        keys, w = keys[first], w[first]  # min weight wins: sorted by (key, w)
        lo, hi = keys // n, keys % n

        src = np.concatenate([lo, hi])
        dst = np.concatenate([hi, lo])
        ww = np.concatenate([w, w])
        order = np.lexsort((dst, src))
        src, dst, ww = src[order], dst[order], ww[order]
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.add.at(indptr, src + 1, 1)
        np.cumsum(indptr, out=indptr)
        return Graph(n, indptr, dst.astype(np.int32), ww)

    # -- basic queries -----------------------------------------------------

    @property
    def num_edges(self) -> int:
        return self.indices.size // 2

    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr).astype(np.int64)

    def max_degree(self) -> int:
        return int(np.diff(self.indptr).max()) if self.n else 0

    def max_weight(self) -> float:
        return float(self.weights.max()) if self.weights.size else 0.0

    def neighbors(self, u: int) -> np.ndarray:
        return self.indices[self.indptr[u]:self.indptr[u + 1]]

    def neighbor_weights(self, u: int) -> np.ndarray:
        return self.weights[self.indptr[u]:self.indptr[u + 1]]

    def weight(self, u: int, v: int) -> float:
        row = self.neighbors(u)
        i = np.searchsorted(row, v)
        if i >= row.size or row[i] != v:
            raise KeyError(f"no edge ({u}, {v})")
        return float(self.weights[self.indptr[u] + i])

    def has_edge(self, u: int, v: int) -> bool:
        row = self.neighbors(u)
        i = np.searchsorted(row, v)
        return bool(i < row.size and row[i] == v)

    def edge_array(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Each undirected edge once, as (u, v, w) with u < v."""
        src = np.repeat(np.arange(self.n, dtype=np.int64), np.diff(self.indptr))
        keep = src < self.indices
        return src[keep], self.indices[keep].astype(np.int64), self.weights[keep]

    def __eq__(self, other) -> bool:
        return (isinstance(other, Graph) and self.n == other.n
                and np.array_equal(self.indptr, other.indptr)
                and np.array_equal(self.indices, other.indices)
                and np.array_equal(self.weights, other.weights))

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, edges={self.num_edges})"


# -- file I/O ---------------------------------------------------------------

def load_edge_list(source: IO[bytes] | IO[str] | str | bytes) -> tuple[Graph, np.ndarray]:
    """Parse a whitespace edge list ("u v" or "u v w" per line).

    '#' starts a comment line and blank lines are skipped.  Node ids are
    arbitrary nonnegative integers; they are compacted to 0..n-1 and the
    original ids are returned as the second element (index = compact id).
    Duplicate edges collapse to their minimum weight.
    """
    if isinstance(source, bytes):
        text = source.decode("utf-8")
    elif isinstance(source, str):
        text = source
    else:
        data = source.read()
        text = data.decode("utf-8") if isinstance(data, bytes) else data

    us, vs, ws = [], [], []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) not in (2, 3):
            raise EdgeListParseError(line_no, f"expected 2 or 3 fields, got {len(parts)}")
        try:
            a, b = int(parts[0]), int(parts[1])
        except ValueError:
            raise EdgeListParseError(line_no, f"non-integer node id in {parts[:2]}")
        if a < 0 or b < 0:
            raise EdgeListParseError(line_no, "node ids must be nonnegative")
        if len(parts) == 3:
            try:
                weight = float(parts[2])
            except ValueError:
                raise EdgeListParseError(line_no, f"bad weight {parts[2]!r}")
        else:
            weight = 1.0
        if not weight > 0 or not math.isfinite(weight):
            raise EdgeListParseError(line_no, f"weight must be > 0, got {weight}")
        if a == b:
            raise EdgeListParseError(line_no, f"self loop at node {a}")
        us.append(a)
        vs.append(b)
        ws.append(weight)

    if not us:
        return Graph.from_edges(0, [], [], []), np.empty(0, dtype=np.int64)
    orig = np.unique(np.concatenate([np.asarray(us, dtype=np.int64),
                                     np.asarray(vs, dtype=np.int64)]))
    cu = np.searchsorted(orig, np.asarray(us, dtype=np.int64))
    cv = np.searchsorted(orig, np.asarray(vs, dtype=np.int64))
    return Graph.from_edges(orig.size, cu, cv, ws), orig


def dump_edge_list(graph: Graph, stream: IO[str], header: str = "") -> None:
    """Write the graph in the edge-list format accepted by load_edge_list."""
    if header:
        for line in header.splitlines():
            stream.write(f"# {line}\n")
    u, v, w = graph.edge_array()
    for a, b, x in zip(u, v, w):
        if x == 1.0:
            stream.write(f"{a} {b}\n")
        else:
            stream.write(f"{a} {b} {x:.12g}\n")


# -- connectivity -----------------------------------------------------------

def component_labels(graph: Graph) -> np.ndarray:
    """Connected-component label per node (labels are 0..k-1, discovery order)."""
    labels = np.full(graph.n, -1, dtype=np.int64)
    label = 0
    for start in range(graph.n):
        if labels[start] != -1:
            continue
        labels[start] = label
        frontier = np.array([start], dtype=np.int64)
        while frontier.size:
            nbrs = _neighbor_block(graph, frontier)
            nbrs = nbrs[labels[nbrs] == -1]
            frontier = np.unique(nbrs)
            labels[frontier] = label
        label += 1
    return labels


def _neighbor_block(graph: Graph, nodes: np.ndarray) -> np.ndarray:
    counts = graph.indptr[nodes + 1] - graph.indptr[nodes]
    out = np.empty(int(counts.sum()), dtype=np.int64)
    pos = 0
    for u, c in zip(nodes, counts):
        out[pos:pos + c] = graph.indices[graph.indptr[u]:graph.indptr[u + 1]]
        pos += c
    return out


def is_connected(graph: Graph) -> bool:
    if graph.n == 0:
        return True
    return bool((component_labels(graph) == 0).all())


def largest_component(graph: Graph) -> Graph:
    """Induced subgraph on the largest connected component, ids recompacted."""
    if graph.n == 0:
        return graph
    labels = component_labels(graph)
    big = np.argmax(np.bincount(labels))
    keep = np.flatnonzero(labels == big)
    if keep.size == graph.n:
        return graph
    remap = np.full(graph.n, -1, dtype=np.int64)
    remap[keep] = np.arange(keep.size)
    u, v, w = graph.edge_array()
    mask = (remap[u] >= 0) & (remap[v] >= 0)
    return Graph.from_edges(keep.size, remap[u[mask]], remap[v[mask]], w[mask])


def bfs_hops(graph: Graph, source: int) -> np.ndarray:
    """Unweighted hop distance from source (-1 if unreachable)."""
    depth = np.full(graph.n, -1, dtype=np.int64)
    depth[source] = 0
    frontier = np.array([source], dtype=np.int64)
    d = 0
    while frontier.size:
        d += 1
        nbrs = _neighbor_block(graph, frontier)
        nbrs = nbrs[depth[nbrs] == -1]
        frontier = np.unique(nbrs)
        depth[frontier] = d
    return depth


def diameter_estimate(graph: Graph) -> int:
    """Double-sweep BFS estimate of the unweighted diameter (lower bound)."""
    if graph.n <= 1:
        return 0
    d0 = bfs_hops(graph, 0)
    far = int(np.argmax(d0))
    d1 = bfs_hops(graph, far)
    return int(max(d0.max(), d1.max()))


# -- generators and weighting ------------------------------------------------

def generate_glp(params: GlpParams, seed: int) -> Graph:
    """Grow a connected power-law graph by shifted linear preference.

    Starts from a clique of ``clique_size`` nodes; each step either adds
    ``edges_per_step`` new links between existing nodes (probability
    ``mix_prob``) or attaches a new node with ``edges_per_step`` links.
    Attachment probability is proportional to ``degree - beta``.  All edges
    are created with unit weight; see :func:`assign_weights`.
    """
    params.validate()
    rng = rng_for(seed, GLP_TAG)
    n, m0 = params.n, params.clique_size
    m_lo = int(math.floor(params.edges_per_step))
    m_frac = params.edges_per_step - m_lo
    beta = params.resolved_beta()

    cap = 2 * (m0 * m0 + (n - m0 + 1) * (m_lo + 1) * 4 + 16)
    eu = np.empty(cap, dtype=np.int64)
    ev = np.empty(cap, dtype=np.int64)
    ne = 0
    deg = np.zeros(n, dtype=np.float64)
    adj: list[set[int]] = [set() for _ in range(n)]

    def add_edge(a: int, b: int) -> None:
        nonlocal ne
        eu[ne], ev[ne] = a, b
        ne += 1
        deg[a] += 1
        deg[b] += 1
        adj[a].add(b)
        adj[b].add(a)

    for i in range(m0):
        for j in range(i + 1, m0):
            add_edge(i, j)

    alive = m0
    while alive < n:
        grow_node = rng.random() >= params.mix_prob
        m = m_lo + (1 if m_frac > 0.0 and rng.random() < m_frac else 0)
        if grow_node:
            m = min(m, alive)
            pref = deg[:alive] - beta
            cdf = np.cumsum(pref)
            targets: set[int] = set()
            guard = 0
            while len(targets) < m and guard < 50 * m:
                guard += 1
                t = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
                targets.add(min(t, alive - 1))
            for t in sorted(targets):
                add_edge(alive, t)
            alive += 1
        else:
            pref = deg[:alive] - beta
            cdf = np.cumsum(pref)
            for _ in range(m):
                for _attempt in range(50):
                    a = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
                    b = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
                    a, b = min(a, alive - 1), min(b, alive - 1)
                    if a != b and b not in adj[a]:
                        add_edge(a, b)
                        break

    return Graph.from_edges(n, eu[:ne], ev[:ne], np.ones(ne))


def assign_weights(graph: Graph, mode: WeightMode, seed: int) -> Graph:
    """Return a copy of the graph with re-drawn edge weights.

    UNIT sets every weight to 1.  UNIFORM_INT draws one integer per
    undirected edge, uniformly from {1..10}, in canonical (u < v) edge order;
    both directions get the same value and the draw is seed-deterministic.
    """
    u, v, _ = graph.edge_array()
    if mode is WeightMode.UNIT:
        w = np.ones(u.size)
    elif mode is WeightMode.UNIFORM_INT:
        rng = rng_for(seed, WEIGHT_TAG)
        w = rng.integers(1, 11, size=u.size).astype(np.float64)
    else:
        raise ValidationError(f"unknown weight mode {mode!r}")
    return Graph.from_edges(graph.n, u, v, w)


# -- shortest paths ----------------------------------------------------------

def shortest_path(graph: Graph, src: int, dst: int) -> tuple[float, Optional[list[int]]]:
    """Exact Dijkstra distance and one witness path.

    The witness is canonical: every hop uses the smallest-id tight
    predecessor.  Returns (inf, None) when dst is unreachable.
    """
    if not (0 <= src < graph.n and 0 <= dst < graph.n):
        raise ValidationError(f"endpoint outside graph of {graph.n} nodes")
    if src == dst:
        return 0.0, [src]
    from .kernels import backend
    dist, parent = backend.sssp(graph.indptr, graph.indices, graph.weights, src)
    if not np.isfinite(dist[dst]):
        return math.inf, None
    path = [dst]
    cur = dst
    while cur != src:
        cur = int(parent[cur])
        path.append(cur)
    path.reverse()
    return float(dist[dst]), path


def sssp_distances(graph: Graph, src: int) -> np.ndarray:
    from .kernels import backend
    dist, _ = backend.sssp(graph.indptr, graph.indices, graph.weights, src)
    return dist


# -- degree-exponent estimation ----------------------------------------------

def hill_exponent(values: np.ndarray, k_min: float = 2.0) -> float:
    """Continuous maximum-likelihood (Hill) estimate of a power-law exponent.

    Fits the tail ``values >= k_min``:  lambda = 1 + k / sum(log(v / k_min)).
    """
    values = np.asarray(values, dtype=np.float64)
    tail = values[values >= k_min]
    if tail.size < 100:
        raise EstimationError(
            f"need at least 100 observations >= {k_min}, got {tail.size}")
    logsum = float(np.log(tail / k_min).sum())
    if logsum <= 0.0:
        raise EstimationError("degenerate tail (all observations at k_min)")
    return 1.0 + tail.size / logsum


def estimate_power_law_exponent(graph: Graph, k_min: int = 2) -> float:
    """Hill estimate of the degree-distribution exponent (degrees >= k_min)."""
    return hill_exponent(graph.degrees().astype(np.float64), float(k_min))
