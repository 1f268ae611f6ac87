"""Greedy next-hop selection over the multi-tree coordinate sets.

A candidate (neighbor u, level l) is eligible when u is alive, one level-l
tree contains u, the current node v and the destination t, and u is
strictly closer to t than v in that tree.  The chosen hop minimizes
w(v,u) + |t - u|_inf, ties to the smaller neighbor id then the lower
level.  Every step therefore makes strict progress in the tree used at
that step; with a single tree the level-0 distance decreases monotonically
along the whole route.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Mapping, Optional

import numpy as np

from .errors import ValidationError
from .graph import Graph, diameter_estimate
from .kernels import backend, DELIVERED, STUCK, TTL_EXCEEDED
from .embedding import CoordinateTable, CoordinateVector, linf_distance
from .simkernel import FailureSet
from .trees import TreeId


class Outcome(Enum):
    DELIVERED = "delivered"
    STUCK = "stuck"
    TTL_EXCEEDED = "ttlExceeded"


_OUTCOME_BY_CODE = {DELIVERED: Outcome.DELIVERED, STUCK: Outcome.STUCK,
                    TTL_EXCEEDED: Outcome.TTL_EXCEEDED}


@dataclass(frozen=True)
class RouteTrace:
    path: tuple[int, ...]
    length: float
    outcome: Outcome
    used_levels: tuple[int, ...] = ()

    @property
    def hops(self) -> int:
        return len(self.path) - 1


def common_trees(a: Mapping[TreeId, CoordinateVector],
                 b: Mapping[TreeId, CoordinateVector]) -> list[TreeId]:
    """Trees both coordinate sets share, lowest level first."""
    return sorted((t for t in a if t in b), key=lambda t: t.level)


def default_ttl(graph: Graph) -> int:
    """4x the unweighted-diameter estimate, scaled by the maximum edge
    weight when the graph is weighted (per-hop progress is at least one
    cost unit, so hop counts scale with the weighted diameter)."""
    scale = max(1, int(math.ceil(graph.max_weight())))
    return max(16, 4 * diameter_estimate(graph) * scale)


def _alive_mask(graph: Graph, failures: Optional[FailureSet]) -> np.ndarray:
    if failures is None:
        return np.ones(graph.n, dtype=bool)
    return failures.alive_mask(graph.n)


def next_hop(v: int, t: int, coords: CoordinateTable, graph: Graph,
             failures: Optional[FailureSet] = None
             ) -> Optional[tuple[int, TreeId]]:
    """Reference greedy choice at v toward t (None when nothing progresses).

    The bulk kernel implements the same selection; the two are
    equivalence-tested.
    """
    if v == t:
        raise ValidationError("next_hop undefined for v == t")
    alive = _alive_mask(graph, failures)
    m = coords.levels
    dv = [None] * m
    for l in range(m):
        if coords.root[l, v] == coords.root[l, t]:
            dv[l] = linf_distance(coords.vector(v, l), coords.vector(t, l))
    best = None  # (cost, neighbor, level)
    for u, w in zip(graph.neighbors(v), graph.neighbor_weights(v)):
        u = int(u)
        if not alive[u]:
            continue
        for l in range(m):
            if dv[l] is None or coords.root[l, u] != coords.root[l, v]:
                continue
            du = linf_distance(coords.vector(u, l), coords.vector(t, l))
            if du < dv[l]:
                cost = w + du
                if best is None or cost < best[0]:
                    best = (cost, u, l)
    if best is None:
        return None
    return best[1], TreeId(best[2], int(coords.root[best[2], best[1]]))


def trace_route(s: int, d: int, coords: CoordinateTable, graph: Graph,
                failures: Optional[FailureSet] = None,
                ttl: Optional[int] = None) -> RouteTrace:
    """Apply next_hop until delivery, a dead end, or the hop budget."""
    if ttl is None:
        ttl = default_ttl(graph)
    if s == d:
        return RouteTrace((s,), 0.0, Outcome.DELIVERED)
    path = [s]
    length = 0.0
    levels: list[int] = []
    cur = s
    for _ in range(ttl):
        hop = next_hop(cur, d, coords, graph, failures)
        if hop is None:
            return RouteTrace(tuple(path), length, Outcome.STUCK, tuple(levels))
        nxt, tree = hop
        length += graph.weight(cur, nxt)
        path.append(nxt)
        if tree.level not in levels:
            levels.append(tree.level)
        cur = nxt
        if cur == d:
            return RouteTrace(tuple(path), length, Outcome.DELIVERED,
                              tuple(sorted(levels)))
    return RouteTrace(tuple(path), length, Outcome.TTL_EXCEEDED, tuple(sorted(levels)))


def stretch(trace: RouteTrace, oracle_distance: float) -> float:
    """Routed length over the exact shortest distance for the same pair."""
    if trace.outcome is not Outcome.DELIVERED:
        raise ValidationError("stretch is defined only for delivered routes")
    if len(trace.path) < 2:
        raise ValidationError("stretch is undefined for s == d")
    return trace.length / oracle_distance


@dataclass
class BulkTraces:
    """Array-of-routes result from the trace kernel."""

    src: np.ndarray
    dst: np.ndarray
    outcome: np.ndarray      # int8 codes (kernel DELIVERED/STUCK/TTL_EXCEEDED)
    length: np.ndarray
    hops: np.ndarray
    levels_mask: np.ndarray  # uint64 bitmask of used levels
    paths: Optional[np.ndarray] = None

    @property
    def delivered(self) -> np.ndarray:
        return self.outcome == DELIVERED

    @property
    def delivered_ratio(self) -> float:
        return float(self.delivered.mean()) if self.src.size else 1.0

    @property
    def ttl_exceeded_count(self) -> int:
        return int((self.outcome == TTL_EXCEEDED).sum())

    def route_trace(self, i: int) -> RouteTrace:
        if self.paths is None:
            raise ValueError("paths were not recorded")
        row = self.paths[i]
        path = tuple(int(x) for x in row[row >= 0])
        levels = tuple(l for l in range(64)
                       if int(self.levels_mask[i]) >> l & 1)
        return RouteTrace(path, float(self.length[i]),
                          _OUTCOME_BY_CODE[int(self.outcome[i])], levels)


def trace_routes_bulk(coords: CoordinateTable, graph: Graph,
                      src: np.ndarray, dst: np.ndarray,
                      failures: Optional[FailureSet] = None,
                      ttl: Optional[int] = None,
                      record_paths: bool = False) -> BulkTraces:
    """Kernel-backed traces for many (src, dst) pairs at once."""
    if ttl is None:
        ttl = default_ttl(graph)
    src = np.asarray(src, dtype=np.int32)
    dst = np.asarray(dst, dtype=np.int32)
    alive = _alive_mask(graph, failures)
    width = ttl + 1 if record_paths else 1
    paths = np.empty((src.size, width), dtype=np.int32)
    outcome, length, hops, levels = backend.trace_routes(
        graph.indptr, graph.indices, graph.weights, coords.root,
        coords.off, coords.val, src, dst, alive, ttl, paths)
    return BulkTraces(src, dst, outcome, length, hops, levels,
                      paths if record_paths else None)
