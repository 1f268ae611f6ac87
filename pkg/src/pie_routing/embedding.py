"""Isometric embedding of converged trees into signed coordinate vectors.

The root starts at [0].  A parent with s children assigns each child a
prefix-free binary code (no code when s = 1); the child inherits every
parent coordinate pushed away from zero by the link weight and appends one
-w/+w coordinate per code bit.  Distances are the max-norm over the common
coordinate prefix, which reproduces tree distances exactly.

Note the root placeholder: every vector carries a leading coordinate equal
to +height(u).  It never changes any pairwise distance (the difference of
two heights never exceeds the tree distance), but dumps therefore show one
more coordinate than the minimal presentation.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConvergenceError, ValidationError
from .graph import Graph
from .kernels import backend
from .simkernel import SimConfig, run_until_converged
from .trees import Forest, TreeId


@dataclass(frozen=True)
class CoordinateVector:
    tree: TreeId
    values: tuple[float, ...]

    @property
    def dim(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class CoordMsg:
    coords: tuple[float, ...]
    code: Optional[tuple[int, ...]]  # absent iff the parent has one child


def prefix_free_codes(s: int) -> list[tuple[int, ...]]:
    """Balanced prefix-free codes for s equiprobable children.

    s = 1 yields no code at all.  Otherwise, with h = ceil(log2 s), the
    first 2^h - s children (by rank) get (h-1)-bit codes and the remaining
    2*(s - 2^(h-1)) get h-bit codes; codes are canonical (counting upward)
    within each length, shorter codes first.
    """
    if s < 1:
        raise ValidationError(f"need at least one child, got {s}")
    if s == 1:
        return []
    h = (s - 1).bit_length()
    n_short = (1 << h) - s
    codes = []
    for rank in range(s):
        if rank < n_short:
            length, value = h - 1, rank
        else:
            length, value = h, (n_short << 1) + (rank - n_short)
        codes.append(tuple((value >> (length - 1 - k)) & 1 for k in range(length)))
    return codes


def apply_coord_msg(child_coords: tuple[float, ...], msg: CoordMsg,
                    link_weight: float) -> tuple[float, ...]:
    """Child coordinates from one parent message.

    Every inherited coordinate moves away from zero by the link weight
    (zero counts as nonnegative), then one -w/+w coordinate is appended per
    code bit.  The previous child coordinates only matter for the caller's
    change detection.
    """
    if link_weight <= 0:
        raise ValidationError("link weight must be positive")
    w = link_weight
    out = [c - w if c < 0 else c + w for c in msg.coords]
    if msg.code:
        out.extend(-w if bit == 0 else w for bit in msg.code)
    return tuple(out)


def linf_distance(a: CoordinateVector, b: CoordinateVector) -> float:
    """Max-norm over the common coordinate prefix of two vectors."""
    if a.tree != b.tree:
        raise ValidationError(f"vectors from different trees: {a.tree} vs {b.tree}")
    k = min(len(a.values), len(b.values))
    return max(abs(a.values[i] - b.values[i]) for i in range(k))


class CoordProtocol:
    """coordinates-maintainer handlers over one level's converged forest."""

    def __init__(self, graph: Graph, forest: Forest,
                 members: Optional[np.ndarray] = None):
        self.graph = graph
        self.forest = forest
        mask = np.zeros(graph.n, dtype=bool)
        mask[members if members is not None else np.arange(graph.n)] = True
        self.active = mask
        self._kids: list[list[int]] = [[] for _ in range(graph.n)]
        for v in range(graph.n):
            p = int(forest.parent[v])
            if p != -1 and mask[v]:
                self._kids[p].append(v)  # ascending by construction

    def _children(self, node: int) -> list[int]:
        return self._kids[node]

    def _notify(self, node: int, coords: tuple[float, ...]):
        kids = self._children(node)
        s = len(kids)
        if s == 0:
            return []
        if s == 1:
            return [(kids[0], CoordMsg(coords, None))]
        codes = prefix_free_codes(s)
        return [(kid, CoordMsg(coords, codes[i])) for i, kid in enumerate(kids)]

    def init_state(self, node: int):
        # (coords, children snapshot for change-in-childhood detection)
        return ((0.0,), None)

    def periodic(self, node, state):
        if not self.active[node]:
            return state, []
        coords, seen = state
        kids = tuple(self._children(node))
        if kids != seen:
            return (coords, kids), self._notify(node, coords)
        return state, []

    def handle(self, node, state, sender, msg: CoordMsg):
        if not self.active[node] or sender != self.forest.parent[node]:
            return state, []
        coords, seen = state
        new_coords = apply_coord_msg(coords, msg, self.graph.weight(node, sender))
        if new_coords == coords:
            return state, []
        return (new_coords, seen), self._notify(node, new_coords)


def embed_tree(forest: Forest, tree: TreeId, graph: Graph,
               config: Optional[SimConfig] = None) -> dict[int, CoordinateVector]:
    """Run the distributed coordinates-maintainer for one converged tree.

    Returns the stable vector of every member node.  Non-convergence (which
    a static verified tree cannot produce) is propagated as an error.
    """
    if tree.level != forest.level:
        raise ValidationError(f"tree {tree} does not belong to level {forest.level}")
    members = forest.members(tree.root)
    if members.size == 0:
        raise ValidationError(f"no members in tree {tree}")
    if config is None:
        depth = _hop_depths(forest)[members].max()
        config = SimConfig(max_rounds=int(depth) + 8)
    result = run_until_converged(graph, CoordProtocol(graph, forest, members),
                                 config)
    if not result.converged:
        raise ConvergenceError(
            f"embedding of {tree} did not converge within {config.max_rounds} rounds")
    return {int(u): CoordinateVector(tree, result.states[u][0]) for u in members}


def _hop_depths(forest: Forest) -> np.ndarray:
    depth = np.zeros(forest.n, dtype=np.int64)
    order = np.argsort(forest.height, kind="stable")
    for u in order:
        p = forest.parent[u]
        if p != -1:
            depth[u] = depth[p] + 1
    return depth


class CoordinateTable:
    """All converged coordinates: per-(level, node) vectors in flat arrays.

    ``off[l*n + u] : off[l*n + u + 1]`` slices node u's level-l vector out
    of ``val``.  Built by the one-pass traversal kernel; bit-identical to
    what the distributed protocol converges to (tested).
    """

    def __init__(self, graph: Graph, forests: list[Forest],
                 off: np.ndarray, val: np.ndarray):
        self.graph = graph
        self.forests = forests
        self.off = off
        self.val = val
        self.levels = len(forests)
        self.root = np.stack([f.root_id for f in forests])

    @property
    def n(self) -> int:
        return self.graph.n

    def vector(self, node: int, level: int) -> CoordinateVector:
        i = level * self.n + node
        vals = tuple(float(x) for x in self.val[self.off[i]:self.off[i + 1]])
        return CoordinateVector(self.forests[level].tree_of(node), vals)

    def node_coord_set(self, node: int) -> dict[TreeId, CoordinateVector]:
        return {self.forests[l].tree_of(node): self.vector(node, l)
                for l in range(self.levels)}

    def dims(self) -> np.ndarray:
        """Total coordinate count per node, summed over its m trees."""
        per = np.diff(self.off).reshape(self.levels, self.n)
        return per.sum(axis=0)

    def dims_per_level(self) -> np.ndarray:
        return np.diff(self.off).reshape(self.levels, self.n)


def build_coordinates(graph: Graph, forests: list[Forest]) -> CoordinateTable:
    """Embed every converged forest with the traversal kernel."""
    parent = np.stack([f.parent for f in forests])
    root = np.stack([f.root_id for f in forests])
    off, val = backend.embed_forest(graph.indptr, graph.indices, graph.weights,
                                    parent, root)
    return CoordinateTable(graph, forests, off, val)
