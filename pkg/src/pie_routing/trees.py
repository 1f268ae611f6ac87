"""Distributed construction of the multi-level spanning-tree forests.

Level 0 runs the classic spanning-tree election: every node starts as its
own root with key = degree + random salt, and the largest key wins the
whole graph.  Levels l >= 1 start from self-elected roots (probability
2^l/n per node) and every node joins the tree of the closest root, ties
toward the larger root id.  Trees are identified by (level, root node id).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .errors import ConvergenceError, ForestInvariantError, ValidationError
from .graph import Graph
from .kernels import backend
from .seeds import rng_for, SALT_TAG, ELECTION_TAG
from .simkernel import SimConfig, SimResult, run_until_converged


@dataclass(frozen=True)
class TreeId:
    level: int
    root: int


@dataclass(frozen=True)
class RootElection:
    """Election outcome: per-level root sets plus the level-0 keys."""

    level0_keys: np.ndarray          # degree + salt per node
    roots: tuple[frozenset[int], ...]  # index = level
    probabilities: tuple[float, ...]

    @property
    def levels(self) -> int:
        return len(self.roots)

    @property
    def level0_root(self) -> int:
        return int(np.argmax(self.level0_keys))


def elect_roots(graph: Graph, m: int, seed: int) -> RootElection:
    """Run the per-level root election.

    Level 0 has exactly one deterministic root (max degree + salt).  At
    level l >= 1 each node self-elects with probability min(1, 2^l/n); a
    level that elects nobody falls back to the level-0 root so every node
    always holds m coordinate sets.
    """
    if m < 1:
        raise ValidationError(f"need at least one level, got m={m}")
    n = graph.n
    if n < 1:
        raise ValidationError("empty graph")
    salt = rng_for(seed, SALT_TAG).random(n)
    keys = graph.degrees().astype(np.float64) + salt
    root0 = int(np.argmax(keys))
    roots: list[frozenset[int]] = [frozenset([root0])]
    probs: list[float] = [1.0 / n]
    draws = rng_for(seed, ELECTION_TAG).random((max(m - 1, 0), n))
    for level in range(1, m):
        p = min(1.0, (2 ** level) / n)
        elected = np.flatnonzero(draws[level - 1] < p)
        if elected.size == 0:
            elected = np.array([root0])
        roots.append(frozenset(int(u) for u in elected))
        probs.append(p)
    return RootElection(keys, tuple(roots), tuple(probs))


# -- Algorithm-level protocol (used by the sim kernel) -----------------------

@dataclass(frozen=True)
class TreeMsg:
    level: int
    root_key: float
    root_id: int
    height: float
    parent: int  # -1 when none


@dataclass(frozen=True)
class TreeLevelState:
    node: int
    level: int
    root_key: float
    root_id: int
    height: float
    parent: int  # -1 when none
    children: frozenset[int]


def handle_tree_msg(state: TreeLevelState, msg: TreeMsg, sender: int,
                    link_weight: float) -> TreeLevelState:
    """Fold one incoming tree message into the per-level state.

    Level 0 adopts on a larger root key, or the same key offered at a
    strictly smaller height; levels >= 1 adopt on a strictly smaller height,
    ties toward the larger root id.  The sender joins/leaves the children
    set according to the parent it advertises.
    """
    offer_h = msg.height + link_weight
    if state.level == 0:
        adopt = (msg.root_key > state.root_key
                 or (msg.root_key == state.root_key and offer_h < state.height))
    else:
        adopt = (offer_h < state.height
                 or (offer_h == state.height and msg.root_key > state.root_key))
    out = state
    if adopt:
        out = replace(out, root_key=msg.root_key, root_id=msg.root_id,
                      height=offer_h, parent=sender)
    if msg.parent == state.node and sender not in out.children:
        out = replace(out, children=out.children | {sender})
    elif msg.parent != state.node and sender in out.children:
        out = replace(out, children=out.children - {sender})
    return out


class TreeProtocol:
    """tree-maintainer handlers for all m levels at once."""

    def __init__(self, graph: Graph, election: RootElection):
        self.graph = graph
        self.election = election

    def init_state(self, node: int) -> tuple[TreeLevelState, ...]:
        levels = []
        levels.append(TreeLevelState(
            node, 0, float(self.election.level0_keys[node]), node, 0.0, -1,
            frozenset()))
        for level in range(1, self.election.levels):
            if node in self.election.roots[level]:
                levels.append(TreeLevelState(
                    node, level, float(node), node, 0.0, -1, frozenset()))
            else:
                levels.append(TreeLevelState(
                    node, level, -math.inf, -1, math.inf, -1, frozenset()))
        return tuple(levels)

    def periodic(self, node, state):
        msgs = []
        for v in self.graph.neighbors(node):
            for ls in state:
                msgs.append((int(v), TreeMsg(ls.level, ls.root_key, ls.root_id,
                                             ls.height, ls.parent)))
        return state, msgs

    def handle(self, node, state, sender, msg: TreeMsg):
        w = self.graph.weight(node, sender)
        ls = handle_tree_msg(state[msg.level], msg, sender, w)
        if ls is state[msg.level]:
            return state, []
        return state[:msg.level] + (ls,) + state[msg.level + 1:], []


# -- converged forests -------------------------------------------------------

class Forest:
    """Converged per-level forest state as arrays over nodes."""

    __slots__ = ("level", "root_key", "root_id", "height", "parent")

    def __init__(self, level: int, root_key, root_id, height, parent):
        self.level = level
        self.root_key = np.asarray(root_key, dtype=np.float64)
        self.root_id = np.asarray(root_id, dtype=np.int32)
        self.height = np.asarray(height, dtype=np.float64)
        self.parent = np.asarray(parent, dtype=np.int32)

    @property
    def n(self) -> int:
        return self.root_id.size

    def tree_of(self, node: int) -> TreeId:
        return TreeId(self.level, int(self.root_id[node]))

    def roots(self) -> np.ndarray:
        return np.flatnonzero(self.parent == -1)

    def children(self, node: int) -> np.ndarray:
        return np.flatnonzero(self.parent == node)

    def members(self, root: int) -> np.ndarray:
        return np.flatnonzero(self.root_id == root)

    def tree_sizes(self) -> dict[int, int]:
        uniq, counts = np.unique(self.root_id, return_counts=True)
        return {int(r): int(c) for r, c in zip(uniq, counts)}


@dataclass
class ConvergenceInfo:
    rounds: int
    messages: int
    converged: bool


def _initial_arrays(graph: Graph, election: RootElection):
    n, m = graph.n, election.levels
    key = np.full((m, n), -np.inf)
    root = np.full((m, n), -1, dtype=np.int32)
    height = np.full((m, n), np.inf)
    key[0] = election.level0_keys
    root[0] = np.arange(n)
    height[0] = 0.0
    for level in range(1, m):
        idx = np.fromiter(election.roots[level], dtype=np.int64)
        key[level, idx] = idx.astype(np.float64)
        root[level, idx] = idx
        height[level, idx] = 0.0
    key_major = np.zeros(m, dtype=bool)
    key_major[0] = True
    return key, root, height, key_major


def default_max_rounds(graph: Graph) -> int:
    from .graph import diameter_estimate
    diam = diameter_estimate(graph)
    scale = max(1, int(math.ceil(graph.max_weight())))
    return max(32, (scale + 1) * diam + 8)


def build_forests(graph: Graph, election: RootElection,
                  config: Optional[SimConfig] = None,
                  engine: str = "kernel") -> tuple[list[Forest], ConvergenceInfo]:
    """Converge the tree-maintainer on every level.

    ``engine="kernel"`` runs the array kernel (same round semantics, fast);
    ``engine="protocol"`` drives the per-node handlers through the sim
    kernel.  Both produce identical forests; see tests.
    """
    if config is None:
        config = SimConfig(max_rounds=default_max_rounds(graph))
    if engine == "protocol":
        return _build_forests_protocol(graph, election, config)
    key, root, height, key_major = _initial_arrays(graph, election)
    key, root, height, parent, rounds, messages, converged = backend.tree_converge(
        graph.indptr, graph.indices, graph.weights, key, root, height,
        key_major, config.max_rounds, config.convergence_window)
    if not converged:
        raise ConvergenceError(
            f"tree construction did not converge within {config.max_rounds} rounds")
    forests = [Forest(l, key[l], root[l], height[l], parent[l])
               for l in range(election.levels)]
    return forests, ConvergenceInfo(int(rounds), int(messages), True)


def _build_forests_protocol(graph, election, config):
    result: SimResult = run_until_converged(
        graph, TreeProtocol(graph, election), config)
    if not result.converged:
        raise ConvergenceError(
            f"tree construction did not converge within {config.max_rounds} rounds")
    m, n = election.levels, graph.n
    forests = []
    for level in range(m):
        key = np.array([result.states[u][level].root_key for u in range(n)])
        root = np.array([result.states[u][level].root_id for u in range(n)], np.int32)
        height = np.array([result.states[u][level].height for u in range(n)])
        parent = np.array([result.states[u][level].parent for u in range(n)], np.int32)
        forests.append(Forest(level, key, root, height, parent))
    return forests, ConvergenceInfo(result.rounds, result.messages, True)


# -- verification -------------------------------------------------------------

@dataclass
class ForestDiagnostics:
    level: int
    tree_sizes: dict[int, int]
    violations: list[str]

    @property
    def ok(self) -> bool:
        return not self.violations


def verify_forest(forest: Forest, graph: Graph,
                  strict: bool = True) -> ForestDiagnostics:
    """Check structural invariants of a converged forest.

    Asserts acyclic parent pointers, root/height consistency along parents,
    and that every node's height equals the exact Dijkstra distance to the
    nearest root of this level (which its adopted root must then attain,
    since root ids propagate along parent pointers).  Height consistency
    with strictly positive weights already rules out parent cycles.
    """
    n = graph.n
    violations: list[str] = []
    parent = forest.parent
    root_mask = parent == -1

    for u in np.flatnonzero(~np.isfinite(forest.height))[:10]:
        violations.append(f"node {u} has non-finite height {forest.height[u]}")
    for u in np.flatnonzero(root_mask):
        if forest.root_id[u] != u:
            violations.append(f"parentless node {u} claims root {forest.root_id[u]}")
        if forest.height[u] != 0.0:
            violations.append(f"root {u} has nonzero height {forest.height[u]}")
    for u in np.flatnonzero(~root_mask):
        p = int(parent[u])
        if forest.root_id[p] != forest.root_id[u]:
            violations.append(f"node {u} and its parent {p} disagree on the root")
            continue
        if not graph.has_edge(u, p):
            violations.append(f"node {u}: parent {p} is not a neighbor")
            continue
        if forest.height[u] != forest.height[p] + graph.weight(u, p):
            violations.append(
                f"node {u}: height {forest.height[u]} != parent height + w")

    dist = backend.sssp_multi(graph.indptr, graph.indices, graph.weights,
                              root_mask)
    bad = np.flatnonzero(dist != forest.height)
    for u in bad[:10]:
        violations.append(
            f"node {u}: height {forest.height[u]} != nearest-root distance {dist[u]}")

    diag = ForestDiagnostics(forest.level, forest.tree_sizes(), violations)
    if strict and violations:
        raise ForestInvariantError(
            f"forest at level {forest.level} violates invariants", violations)
    return diag
