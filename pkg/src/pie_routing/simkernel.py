"""Deterministic round-based simulation of periodic message-passing protocols.

Each round every live node first emits its periodic messages (based on its
state at the start of the round), then processes its inbox in ascending
sender order; messages emitted while processing are delivered next round.
The run converges when no node state changes for ``convergence_window``
consecutive rounds.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Iterable, Optional, Protocol

import numpy as np

from .graph import Graph
from .seeds import rng_for, FAILURE_TAG


@dataclass(frozen=True)
class SimConfig:
    max_rounds: int = 10_000
    seed: int = 0
    convergence_window: int = 1

    def __post_init__(self):
        if self.max_rounds < 1:
            raise ValueError("max_rounds must be >= 1")
        if self.convergence_window < 1:
            raise ValueError("convergence_window must be >= 1")


@dataclass(frozen=True)
class FailureSet:
    """Nodes removed from the simulation: they neither send nor receive."""

    failed: frozenset[int] = field(default_factory=frozenset)

    def alive_mask(self, n: int) -> np.ndarray:
        mask = np.ones(n, dtype=bool)
        for u in self.failed:
            mask[u] = False
        return mask

    def __contains__(self, node: int) -> bool:
        return node in self.failed

    def __len__(self) -> int:
        return len(self.failed)


def inject_failures(graph: Graph, fraction: float, seed: int) -> FailureSet:
    """Mark floor(fraction*n) uniformly chosen nodes as failed."""
    if not 0.0 <= fraction < 1.0:
        raise ValueError(f"failure fraction {fraction} outside [0, 1)")
    count = int(fraction * graph.n)
    if count == 0:
        return FailureSet()
    rng = rng_for(seed, FAILURE_TAG)
    chosen = rng.choice(graph.n, size=count, replace=False)
    return FailureSet(frozenset(int(u) for u in chosen))


class NodeProtocol(Protocol):
    """Per-node handlers driven by the kernel.

    States must be treated as immutable: handlers return a (possibly new)
    state and emission lists of (destination, message) pairs.  Handlers must
    be deterministic functions of their inputs.
    """

    def init_state(self, node: int) -> Any: ...

    def periodic(self, node: int, state: Any) -> tuple[Any, list[tuple[int, Any]]]: ...

    def handle(self, node: int, state: Any, sender: int,
               msg: Any) -> tuple[Any, list[tuple[int, Any]]]: ...


@dataclass
class SimResult:
    converged: bool
    states: list
    rounds: int
    messages: int


def run_until_converged(graph: Graph, protocol: NodeProtocol, config: SimConfig,
                        failures: Optional[FailureSet] = None) -> SimResult:
    """Drive the protocol to a fixed point (or to max_rounds).

    Returns the final states either way; ``converged`` distinguishes the
    explicit non-convergence result.  ``messages`` counts every send.
    """
    n = graph.n
    down = failures.failed if failures else frozenset()
    live = [u for u in range(n) if u not in down]
    states: list = [None] * n
    for u in live:
        states[u] = protocol.init_state(u)

    reactive: list[list[tuple[int, Any]]] = [[] for _ in range(n)]
    messages = 0
    quiet = 0
    rounds = 0
    for r in range(1, config.max_rounds + 1):
        rounds = r
        inboxes: list[list[tuple[int, Any]]] = [[] for _ in range(n)]
        for u in live:
            inboxes[u].extend(reactive[u])
        reactive = [[] for _ in range(n)]

        changed = False
        for u in live:
            new_state, emits = protocol.periodic(u, states[u])
            if new_state is not states[u] and new_state != states[u]:
                changed = True
            states[u] = new_state
            for dst, msg in emits:
                messages += 1
                if dst not in down:
                    inboxes[dst].append((u, msg))

        for u in live:
            inbox = sorted(inboxes[u], key=lambda item: item[0])
            state = states[u]
            for sender, msg in inbox:
                state, emits = protocol.handle(u, state, sender, msg)
                for dst, msg2 in emits:
                    messages += 1
                    if dst not in down:
                        reactive[dst].append((u, msg2))
            if state is not states[u] and state != states[u]:
                changed = True
            states[u] = state

        quiet = 0 if changed else quiet + 1
        if quiet >= config.convergence_window:
            return SimResult(True, states, rounds, messages)
    return SimResult(False, states, rounds, messages)
