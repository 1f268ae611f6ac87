"""Experiment harness: stretch distributions, failure resilience, scaling.

Every run is a pure function of its configuration: randomness derives from
(seed, purpose) streams, pair sampling is without replacement, and CSV
emission is deterministic, so reruns are byte-identical.
"""
from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field, asdict
from typing import Optional

import numpy as np

from . import __version__
from .errors import ValidationError
from .graph import (Graph, GlpParams, WeightMode, assign_weights,
                    diameter_estimate, generate_glp, largest_component,
                    load_edge_list)
from .kernels import backend, BACKEND_NAME, DELIVERED, STUCK, TTL_EXCEEDED
from .embedding import CoordinateTable, build_coordinates
from .forwarding import BulkTraces, default_ttl, trace_routes_bulk
from .simkernel import FailureSet, SimConfig, inject_failures
from .source_routing import BulkFlows, bifset_stats, run_flows_bulk
from .trees import ConvergenceInfo, RootElection, build_forests, elect_roots, verify_forest
from .seeds import rng_for, PAIRS_TAG


def default_levels(n: int) -> int:
    """Locality-level count for an n-node graph: floor(log2 n) - 7, at least 1."""
    if n < 2:
        raise ValidationError("need at least 2 nodes")
    return max(1, (n.bit_length() - 1) - 7)


@dataclass(frozen=True)
class ExperimentConfig:
    glp: Optional[GlpParams] = None
    edge_list_path: Optional[str] = None
    weight_mode: WeightMode = WeightMode.UNIT
    levels: Optional[int] = None          # None = default_levels(n)
    pairs: int = 10_000
    seeds: tuple[int, ...] = (1, 2, 3)
    failure_fractions: tuple[float, ...] = (0.0, 0.05, 0.10, 0.20)
    source_routing: bool = False
    ttl: Optional[int] = None
    verify: bool = True

    def __post_init__(self):
        if (self.glp is None) == (self.edge_list_path is None):
            raise ValidationError("exactly one topology source required")
        if self.pairs < 1:
            raise ValidationError("need at least one pair")
        if not self.seeds:
            raise ValidationError("need at least one seed")
        for f in self.failure_fractions:
            if not 0.0 <= f < 1.0:
                raise ValidationError(f"failure fraction {f} outside [0, 1)")


@dataclass
class EmbeddedGraph:
    graph: Graph
    election: RootElection
    coords: CoordinateTable
    info: ConvergenceInfo
    levels: int
    ttl: int


def build_topology(config: ExperimentConfig, seed: int) -> Graph:
    if config.glp is not None:
        g = generate_glp(config.glp, seed)
    else:
        with open(config.edge_list_path, "rb") as fh:
            g, _ = load_edge_list(fh)
        g = largest_component(g)
    return assign_weights(g, config.weight_mode, seed)


def build_embedded(graph: Graph, levels: int, seed: int,
                   sim_config: Optional[SimConfig] = None,
                   verify: bool = True,
                   ttl: Optional[int] = None) -> EmbeddedGraph:
    """Elect roots, converge every tree level, verify, and embed."""
    election = elect_roots(graph, levels, seed)
    forests, info = build_forests(graph, election, sim_config)
    if verify:
        for forest in forests:
            verify_forest(forest, graph)
    coords = build_coordinates(graph, forests)
    return EmbeddedGraph(graph, election, coords, info, levels,
                         ttl if ttl is not None else default_ttl(graph))


def sample_pairs(n: int, count: int, seed: int,
                 alive: Optional[np.ndarray] = None
                 ) -> tuple[np.ndarray, np.ndarray]:
    """Distinct ordered (s, d) pairs, s != d, sampled without replacement.

    When fewer than ``count`` ordered pairs exist, all of them are used.
    """
    ids = np.arange(n, dtype=np.int64) if alive is None else np.flatnonzero(alive)
    a = ids.size
    total = a * (a - 1)
    if total <= 0:
        return np.empty(0, np.int32), np.empty(0, np.int32)
    rng = rng_for(seed, PAIRS_TAG)
    if count >= total:
        idx = np.arange(total, dtype=np.int64)
    else:
        idx = rng.choice(total, size=count, replace=False)
    s = idx // (a - 1)
    r = idx % (a - 1)
    d = r + (r >= s)
    return ids[s].astype(np.int32), ids[d].astype(np.int32)


def oracle_distances(graph: Graph, src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    """Exact shortest distances for each pair, grouping pairs by source."""
    out = np.empty(src.size, dtype=np.float64)
    order = np.argsort(src, kind="stable")
    i = 0
    while i < order.size:
        j = i
        s = src[order[i]]
        while j < order.size and src[order[j]] == s:
            j += 1
        dist, _ = backend.sssp(graph.indptr, graph.indices, graph.weights, int(s))
        out[order[i:j]] = dist[dst[order[i:j]]]
        i = j
    return out


# -- stretch ------------------------------------------------------------------

@dataclass
class StretchStats:
    mean: float
    p90: float
    p95: float
    max: float
    fraction_shortest: float
    cdf: list[tuple[float, float]]
    delivered_ratio: float
    ttl_exceeded_count: int
    count: int

    @staticmethod
    def from_samples(stretches: np.ndarray, exact: np.ndarray,
                     delivered_ratio: float, ttl_exceeded: int) -> "StretchStats":
        if stretches.size == 0:
            return StretchStats(math.nan, math.nan, math.nan, math.nan,
                                math.nan, [], delivered_ratio, ttl_exceeded, 0)
        values, counts = np.unique(stretches, return_counts=True)
        cum = np.cumsum(counts) / stretches.size
        return StretchStats(
            mean=float(stretches.mean()),
            p90=float(np.quantile(stretches, 0.9, method="inverted_cdf")),
            p95=float(np.quantile(stretches, 0.95, method="inverted_cdf")),
            max=float(stretches.max()),
            fraction_shortest=float(exact.mean()),
            cdf=[(float(v), float(c)) for v, c in zip(values, cum)],
            delivered_ratio=delivered_ratio,
            ttl_exceeded_count=ttl_exceeded,
            count=int(stretches.size),
        )


@dataclass
class SeedRun:
    seed: int
    src: np.ndarray
    dst: np.ndarray
    outcome: np.ndarray
    stretch: np.ndarray          # delivered pairs only
    exact: np.ndarray            # stretch length == oracle length, exact
    stats: StretchStats
    flows: Optional[BulkFlows] = None
    steady_stretch: Optional[np.ndarray] = None


@dataclass
class StretchResult:
    per_seed: list[SeedRun]
    pooled: StretchStats
    pooled_steady: Optional[StretchStats] = None


def eval_stretch(config: ExperimentConfig) -> StretchResult:
    """Trace sampled pairs per seed and compare against the Dijkstra oracle."""
    runs: list[SeedRun] = []
    all_st, all_ex = [], []
    all_steady = []
    delivered_total = pairs_total = ttl_total = 0
    for seed in config.seeds:
        graph = build_topology(config, seed)
        m = config.levels if config.levels is not None else default_levels(graph.n)
        emb = build_embedded(graph, m, seed, verify=config.verify, ttl=config.ttl)
        src, dst = sample_pairs(graph.n, config.pairs, seed)
        traces = trace_routes_bulk(emb.coords, graph, src, dst, ttl=emb.ttl)
        dg = oracle_distances(graph, src, dst)
        ok = traces.delivered
        st = traces.length[ok] / dg[ok]
        exact = traces.length[ok] == dg[ok]
        stats = StretchStats.from_samples(st, exact, traces.delivered_ratio,
                                          traces.ttl_exceeded_count)
        run = SeedRun(seed, src, dst, traces.outcome, st, exact, stats)
        if config.source_routing:
            flows = run_flows_bulk(emb.coords, graph, src, dst, ttl=emb.ttl)
            fok = flows.delivered
            run.flows = flows
            run.steady_stretch = flows.steady_length[fok] / dg[fok]
            all_steady.append(run.steady_stretch)
        runs.append(run)
        all_st.append(st)
        all_ex.append(exact)
        delivered_total += int(ok.sum())
        pairs_total += src.size
        ttl_total += traces.ttl_exceeded_count
    pooled = StretchStats.from_samples(
        np.concatenate(all_st), np.concatenate(all_ex),
        delivered_total / pairs_total if pairs_total else 1.0, ttl_total)
    pooled_steady = None
    if config.source_routing and all_steady:
        steady = np.concatenate(all_steady)
        pooled_steady = StretchStats.from_samples(
            steady, steady == 1.0, delivered_total / pairs_total, ttl_total)
    return StretchResult(runs, pooled, pooled_steady)


# -- failures -----------------------------------------------------------------

@dataclass
class FailurePoint:
    fraction: float
    pie_ratio: float
    baseline_ratio: float
    pairs: int


def baseline_next_hop_success(graph: Graph, src: np.ndarray, dst: np.ndarray,
                              alive: np.ndarray) -> np.ndarray:
    """Stale shortest-path forwarding with one next hop per destination.

    Tables are computed on the intact graph (canonical min-id tie-break);
    a route fails as soon as its single chain hits a failed node.
    """
    ok = np.zeros(src.size, dtype=bool)
    order = np.argsort(dst, kind="stable")
    i = 0
    while i < order.size:
        j = i
        d = int(dst[order[i]])
        while j < order.size and dst[order[j]] == d:
            j += 1
        dist, parent = backend.sssp(graph.indptr, graph.indices, graph.weights, d)
        for k in order[i:j]:
            cur = int(src[k])
            good = True
            while cur != d:
                cur = int(parent[cur])
                if cur < 0 or (cur != d and not alive[cur]):
                    good = False
                    break
            ok[k] = good
        i = j
    return ok


def eval_failures(config: ExperimentConfig) -> list[FailurePoint]:
    """Success ratios after failing nodes, before any re-convergence.

    Both PIE and the baseline route on state converged before the failures;
    pairs are sampled among alive nodes, pooled over seeds.
    """
    totals = {f: [0, 0, 0] for f in config.failure_fractions}  # pie, base, n
    for seed in config.seeds:
        graph = build_topology(config, seed)
        m = config.levels if config.levels is not None else default_levels(graph.n)
        emb = build_embedded(graph, m, seed, verify=config.verify, ttl=config.ttl)
        for fraction in config.failure_fractions:
            failures = inject_failures(graph, fraction, seed)
            alive = failures.alive_mask(graph.n)
            src, dst = sample_pairs(graph.n, config.pairs, seed, alive=alive)
            traces = trace_routes_bulk(emb.coords, graph, src, dst,
                                       failures=failures, ttl=emb.ttl)
            base_ok = baseline_next_hop_success(graph, src, dst, alive)
            t = totals[fraction]
            t[0] += int(traces.delivered.sum())
            t[1] += int(base_ok.sum())
            t[2] += src.size
    return [FailurePoint(f, t[0] / t[2], t[1] / t[2], t[2])
            for f, t in totals.items()]


# -- scaling ------------------------------------------------------------------

@dataclass
class ScalingPoint:
    n: int
    levels: int
    min_dim: int
    mean_dim: float
    max_dim: int
    mean_stretch: float
    fraction_shortest: float


def eval_scaling(n_sweep: list[int], config: ExperimentConfig) -> list[ScalingPoint]:
    """Coordinate counts and route quality across graph sizes.

    Per size: one graph per seed, m = default_levels(n) unless overridden;
    dims are summed over each node's m trees; route quality from sampled
    pairs pooled over seeds.
    """
    if sorted(n_sweep) != list(n_sweep):
        raise ValidationError("size sweep must be ascending")
    points = []
    for n in n_sweep:
        m = config.levels if config.levels is not None else default_levels(n)
        dims_all = []
        lengths, oracles = [], []
        for seed in config.seeds:
            base = config.glp if config.glp is not None else GlpParams(n=n)
            graph = assign_weights(
                generate_glp(GlpParams(**{**asdict(base), "n": n}), seed),
                config.weight_mode, seed)
            emb = build_embedded(graph, m, seed, verify=config.verify,
                                 ttl=config.ttl)
            dims_all.append(emb.coords.dims())
            src, dst = sample_pairs(graph.n, config.pairs, seed)
            traces = trace_routes_bulk(emb.coords, graph, src, dst, ttl=emb.ttl)
            dg = oracle_distances(graph, src, dst)
            ok = traces.delivered
            lengths.append(traces.length[ok] / dg[ok])
            oracles.append(traces.length[ok] == dg[ok])
        dims = np.concatenate(dims_all)
        st = np.concatenate(lengths)
        ex = np.concatenate(oracles)
        points.append(ScalingPoint(n, m, int(dims.min()), float(dims.mean()),
                                   int(dims.max()), float(st.mean()),
                                   float(ex.mean())))
    return points


# -- output -------------------------------------------------------------------

def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.12g}"
    return str(x)


def _write_csv(path: str, header: list[str], rows) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(x) for x in row) + "\n")


OUTCOME_NAMES = {DELIVERED: "delivered", STUCK: "stuck", TTL_EXCEEDED: "ttlExceeded"}


def write_results(out_dir: str, config: ExperimentConfig,
                  stretch: Optional[StretchResult] = None,
                  failures: Optional[list[FailurePoint]] = None,
                  scaling: Optional[list[ScalingPoint]] = None) -> list[str]:
    """Emit the CSV schemas plus a JSON run manifest; returns written paths."""
    os.makedirs(out_dir, exist_ok=True)
    written = []

    def out(name):
        path = os.path.join(out_dir, name)
        written.append(path)
        return path

    if stretch is not None:
        rows = []
        for run in stretch.per_seed:
            delivered = run.outcome == DELIVERED
            k = 0
            for i in range(run.src.size):
                if delivered[i]:
                    rows.append((run.seed, run.src[i], run.dst[i],
                                 float(run.stretch[k]),
                                 OUTCOME_NAMES[DELIVERED]))
                    k += 1
                else:
                    rows.append((run.seed, run.src[i], run.dst[i], math.nan,
                                 OUTCOME_NAMES[int(run.outcome[i])]))
        _write_csv(out("stretch.csv"),
                   ["seed", "src", "dst", "stretch", "outcome"], rows)
        _write_csv(out("cdf.csv"), ["stretch", "cumFraction"], stretch.pooled.cdf)
        if config.source_routing:
            rows = []
            for run in stretch.per_seed:
                if run.flows is None:
                    continue
                fl = run.flows
                k = 0
                for i in range(fl.src.size):
                    if not fl.delivered[i]:
                        continue
                    rows.append((fl.src[i], fl.dst[i],
                                 float(fl.len_forward[i]),
                                 float(fl.len_reverse[i]),
                                 int(fl.used_reverse[i]),
                                 int(fl.bif_size[i]) if fl.used_reverse[i] else 0,
                                 float(run.steady_stretch[k])))
                    k += 1
            _write_csv(out("flows.csv"),
                       ["src", "dst", "lenForward", "lenReverse", "usedReverse",
                        "bifSetSize", "steadyStateStretch"], rows)
    if failures is not None:
        _write_csv(out("failures.csv"),
                   ["fraction", "pieRatio", "baselineRatio"],
                   [(p.fraction, p.pie_ratio, p.baseline_ratio) for p in failures])
    if scaling is not None:
        _write_csv(out("scaling.csv"),
                   ["n", "m", "minDim", "meanDim", "maxDim", "meanStretch",
                    "fracShortest"],
                   [(p.n, p.levels, p.min_dim, p.mean_dim, p.max_dim,
                     p.mean_stretch, p.fraction_shortest) for p in scaling])

    manifest = {
        "version": f"pie-routing-{__version__}",
        "backend": BACKEND_NAME,
        "seeds": list(config.seeds),
        "config": _config_dict(config),
    }
    path = out("manifest.json")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return written


def _config_dict(config: ExperimentConfig) -> dict:
    d = asdict(config)
    d["weight_mode"] = config.weight_mode.value
    return d
