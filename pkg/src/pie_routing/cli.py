"""Command-line interface.

Subcommands: generate (edge list), embed (coordinate dump), routes
(stretch evaluation), failures (resilience curve), scaling (size sweep).
"""
from __future__ import annotations

import argparse
import sys

import numpy as np

from .errors import ConvergenceError, ValidationError
from .graph import (GlpParams, WeightMode, assign_weights, dump_edge_list,
                    generate_glp, largest_component, load_edge_list)
from .experiments import (ExperimentConfig, build_embedded, build_topology,
                          default_levels, eval_failures, eval_scaling,
                          eval_stretch, write_results)


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--n", type=int, default=10_000, help="node count for GLP graphs")
    p.add_argument("--lambda", dest="lam", type=float, default=2.1,
                   help="target power-law exponent (used when --beta is given as 'auto')")
    p.add_argument("--beta", default=None,
                   help="preference shift: a float, or 'auto' to derive from --lambda")
    p.add_argument("--levels", default="auto",
                   help="locality levels m, or 'auto' for floor(log2 n) - 7")
    p.add_argument("--weights", choices=["unit", "uniform"], default="unit")
    p.add_argument("--pairs", type=int, default=10_000)
    p.add_argument("--seeds", default="1,2,3", help="comma-separated seed list")
    p.add_argument("--source-routing", action="store_true")
    p.add_argument("--edge-list", metavar="PATH", default=None,
                   help="load topology from an edge-list file instead of GLP")
    p.add_argument("--out", metavar="DIR", default="results")


def _glp_params(args) -> GlpParams | None:
    if args.edge_list is not None:
        return None
    kwargs = {"n": args.n, "lam": args.lam}
    if args.beta == "auto":
        kwargs["beta"] = None
    elif args.beta is not None:
        kwargs["beta"] = float(args.beta)
    return GlpParams(**kwargs)


def _config(args) -> ExperimentConfig:
    levels = None if args.levels == "auto" else int(args.levels)
    return ExperimentConfig(
        glp=_glp_params(args),
        edge_list_path=args.edge_list,
        weight_mode=WeightMode(args.weights),
        levels=levels,
        pairs=args.pairs,
        seeds=tuple(int(s) for s in args.seeds.split(",")),
        failure_fractions=tuple(float(f) for f in args.fractions.split(","))
        if hasattr(args, "fractions") else (0.0, 0.05, 0.10, 0.20),
        source_routing=args.source_routing,
    )


def cmd_generate(args) -> int:
    params = _glp_params(args)
    if params is None:
        with open(args.edge_list, "rb") as fh:
            graph, _ = load_edge_list(fh)
        graph = largest_component(graph)
    else:
        graph = generate_glp(params, args.seed)
    graph = assign_weights(graph, WeightMode(args.weights), args.seed)
    with open(args.output, "w", encoding="utf-8") as fh:
        dump_edge_list(graph, fh, header=f"n={graph.n} seed={args.seed}")
    print(f"wrote {graph.n} nodes / {graph.num_edges} edges to {args.output}")
    return 0


def cmd_embed(args) -> int:
    config = _config(args)
    seed = config.seeds[0]
    graph = build_topology(config, seed)
    m = config.levels if config.levels is not None else default_levels(graph.n)
    emb = build_embedded(graph, m, seed)
    with open(args.output, "w", encoding="utf-8") as fh:
        fh.write("nodeId,treeLevel,treeRoot,dim,coords\n")
        for u in range(graph.n):
            for level in range(m):
                vec = emb.coords.vector(u, level)
                coord_str = ":".join(f"{x:.12g}" for x in vec.values)
                fh.write(f"{u},{level},{vec.tree.root},{vec.dim},{coord_str}\n")
    print(f"wrote coordinates for {graph.n} nodes x {m} levels to {args.output}")
    return 0


def cmd_routes(args) -> int:
    config = _config(args)
    result = eval_stretch(config)
    paths = write_results(args.out, config, stretch=result)
    s = result.pooled
    print(f"pairs={s.count} delivered={s.delivered_ratio:.4f} "
          f"ttlExceeded={s.ttl_exceeded_count} mean={s.mean:.4f} "
          f"p95={s.p95:.4f} max={s.max:.4f} shortest={s.fraction_shortest:.4f}")
    if result.pooled_steady is not None:
        print(f"with source routing: mean={result.pooled_steady.mean:.4f} "
              f"shortest={result.pooled_steady.fraction_shortest:.4f}")
    for p in paths:
        print(f"  {p}")
    return 0


def cmd_failures(args) -> int:
    config = _config(args)
    points = eval_failures(config)
    paths = write_results(args.out, config, failures=points)
    for p in points:
        print(f"fraction={p.fraction:.2f} pie={p.pie_ratio:.4f} "
              f"baseline={p.baseline_ratio:.4f}")
    for p in paths:
        print(f"  {p}")
    return 0


def cmd_scaling(args) -> int:
    config = _config(args)
    sweep = [int(x) for x in args.sizes.split(",")]
    points = eval_scaling(sweep, config)
    paths = write_results(args.out, config, scaling=points)
    for p in points:
        print(f"n={p.n} m={p.levels} dims=[{p.min_dim},{p.mean_dim:.1f},{p.max_dim}] "
              f"stretch={p.mean_stretch:.4f} shortest={p.fraction_shortest:.4f}")
    for p in paths:
        print(f"  {p}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="pie",
        description="Tree embedding and greedy geometric routing simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="emit a topology as an edge list")
    _add_common(p)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--output", default="graph.txt")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("embed", help="emit the coordinate dump")
    _add_common(p)
    p.add_argument("--output", default="coords.csv")
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("routes", help="evaluate path stretch")
    _add_common(p)
    p.set_defaults(func=cmd_routes)

    p = sub.add_parser("failures", help="evaluate resilience to node failures")
    _add_common(p)
    p.add_argument("--fractions", default="0.0,0.05,0.1,0.2",
                   help="comma-separated failed-node fractions")
    p.set_defaults(func=cmd_failures)

    p = sub.add_parser("scaling", help="sweep graph sizes")
    _add_common(p)
    p.add_argument("--sizes", default="1024,2048,4096,8192,16384",
                   help="comma-separated ascending node counts")
    p.set_defaults(func=cmd_scaling)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValidationError, ConvergenceError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
