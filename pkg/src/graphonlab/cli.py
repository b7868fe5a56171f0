"""Command-line interface: ``graphonlab SUBCOMMAND [options]``.

Every subcommand writes CSV with a header row (or JSON with ``--json``) to
stdout or ``--out``.  Exit codes: 0 success, 1 a violated verdict, 2 usage or
input error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import density, expressions, forcing, sampling, vertexspace
from .graphon import degree, load_graphon
from .graphs import Graph, load_graph
from .rng import default_seed

GRAPH_NAMES = {
    "vertex": lambda: Graph.empty(1),
    "edge": lambda: Graph.complete(2),
    "non-edge": lambda: Graph.empty(2),
    "triangle": lambda: Graph.complete(3),
    "cherry": lambda: Graph.path(3),
}
GRAPH_FAMILIES = {"complete": Graph.complete, "empty": Graph.empty, "path": Graph.path,
                  "cycle": Graph.cycle}


class UsageError(Exception):
    pass


def parse_graph_ref(ref: str) -> Graph:
    """A graph file path, a name such as ``triangle``, or ``family:n``."""
    if ref in GRAPH_NAMES:
        return GRAPH_NAMES[ref]()
    name, _, n = ref.partition(":")
    if name in GRAPH_FAMILIES and n.isdigit():
        return GRAPH_FAMILIES[name](int(n))
    if not Path(ref).exists():
        raise UsageError(f"no graph file or built-in graph named {ref!r}")
    return load_graph(ref)


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def _plain(v):
    if isinstance(v, np.generic):
        return v.item()
    return v


def emit(rows: list[dict], args, columns: list[str], to_stdout: bool = False) -> None:
    if args.json:
        text = json.dumps([{c: _plain(r[c]) for c in columns} for r in rows], indent=1) + "\n"
    else:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(columns)
        for r in rows:
            writer.writerow([_fmt(r[c]) for c in columns])
        text = buf.getvalue()
    if args.out and not to_stdout:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# subcommands


def cmd_density(args) -> int:
    h = parse_graph_ref(args.graph)
    w = load_graphon(args.graphon)
    est = density.graphon_density(h, w, args.method, args.budget, args.seed, args.threads)
    emit([{"value": est.value, "stderr": est.stderr, "method": est.method, "budget": est.budget}],
         args, ["value", "stderr", "method", "budget"])
    return 0


def cmd_degree(args) -> int:
    w = load_graphon(args.graphon)
    rows = []
    for x in args.x:
        est = degree(w, x, args.method, args.budget or (1 << 16), args.seed)
        rows.append({"x": x, "degree": est.value, "stderr": est.stderr, "method": est.method})
    emit(rows, args, ["x", "degree", "stderr", "method"])
    return 0


def cmd_sample(args) -> int:
    w = load_graphon(args.graphon)
    g = sampling.sample_w_random_graph(w, args.order, args.seed, args.threads)
    # --out receives the graph itself; the summary always goes to stdout
    if args.out:
        Path(args.out).write_text(g.to_text())
    emit([{"order": g.order, "edges": g.edge_count, "seed": args.seed}], args,
         ["order", "edges", "seed"], to_stdout=True)
    return 0


def cmd_converge(args) -> int:
    h = parse_graph_ref(args.graph)
    w = load_graphon(args.graphon)
    orders = [int(v) for v in args.orders.split(",") if v]
    rows = sampling.convergence_experiment(w, h, orders, args.seed,
                                           budget=args.budget or 200_000, workers=args.threads)
    emit([asdict(r) for r in rows], args, ["n", "estimate", "stderr", "deviation"])
    return 0


def cmd_check(args) -> int:
    w = load_graphon(args.graphon)
    spec, items = forcing.load_constraint_file(args.constraints, w.partition)
    rows, violated = [], False
    for c, tol in items:
        tol = args.tol if args.tol is not None else tol
        v = expressions.check_constraint(c, w, tol, args.method, args.budget, args.seed,
                                         args.threads)
        violated |= v.status == "violated"
        rows.append({"name": c.name, "kind": c.kind, "residual": v.residual.value,
                     "stderr": v.residual.stderr, "tol": v.tol, "verdict": v.status})
    emit(rows, args, ["name", "kind", "residual", "stderr", "tol", "verdict"])
    return 1 if violated else 0


def cmd_verify_wr(args) -> int:
    w = load_graphon(args.graphon)
    rep = forcing.verify_wr_identities(w, args.budget or 1_000_000, args.seed, args.threads)
    rows = [{"identity": r.name, "target": r.target, "estimate": r.estimate.value,
             "stderr": r.estimate.stderr, "verdict": r.verdict} for r in rep]
    emit(rows, args, ["identity", "target", "estimate", "stderr", "verdict"])
    return 1 if any(r["verdict"] == "violated" for r in rows) else 0


def cmd_vertex_space(args) -> int:
    rep = vertexspace.packing_diagnostic(args.eps, args.count, args.grid)
    rows = [{"i": i, "delta": args.eps, "distance": d,
             "closed_form": vertexspace.closed_form_distance(i, args.eps),
             "within_eps": d <= args.eps, "min_separation": rep.min_separation,
             "certified": rep.certified} for i, d in zip(rep.indices, rep.distances)]
    emit(rows, args, ["i", "delta", "distance", "closed_form", "within_eps", "min_separation",
                      "certified"])
    if args.emit_sections:
        xs = (np.arange(args.grid) + 0.5) / args.grid
        cols = {"x": xs, "g": vertexspace.witness_g()(xs)}
        for i in rep.indices:
            cols[f"g_{i}"] = vertexspace.witness_g_i_delta(i, args.eps)(xs)
        with open(args.emit_sections, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(list(cols))
            for row in zip(*cols.values()):
                writer.writerow([repr(float(v)) for v in row])
    return 0 if rep.certified else 1


def cmd_heatmap(args) -> int:
    w = load_graphon(args.graphon)
    mids = (np.arange(args.res) + 0.5) / args.res
    vals = w.eval(mids[:, None], mids[None, :])
    columns = [f"y={repr(float(m))}" for m in mids]
    rows = [dict(zip(columns, row)) for row in vals]
    emit(rows, args, columns)
    return 0


# ---------------------------------------------------------------------------
# parser


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=None,
                   help="random seed (default: $GRAPHONLAB_SEED or 0)")
    p.add_argument("--budget", type=int, default=None,
                   help="samples (mc) or grid nodes (quad); kernel evaluations for rooted terms")
    p.add_argument("--out", default=None, help="write output here instead of stdout")
    p.add_argument("--json", action="store_true", help="emit JSON instead of CSV")
    p.add_argument("--threads", type=int, default=1, help="worker threads")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="graphonlab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    methods = ["auto", "exact", "quad", "mc"]

    p = sub.add_parser("density", help="induced density d(H, W)")
    p.add_argument("--graph", required=True)
    p.add_argument("--graphon", required=True)
    p.add_argument("--method", choices=methods, default="auto")
    _common(p)
    p.set_defaults(func=cmd_density)

    p = sub.add_parser("degree", help="vertex degrees of a graphon")
    p.add_argument("--graphon", required=True)
    p.add_argument("--x", type=float, nargs="+", required=True)
    p.add_argument("--method", choices=["quad", "mc", "exact"], default="quad")
    _common(p)
    p.set_defaults(func=cmd_degree)

    p = sub.add_parser("sample", help="draw a W-random graph")
    p.add_argument("--graphon", required=True)
    p.add_argument("--order", type=int, required=True)
    _common(p)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("converge", help="densities in W-random graphs of growing order")
    p.add_argument("--graph", required=True)
    p.add_argument("--graphon", required=True)
    p.add_argument("--orders", required=True, help="comma separated, increasing")
    _common(p)
    p.set_defaults(func=cmd_converge)

    p = sub.add_parser("check", help="check a constraint file against a graphon")
    p.add_argument("--constraints", required=True)
    p.add_argument("--graphon", required=True)
    p.add_argument("--method", choices=methods, default="auto")
    p.add_argument("--tol", type=float, default=None)
    _common(p)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("verify-wr", help="identity report for the Rademacher graphon")
    p.add_argument("--graphon", default="builtin:rademacher")
    _common(p)
    p.set_defaults(func=cmd_verify_wr)

    p = sub.add_parser("vertex-space", help="packing witnesses around g")
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--grid", type=int, default=vertexspace.DEFAULT_GRID)
    p.add_argument("--emit-sections", default=None)
    _common(p)
    p.set_defaults(func=cmd_vertex_space)

    p = sub.add_parser("heatmap", help="graphon values on a midpoint grid")
    p.add_argument("--graphon", required=True)
    p.add_argument("--res", type=int, default=64)
    _common(p)
    p.set_defaults(func=cmd_heatmap)
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.seed is None:
        args.seed = default_seed()
    if getattr(args, "threads", 1) < 1:
        parser.error("--threads must be positive")
    try:
        return args.func(args)
    except (UsageError, ValueError, KeyError, FileNotFoundError) as exc:
        print(f"graphonlab {args.command}: error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
