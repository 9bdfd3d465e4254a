"""Command-line interface: ``grafica <subcommand> ...``.

Exit codes: 0 success, 1 runtime failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import datasets
from .errors import ConfigError, GraficaError
from .filters import FilterCoefficients
from .metrics import ari, nmi
from .pipeline import BASELINES, SELECTION_MODES, PreparedGraph, RunConfig, run_baseline, sweep

log = logging.getLogger("grafica")


class UsageError(Exception):
    pass


def parse_grid(text: str) -> list[float]:
    """Parse ``start:stop:step`` (endpoints inclusive within step/2) or a comma list."""
    text = text.strip()
    if ":" not in text:
        try:
            vals = [float(x) for x in text.split(",") if x.strip()]
        except ValueError:
            raise UsageError(f"invalid grid {text!r}") from None
        if not vals:
            raise UsageError(f"empty grid {text!r}")
        return vals
    parts = text.split(":")
    if len(parts) != 3:
        raise UsageError(f"grid must be start:stop:step, got {text!r}")
    try:
        start, stop, step = (float(p) for p in parts)
    except ValueError:
        raise UsageError(f"invalid grid {text!r}") from None
    if step <= 0 or stop < start:
        raise UsageError(f"grid needs step > 0 and stop >= start, got {text!r}")
    # values strictly below stop + step/2 are kept
    count = int(np.ceil((stop - start) / step + 0.5))
    vals = [start + i * step for i in range(count)]
    # round away accumulated binary noise (0.30000000000000004 -> 0.3)
    return [float(round(v, 12)) for v in vals]


def _int_grid(text):
    vals = parse_grid(text)
    if any(v != int(v) or v < 1 for v in vals):
        raise UsageError(f"filter order grid must contain positive integers, got {text!r}")
    return [int(v) for v in vals]


def _add_dataset_flags(p):
    g = p.add_argument_group("dataset")
    g.add_argument("--format", choices=["content-cites", "csv"], default=None,
                   help="input layout (inferred from the other flags when omitted)")
    g.add_argument("--content", type=Path, help=".content file (id, features, label)")
    g.add_argument("--cites", type=Path, help=".cites file (cited, citing)")
    g.add_argument("--nodes", type=Path, help="nodes.csv")
    g.add_argument("--edges", type=Path, help="edges.csv")
    g.add_argument("--normalize-rows", action="store_true", help="L2-normalize attribute rows")


def _add_run_flags(p, grid_t=False):
    g = p.add_argument_group("run")
    g.add_argument("--k", type=int, default=None, help="number of clusters (default: label count)")
    if grid_t:
        g.add_argument("--t-grid", default="3:10:1", help="filter orders, start:stop:step")
    else:
        g.add_argument("--t", type=int, default=3, help="filter order T")
    g.add_argument("--alpha", type=float, default=None, help="structure weight")
    g.add_argument("--alpha-grid", default=None, help="alpha values, start:stop:step")
    g.add_argument("--gamma", type=float, default=None, help="fixed gamma (default: adaptive ratio)")
    g.add_argument("--selection", choices=SELECTION_MODES, default=None,
                   help="candidate selection (default: ground-truth-nmi if labels exist)")
    g.add_argument("--c-matrix", choices=["derived", "literal"], default="derived")
    g.add_argument("--recompute-gamma", action="store_true")
    g.add_argument("--row-normalize-embedding", action="store_true")
    g.add_argument("--max-iters", type=int, default=50)
    g.add_argument("--tol", type=float, default=1e-4)
    g.add_argument("--restarts", type=int, default=20)


def build_parser() -> argparse.ArgumentParser:
    # global flags are accepted before or after the subcommand
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-v", "--verbose", action="count", default=argparse.SUPPRESS)
    common.add_argument("--threads", type=int, default=argparse.SUPPRESS, help="parallel workers")
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="random seed")

    parser = argparse.ArgumentParser(prog="grafica", description=__doc__.splitlines()[0],
                                     parents=[common])
    parser.set_defaults(verbose=0, threads=1, seed=0)
    sub = parser.add_subparsers(dest="command", required=True)
    _add_parser = sub.add_parser

    def add_parser(name, **kw):
        return _add_parser(name, parents=[common], **kw)

    sub.add_parser = add_parser

    p = sub.add_parser("cluster", help="run the alternating filter/clustering optimization")
    _add_dataset_flags(p)
    _add_run_flags(p)
    p.add_argument("--out", type=Path, help="result document (JSON)")
    p.add_argument("--filter-out", type=Path, help="write the learned filter response here")

    p = sub.add_parser("sweep", help="grid over filter order and alpha")
    _add_dataset_flags(p)
    _add_run_flags(p, grid_t=True)
    p.add_argument("--out", type=Path, help="sweep table (JSON)")

    p = sub.add_parser("baseline", help="attribute-only or structure-only clustering")
    _add_dataset_flags(p)
    p.add_argument("--method", choices=BASELINES, required=True)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--restarts", type=int, default=20)
    p.add_argument("--out", type=Path)

    p = sub.add_parser("synth", help="generate an attributed SBM as nodes.csv / edges.csv")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--p-in", type=float, required=True)
    p.add_argument("--p-out", type=float, required=True)
    p.add_argument("--dim", type=int, default=None, help="attribute dimension (default: k)")
    p.add_argument("--sep", type=float, default=5.0, help="distance between block centers")
    p.add_argument("--sigma", type=float, default=1.0, help="attribute noise std")
    p.add_argument("--out-dir", type=Path, required=True)

    p = sub.add_parser("filter-response", help="export H(lambda) on a grid")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--result", type=Path, help="result document holding h")
    src.add_argument("--h", help="comma-separated coefficients h_0,h_1,...")
    p.add_argument("--grid", default="0:2:0.01")
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("eval", help="score a result document against dataset labels")
    _add_dataset_flags(p)
    p.add_argument("--result", type=Path, required=True)
    return parser


def _load(args):
    fmt = args.format
    if fmt is None:
        fmt = "content-cites" if args.content or args.cites else "csv"
    if fmt == "content-cites":
        if not (args.content and args.cites):
            raise UsageError("content-cites format needs --content and --cites")
        paths = (args.content, args.cites)
        loader = datasets.load_content_cites
    else:
        if not (args.nodes and args.edges):
            raise UsageError("csv format needs --nodes and --edges")
        paths = (args.nodes, args.edges)
        loader = datasets.load_csv_dataset
    for path in paths:
        if not path.is_file():
            raise UsageError(f"no such file: {path}")
    return loader(*paths, normalize_rows=args.normalize_rows)


def _config(args, graph, t_order=3, alpha=0.0):
    k = args.k if args.k is not None else graph.n_classes
    if k is None:
        raise UsageError("--k is required when the dataset has no labels")
    selection = args.selection or ("ground-truth-nmi" if graph.labels is not None else "internal-cost")
    if selection == "ground-truth-nmi" and graph.labels is None:
        raise UsageError("ground-truth-nmi selection needs labels in the dataset")
    try:
        return RunConfig(
            k=k, t_order=t_order, alpha=alpha, gamma=args.gamma, selection=selection,
            seed=args.seed, max_outer_iters=args.max_iters, convergence_tol=args.tol,
            restarts=args.restarts, c_variant=args.c_matrix, recompute_gamma=args.recompute_gamma,
            row_normalize=args.row_normalize_embedding, threads=args.threads,
        )
    except ConfigError as exc:
        raise UsageError(str(exc)) from None


def _alpha_values(args):
    if args.alpha is not None and args.alpha_grid is not None:
        raise UsageError("use either --alpha or --alpha-grid")
    if args.alpha_grid is not None:
        vals = parse_grid(args.alpha_grid)
    else:
        vals = [args.alpha if args.alpha is not None else 0.0]
    if any(v < 0 for v in vals):
        raise UsageError("alpha must be nonnegative")
    return vals


def _fmt(x):
    return "n/a" if x is None or x != x else f"{x:.4f}"


def _summary(res, extra=""):
    return (f"NMI={_fmt(res.nmi)} ARI={_fmt(res.ari)} iterations={res.iterations} "
            f"converged={res.converged}{extra}")


def cmd_cluster(args):
    graph = _load(args)
    alphas = _alpha_values(args)
    cfg = _config(args, graph, t_order=args.t, alpha=alphas[0])
    sw = sweep(PreparedGraph.from_graph(graph), cfg, [args.t], alphas)
    best = sw.best_result
    row = sw.rows[sw.best]
    print(f"selection={cfg.selection} T={row['t_order']} alpha={row['alpha']:g} " + _summary(best))
    if args.out:
        extra = {"selection": cfg.selection}
        if len(alphas) > 1:
            extra["grid"] = sw.rows
        datasets.write_results(best, args.out, extra=extra)
    if args.filter_out and best.h is not None:
        datasets.write_filter_response(best.h, np.linspace(0.0, 2.0, 201), args.filter_out)
    return 0


def cmd_sweep(args):
    graph = _load(args)
    t_grid = _int_grid(args.t_grid)
    alphas = _alpha_values(args)
    cfg = _config(args, graph, t_order=t_grid[0], alpha=alphas[0])
    sw = sweep(PreparedGraph.from_graph(graph), cfg, t_grid, alphas)
    for row in sw.rows:
        print(f"T={row['t_order']:<3d} alpha={row['alpha']:<6g} NMI={_fmt(row['nmi'])} "
              f"ARI={_fmt(row['ari'])} iterations={row['iterations']}")
    row = sw.rows[sw.best]
    print(f"best: T={row['t_order']} alpha={row['alpha']:g} " + _summary(sw.best_result))
    if args.out:
        doc = {
            "selection": cfg.selection,
            "config": cfg.as_dict(),
            "rows": [{k: datasets._float_or_none(v) if isinstance(v, float) else v
                      for k, v in r.items()} for r in sw.rows],
            "best": sw.best,
            "best_result": datasets.result_to_dict(sw.best_result),
        }
        datasets.write_json(doc, args.out)
    return 0


def cmd_baseline(args):
    graph = _load(args)
    k = args.k if args.k is not None else graph.n_classes
    if k is None:
        raise UsageError("--k is required when the dataset has no labels")
    res = run_baseline(graph, args.method, k, seed=args.seed, restarts=args.restarts)
    print(f"method={args.method} NMI={_fmt(res.nmi)} ARI={_fmt(res.ari)}")
    if args.out:
        datasets.write_results(res, args.out)
    return 0


def cmd_synth(args):
    try:
        params = datasets.SbmParams(
            n_nodes=args.n, k=args.k, p_in=args.p_in, p_out=args.p_out, attr_dim=args.dim,
            center_separation=args.sep, attr_noise_sigma=args.sigma, seed=args.seed,
        )
    except GraficaError as exc:
        raise UsageError(str(exc)) from None
    graph = datasets.generate_sbm(params)
    nodes, edges = datasets.write_csv_dataset(graph, args.out_dir)
    print(f"wrote {nodes} and {edges}: {graph.n_nodes} nodes, {graph.n_edges} edges")
    return 0


def cmd_filter_response(args):
    if args.result is not None:
        res = datasets.read_results(args.result)
        if res.h is None:
            raise GraficaError(f"{args.result} holds no filter")
        h = res.h
    else:
        try:
            coeffs = [float(x) for x in args.h.split(",")]
        except ValueError:
            raise UsageError(f"invalid coefficients {args.h!r}") from None
        h = np.asarray(coeffs)
    grid = parse_grid(args.grid)
    datasets.write_filter_response(h, grid, args.out)
    coeffs = h.coeffs if isinstance(h, FilterCoefficients) else h
    print(f"wrote {len(grid)} points for h={[round(float(c), 6) for c in coeffs]} to {args.out}")
    return 0


def cmd_eval(args):
    graph = _load(args)
    if graph.labels is None:
        raise UsageError("dataset has no labels to evaluate against")
    res = datasets.read_results(args.result)
    if res.partition.n_nodes != graph.n_nodes:
        raise GraficaError("result and dataset node counts differ")
    print(f"NMI={_fmt(nmi(res.partition, graph.labels))} ARI={_fmt(ari(res.partition, graph.labels))}")
    return 0


COMMANDS = {
    "cluster": cmd_cluster,
    "sweep": cmd_sweep,
    "baseline": cmd_baseline,
    "synth": cmd_synth,
    "filter-response": cmd_filter_response,
    "eval": cmd_eval,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
    )
    if args.threads < 1:
        parser.print_usage(sys.stderr)
        print("grafica: error: --threads must be >= 1", file=sys.stderr)
        return 2
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"grafica: error: {exc}", file=sys.stderr)
        return 2
    except (GraficaError, OSError, MemoryError) as exc:
        print(f"grafica: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
