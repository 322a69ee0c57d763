"""Command-line entry point: ``coalition-forge {parse,graph,solve,bench}``.

JSON goes to stdout (or ``--out``), diagnostics to stderr. Exit status is 0
on success, 1 on usage errors and 2 on bad input data.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from json import JSONDecodeError

from .bench import ExperimentConfig, run_config
from .errors import NoFeasibleSampleError
from .gcsq import GcsqOptions, run_gcsq
from .graph import WeightedGraph
from .netgraph import WeightModel, build_geometric_graph, generate_synthetic_graph
from .solvers import AnnealParams
from .tle import load_3le, load_positions, parse_timestamp, positions_to_json, propagate

EXIT_USAGE = 1
EXIT_DATA = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="RNG seed (default 0)")
    common.add_argument("--out", help="write output here instead of stdout (bench: output directory)")
    common.add_argument("--format", choices=["json", "csv"], default="json", help="bench record format")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="coalition-forge", description="GCS-Q coalition structure generation for satellite networks.")
    sub = parser.add_subparsers(dest="verb", parser_class=_Parser)

    p = sub.add_parser("parse", parents=[common], help="3LE file -> positions JSON")
    p.add_argument("--tle", required=True)
    p.add_argument("--at", required=True, help="RFC 3339 timestamp")
    p.add_argument("--allow-stale", action="store_true", help="propagate more than 7 days from epoch")

    p = sub.add_parser("graph", parents=[common], help="positions or synthetic -> graph JSON")
    p.add_argument("--positions")
    p.add_argument("--radius", "--radius-km", dest="radius", type=float)
    p.add_argument("--noise", type=float, default=1.5)
    p.add_argument("--synthetic", action="store_true")
    p.add_argument("--n", type=int)
    p.add_argument("--sparsity", type=float)

    p = sub.add_parser("solve", parents=[common], help="graph JSON -> coalition structure JSON")
    p.add_argument("--graph", required=True)
    p.add_argument("--kmax", type=int)
    p.add_argument("--sampler", choices=["anneal", "exhaustive"], default="anneal")
    p.add_argument("--selection", choices=["lowest", "frequent"], default="lowest")
    p.add_argument("--reads", type=int, default=1000)
    p.add_argument("--sweeps", type=int, default=1000)
    p.add_argument("--no-decompose", action="store_true", help="keep disconnected split sides whole")

    p = sub.add_parser("bench", parents=[common], help="run an experiment config")
    p.add_argument("--config", required=True)
    return parser


def _emit(doc, out):
    text = json.dumps(doc, indent=1) + "\n"
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _cmd_parse(args):
    records = load_3le(args.tle)
    when = parse_timestamp(args.at)
    states = [propagate(r, when, allow_stale=args.allow_stale) for r in records]
    _emit(positions_to_json(records, states), args.out)


def _cmd_graph(args):
    if args.synthetic:
        if args.n is None or args.sparsity is None:
            raise UsageError("--synthetic needs --n and --sparsity")
        g = generate_synthetic_graph(args.n, args.sparsity, args.seed)
    else:
        if args.positions is None or args.radius is None:
            raise UsageError("need --positions and --radius, or --synthetic")
        _, pos = load_positions(args.positions)
        g = build_geometric_graph(pos, args.radius, WeightModel(noise_amplitude=args.noise, seed=args.seed))
    _emit(g.to_dict(), args.out)


def _cmd_solve(args):
    g = WeightedGraph.load(args.graph)
    opts = GcsqOptions(
        kmax=args.kmax,
        selection=args.selection,
        decompose_sides=not args.no_decompose,
        sampler=args.sampler,
        anneal=AnnealParams(num_reads=args.reads, sweeps_per_read=args.sweeps, seed=args.seed),
    )
    _emit(run_gcsq(g, opts).to_dict(), args.out)


def _cmd_bench(args):
    cfg = ExperimentConfig.load(args.config)
    fmt = "csv" if args.format == "csv" else "json"
    for path in run_config(cfg, args.out or "bench_out", fmt):
        print(path, file=sys.stderr)


COMMANDS = {"parse": _cmd_parse, "graph": _cmd_graph, "solve": _cmd_solve, "bench": _cmd_bench}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    if not argv:
        parser.print_help(sys.stderr)
        return EXIT_USAGE
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.verb is None:
        parser.print_help(sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr)
    try:
        COMMANDS[args.verb](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"coalition-forge {args.verb}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, KeyError, OSError, JSONDecodeError, NoFeasibleSampleError) as exc:
        print(f"coalition-forge {args.verb}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DATA
    return 0


if __name__ == "__main__":
    sys.exit(main())
