"""Command-line front end: ``hon <command> ...``.

Every flag can also be set through an environment variable named ``HON_`` plus
the flag in upper case with dashes as underscores (``--min-support`` ->
``HON_MIN_SUPPORT``). Command-line values win over the environment.
Errors are reported as one JSON line on stderr with exit code 1.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Sequence

from . import __version__
from .errors import HONError
from .ingest import read_trajectories, write_trajectories
from .network import (
    build_first_order,
    build_network,
    format_edge_list,
    format_pajek,
    make_builder,
    read_edge_list,
)
from .rank import format_delta, pagerank, rank_delta
from .rules import ExtractionParams, build_observations, extract_rules
from .synth import PROFILES, GridConfig, generate_manifest, generate_trajectories, read_manifest, validate_recovery, write_manifest
from .vom import compare_rulesets, vom_contexts
from .walk import entropy_rate, evaluate_accuracy, return_probability

ENV_PREFIX = "HON_"


def _env(flag: str, default=None):
    return os.environ.get(ENV_PREFIX + flag.lstrip("-").replace("-", "_").upper(), default)


def _add(p: argparse.ArgumentParser, flag: str, *, type=str, default=None, help: str = "", required: bool = False, **kw):
    env = _env(flag)
    if env is not None:
        default = env if type is str else type(env)
        required = False
    if default is not None and help and "%(default)" not in help:
        help += " (default: %(default)s)"
    p.add_argument(flag, type=type, default=default, required=required, help=help, **kw)


def _add_flag(p: argparse.ArgumentParser, flag: str, help: str):
    env = _env(flag)
    default = env is not None and env.lower() in ("1", "true", "yes", "on")
    p.add_argument(flag, action="store_true", default=default, help=help)


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _input_options(p):
    p.add_argument("input", help="trajectory file, one trajectory per line")
    _add_flag(p, "--has-id", "first token of each line is a trajectory id")
    _add_flag(p, "--dedup-consecutive", "collapse repeated consecutive entities")
    _add(p, "--max-trajectory-len", type=int, help="drop trajectories longer than this (no default)")


def _model_options(p, representation: bool = True):
    _add(p, "--max-order", type=int, default=5, help="maximum rule order")
    _add(p, "--min-support", type=int, default=5, help="minimum count for a (source, target) pair")
    if representation:
        _add(p, "--representation", default="hon", choices=["first", "fixed", "hon"], help="network type")
        _add(p, "--k", type=int, default=2, help="order of the fixed-order baseline")


def _seed(p):
    _add(p, "--seed", type=int, required=True, help="random seed (required)")


def _threads(p):
    _add(p, "--threads", type=int, default=1, help="worker threads; output does not depend on it")


def _output(p):
    p.add_argument("-o", "--output", default=_env("--output"), help="output path; stdout when omitted")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hon", description="Higher-order networks from trajectory data.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build", help="build a network and write its edge list")
    _input_options(p)
    _model_options(p)
    _output(p)
    _add(p, "--pajek", help="also write a Pajek .net file here")
    _add(p, "--rules", help="also write the extracted rule dump here (hon only)")

    p = sub.add_parser("eval", help="held-out random-walk accuracy")
    _input_options(p)
    _model_options(p)
    _seed(p)
    _threads(p)
    _add(p, "--holdout", type=int, default=3, help="tail length held out per trajectory")
    _add(p, "--repeats", type=int, default=1000, help="walks per test trajectory")
    _add(p, "--format", default="csv", choices=["csv", "json"], help="report format")
    _output(p)

    p = sub.add_parser("metrics", help="node/edge counts, density, entropy rate and return probabilities")
    _input_options(p)
    _model_options(p)
    _seed(p)
    _add(p, "--beta", type=float, default=0.01, help="teleport probability for the stationary distribution")
    _add(p, "--return-steps", type=_int_list, default=[2], help="comma-separated step counts for return probability")
    _add(p, "--samples", type=int, default=100_000, help="Monte Carlo walkers for return probability")
    _output(p)

    p = sub.add_parser("rank", help="PageRank aggregated per entity")
    _input_options(p)
    _model_options(p)
    _add(p, "--damping", type=float, default=0.85, help="damping factor")
    _add(p, "--teleport", default="node", choices=["node", "entity"], help="teleport distribution")
    _add(p, "--delta", help="also write a delta report against the first-order network here")
    _output(p)

    p = sub.add_parser("synth", help="generate the synthetic grid data set")
    _seed(p)
    _add(p, "--profile", default="ci", choices=sorted(PROFILES), help="size profile")
    _add(p, "--walkers", type=int, help="override the profile's walker count")
    _add(p, "--steps", type=int, help="override steps per walker (default 100)")
    _add(p, "--rows", type=int, help="grid rows (default 10)")
    _add(p, "--cols", type=int, help="grid columns (default 10)")
    _add(p, "--rule-counts", type=_int_list, default=[10, 10, 10], help="injected rules of order 2,3,4,...")
    _add(p, "--out-dir", required=True, help="directory for manifest.json and trajectories.txt")

    p = sub.add_parser("validate", help="compare extracted rules with a synthetic manifest")
    _input_options(p)
    _model_options(p, representation=False)
    _add(p, "--manifest", required=True, help="manifest.json written by synth")
    _add(p, "--format", default="csv", choices=["csv", "json"], help="report format")
    _output(p)

    p = sub.add_parser("vom-compare", help="contexts retained by rule growing vs a pruned context tree")
    _input_options(p)
    _model_options(p, representation=False)
    _output(p)

    p = sub.add_parser("sweep", help="accuracy and network size over a parameter range")
    _input_options(p)
    _model_options(p, representation=False)
    _seed(p)
    _threads(p)
    _add(p, "--param", required=True, choices=["min_support", "max_order"], help="parameter to vary")
    _add(p, "--values", type=_int_list, required=True, help="comma-separated values")
    _add(p, "--holdout", type=int, default=3, help="tail length held out per trajectory")
    _add(p, "--repeats", type=int, default=1000, help="walks per test trajectory")
    _output(p)

    p = sub.add_parser("export", help="convert an edge-list file to Pajek")
    p.add_argument("input", help="edge list written by build")
    _add(p, "--format", default="pajek", choices=["pajek", "edgelist"], help="output format")
    _output(p)
    return parser


def _emit(text: str, path: str | None) -> None:
    if path:
        Path(path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _load(args):
    return read_trajectories(
        args.input,
        has_id=args.has_id,
        dedup_consecutive=args.dedup_consecutive,
        max_len=args.max_trajectory_len,
    )


def _builder(args):
    return make_builder(args.representation, args.max_order, args.min_support, args.k)


def _params(args) -> ExtractionParams:
    return ExtractionParams(max_order=args.max_order, min_support=args.min_support)


def cmd_build(args) -> None:
    ts = _load(args)
    if args.representation == "hon":
        rules = extract_rules(ts, _params(args))
        if args.rules:
            Path(args.rules).write_text(rules.dump(), encoding="utf-8")
        g = build_network(rules)
    else:
        g = _builder(args)(ts)
    if args.output:
        Path(args.output).write_text(format_edge_list(g), encoding="utf-8")
    if args.pajek:
        Path(args.pajek).write_text(format_pajek(g), encoding="utf-8")
    summary = f"nodes,edges,density\n{g.node_count},{g.edge_count},{g.density!r}\n"
    # the summary goes to stderr when stdout carries the edge list
    if args.output:
        sys.stdout.write(summary)
    else:
        sys.stdout.write(format_edge_list(g))
        sys.stderr.write(summary)


def cmd_eval(args) -> None:
    report = evaluate_accuracy(_load(args), _builder(args), args.holdout, args.repeats, args.seed, args.threads)
    text = json.dumps(report.to_dict(), indent=2) + "\n" if args.format == "json" else report.to_csv()
    _emit(text, args.output)


def cmd_metrics(args) -> None:
    g = _builder(args)(_load(args))
    rows = [
        ("nodes", g.node_count),
        ("edges", g.edge_count),
        ("density", g.density),
        ("entropy_rate", entropy_rate(g, args.beta)),
    ]
    for k in args.return_steps:
        rows.append((f"return_probability_{k}", return_probability(g, k, args.samples, args.seed, args.beta)))
    _emit("metric,value\n" + "".join(f"{k},{v!r}\n" for k, v in rows), args.output)


def cmd_rank(args) -> None:
    ts = _load(args)
    g = _builder(args)(ts)
    rv = pagerank(g, args.damping, teleport=args.teleport)
    _emit(rv.to_csv(), args.output)
    if args.delta:
        base = pagerank(build_first_order(ts, args.min_support), args.damping, teleport=args.teleport)
        Path(args.delta).write_text(format_delta(rank_delta(base.entity_scores, rv.entity_scores)), encoding="utf-8")


def cmd_synth(args) -> None:
    base = PROFILES[args.profile]
    cfg = GridConfig(
        rows=args.rows or base.rows,
        cols=args.cols or base.cols,
        n_walkers=args.walkers or base.n_walkers,
        steps_per_walker=args.steps or base.steps_per_walker,
        seed=args.seed,
    )
    counts = {order: n for order, n in enumerate(args.rule_counts, start=2)}
    manifest = generate_manifest(cfg, counts)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_manifest(manifest, out / "manifest.json")
    ts = generate_trajectories(cfg, manifest)
    write_trajectories(ts, out / "trajectories.txt")
    sys.stdout.write(f"rules,trajectories,movements\n{len(manifest)},{len(ts)},{sum(len(t) - 1 for t in ts)}\n")


def cmd_validate(args) -> None:
    report = validate_recovery(extract_rules(_load(args), _params(args)), read_manifest(args.manifest))
    if args.format == "json":
        text = json.dumps(report.to_dict(), indent=2) + "\n"
    else:
        text = report.to_csv() + f"exact_match,{str(report.exact_match).lower()}\n"
    _emit(text, args.output)


def cmd_vom_compare(args) -> None:
    ts = _load(args)
    params = _params(args)
    hon = extract_rules(ts, params)
    vom = vom_contexts(build_observations(ts, params.max_order), params)
    _emit(compare_rulesets(hon, vom).to_csv(), args.output)


def cmd_sweep(args) -> None:
    ts = _load(args)
    lines = [f"{args.param},edges,nodes," + ",".join(f"accuracy_{h}" for h in range(1, args.holdout + 1))]
    for v in args.values:
        order = v if args.param == "max_order" else args.max_order
        support = v if args.param == "min_support" else args.min_support
        build = make_builder("hon", order, support)
        full = build(ts)
        report = evaluate_accuracy(ts, build, args.holdout, args.repeats, args.seed, args.threads)
        acc = ",".join(repr(report.mean[h]) for h in range(1, args.holdout + 1))
        lines.append(f"{v},{full.edge_count},{full.node_count},{acc}")
    _emit("".join(line + "\n" for line in lines), args.output)


def cmd_export(args) -> None:
    g = read_edge_list(args.input)
    _emit(format_pajek(g) if args.format == "pajek" else format_edge_list(g), args.output)


COMMANDS = {
    "build": cmd_build,
    "eval": cmd_eval,
    "metrics": cmd_metrics,
    "rank": cmd_rank,
    "synth": cmd_synth,
    "validate": cmd_validate,
    "vom-compare": cmd_vom_compare,
    "sweep": cmd_sweep,
    "export": cmd_export,
}


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        COMMANDS[args.command](args)
    except (HONError, OSError, ValueError) as exc:
        err = {"error": type(exc).__name__, "message": str(exc), "command": args.command}
        sys.stderr.write(json.dumps(err) + "\n")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
