"""Command-line entry point: ``patchattack {attack,simulate,ingest,report}``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .datasets import DatasetError, ingest, read_vector
from .harness import RunConfig, run_batch, write_plot_data
from .metrics import AttackReport
from .network import NetworkFormatError, ShapeError, forward, load_network
from .numeric import Arithmetic, format_number
from .patching import Objective, PatchConfig, Sparsity
from .properties import PropertyError

EXIT_OK, EXIT_FAILURES, EXIT_CONFIG = 0, 1, 2


def _add_patch_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("patch configuration")
    g.add_argument("--alpha", default="10", help="max |change| per edge weight (default 10)")
    g.add_argument("--delta-max", default="1/2", help="max |change| per input (default 1/2)")
    g.add_argument("--margin", default=None,
                   help="margin for strict inequalities (default 1/10000 or 1e-4)")
    g.add_argument("--objective", choices=[o.value for o in Objective], default="maxnorm")
    g.add_argument("--sparsity", choices=[s.value for s in Sparsity], default="pixels")
    g.add_argument("--arithmetic", choices=[a.value for a in Arithmetic], default="rational")
    g.add_argument("--equality-property", action="store_true",
                   help="keep hidden-layer properties as equalities (no increment/decrement relaxation)")
    g.add_argument("--equality-inactive", action="store_true",
                   help="require zero (not non-positive) pre-activations for inactive first-layer neurons")
    g.add_argument("--no-sign-constraints", action="store_true",
                   help="do not restrict weight-change signs using the neuron marking")
    g.add_argument("--ignore-unmentioned", action="store_true",
                   help="outputs the property does not mention impose no constraint during marking")
    g.add_argument("--clamp", nargs=2, metavar=("LO", "HI"), default=None,
                   help="keep adversarial inputs inside [LO, HI] (e.g. 0 1 for images)")
    g.add_argument("--backend", choices=["auto", "simplex", "highs"], default="auto")
    g.add_argument("--node-limit", type=int, default=10_000)
    g.add_argument("--time-limit", type=float, default=None)


def _patch_config(args) -> PatchConfig:
    return PatchConfig(
        alpha=args.alpha,
        delta_max=args.delta_max,
        margin=args.margin,
        objective=args.objective,
        sparsity=args.sparsity,
        arithmetic=args.arithmetic,
        relax_property=not args.equality_property,
        relax_inactive=not args.equality_inactive,
        sign_constraints=not args.no_sign_constraints,
        ignore_unmentioned=args.ignore_unmentioned,
        input_bounds=tuple(args.clamp) if args.clamp else None,
        backend=args.backend,
        node_limit=args.node_limit,
        time_limit=args.time_limit,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="patchattack",
                                     description="Sparse adversarial inputs from first-layer network patches.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("attack", help="attack one input or a sample of an ingested dataset")
    p.add_argument("network")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--input", help="vector file with one input")
    src.add_argument("--dataset", help="directory written by 'ingest'")
    p.add_argument("--property", default="argmax != pred",
                   help="property text, e.g. 'o[2] > o[1]' or 'argmax != pred'")
    p.add_argument("--samples", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", default="out")
    p.add_argument("--hidden-target", metavar="VALUES",
                   help="skip the patch search and translate these first-hidden-layer values (e.g. '1/8 0')")
    _add_patch_flags(p)

    p = sub.add_parser("simulate", help="print every layer of a forward pass")
    p.add_argument("network")
    p.add_argument("input")
    p.add_argument("--arithmetic", choices=[a.value for a in Arithmetic], default="rational")
    p.add_argument("--pre", action="store_true", help="also print pre-activation sums")

    p = sub.add_parser("ingest", help="convert IDX or CSV images to vectors.npy + labels.txt")
    p.add_argument("source")
    p.add_argument("--format", choices=["idx", "csv"], required=True)
    p.add_argument("--labels", help="IDX label file (idx format)")
    p.add_argument("--label-first", action="store_true", help="CSV rows start with an integer label")
    p.add_argument("--out", required=True)

    p = sub.add_parser("report", help="recompute aggregates of a report and emit plot data")
    p.add_argument("report")
    p.add_argument("--plot-data", help="write per-image metric table (CSV) here")
    return parser


def cmd_attack(args) -> int:
    run = RunConfig(network=args.network, dataset=args.dataset, input=args.input,
                    prop=args.property, patch=_patch_config(args), samples=args.samples,
                    seed=args.seed, out=args.out, jobs=args.jobs,
                    hidden_target=args.hidden_target)
    report, code = run_batch(run)
    agg = report.aggregate()
    print(json.dumps(agg, sort_keys=True))
    for rec in report.records:
        if rec.delta is not None and len(rec.delta) <= 16:
            print(f"record {rec.index}: {rec.status} delta = "
                  f"<{', '.join(format_number(v) for v in rec.delta)}>")
        else:
            print(f"record {rec.index}: {rec.status}")
    return code


def cmd_simulate(args) -> int:
    mode = Arithmetic(args.arithmetic)
    net = load_network(args.network, mode)
    x = read_vector(args.input, mode)
    trace = forward(net, x)
    for p in range(1, net.depth + 1):
        if args.pre and p > 1:
            print(f"pre {p}: " + " ".join(format_number(v) for v in trace.pre(p)))
        print(f"layer {p}: " + " ".join(format_number(v) for v in trace.layer(p)))
    return EXIT_OK


def cmd_ingest(args) -> int:
    vectors, labels = ingest(args.source, args.format, args.out, args.labels, args.label_first)
    print(f"wrote {len(vectors)} vectors of length {vectors.shape[1]}"
          + ("" if labels is None else " with labels") + f" to {args.out}")
    return EXIT_OK


def cmd_report(args) -> int:
    report = AttackReport.read(args.report)
    print(json.dumps(report.aggregate(), sort_keys=True))
    if args.plot_data:
        write_plot_data(report, args.plot_data)
    return EXIT_OK


COMMANDS = {"attack": cmd_attack, "simulate": cmd_simulate, "ingest": cmd_ingest, "report": cmd_report}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    for attr in ("network", "input", "source", "report", "dataset"):
        path = getattr(args, attr, None)
        if path and not Path(path).exists():
            print(f"error: {attr} path not found: {path}", file=sys.stderr)
            return EXIT_CONFIG
    try:
        return COMMANDS[args.command](args)
    except (OSError, NetworkFormatError, ShapeError, PropertyError, DatasetError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
