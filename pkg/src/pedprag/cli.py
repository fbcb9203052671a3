"""Command line: run, dump-policy, compare, validate."""

from __future__ import annotations

import argparse
import contextlib
import dataclasses
import json
import logging
import sys

from .harness import (
    TEACHERS,
    ConfigError,
    ExperimentConfig,
    compare_combos,
    dump_policy_table,
    format_report,
    load_config,
    run_experiment,
)
from .world import WorldError

_META = {"seeds": dict(nargs="+", type=int)}


def _add_overrides(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("config overrides (same names as the JSON keys)")
    for f in dataclasses.fields(ExperimentConfig):
        kw = _META.get(f.name, {"type": {"int": int, "float": float}.get(f.type, str)})
        g.add_argument(f"--{f.name}", dest=f.name, default=None, **kw)


def _overrides(args) -> dict:
    return {f.name: getattr(args, f.name) for f in dataclasses.fields(ExperimentConfig)}


@contextlib.contextmanager
def _open_out(path: str | None):
    if path in (None, "-"):
        yield sys.stdout
    else:
        with open(path, "w", newline="") as f:
            yield f


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pedprag", description="Teacher/learner referential-ambiguity simulator")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="-v progress, -vv exchange transcripts")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run an experiment and write metrics CSV")
    p.add_argument("--config", default=None)
    p.add_argument("--out", default="-")
    p.add_argument("--summary", default=None, help="also write the JSON summary here")
    _add_overrides(p)

    p = sub.add_parser("dump-policy", help="print a teacher's instruction-policy table")
    p.add_argument("--teacher", required=True, choices=TEACHERS)
    p.add_argument("--beta", type=float, default=None)
    p.add_argument("--world", default=None)
    p.add_argument("--format", choices=("csv", "text"), default="csv")
    p.add_argument("--out", default="-")

    p = sub.add_parser("compare", help="rank teacher/learner combos")
    p.add_argument("--configs", nargs="+", required=True)
    p.add_argument("--threshold", type=float, default=0.9)
    p.add_argument("--out", default="-")
    _add_overrides(p)

    p = sub.add_parser("validate", help="check a config file and print it with defaults filled")
    p.add_argument("--config", required=True)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = {0: logging.WARNING, 1: logging.INFO}.get(args.verbose, logging.DEBUG)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        if args.command == "run":
            cfg = load_config(args.config, _overrides(args))
            with _open_out(args.out) as out:
                _, summary = run_experiment(cfg, out)
            if args.summary:
                with open(args.summary, "w") as f:
                    json.dump(summary, f, indent=2, default=str)
        elif args.command == "dump-policy":
            cfg = load_config(None, {"beta": args.beta, "world": args.world})
            with _open_out(args.out) as out:
                out.write(dump_policy_table(args.teacher, cfg, args.format))
        elif args.command == "compare":
            overrides = {k: v for k, v in _overrides(args).items() if v is not None}
            cfgs = [load_config(path, overrides) for path in args.configs]
            report = format_report(compare_combos(cfgs, args.threshold))
            with _open_out(args.out) as out:
                out.write(report)
        elif args.command == "validate":
            cfg = load_config(args.config)
            print(json.dumps(cfg.to_dict(), indent=2))
    except (ConfigError, WorldError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
