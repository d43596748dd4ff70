"""Command-line entry point: ``fheat run | catalog | report``."""

from __future__ import annotations

import argparse
import sys

from .campaign import load_config, load_report, render_report, run_campaign
from .errors import ConfigError
from .geometry import CATALOG, WEIGHTS


def list_catalog() -> str:
    lines = ["spaces:"]
    lines += [f"  {name:<11} {text}" for name, text in CATALOG.items()]
    lines.append("weights:")
    lines += [f"  {name:<11} {text}" for name, text in WEIGHTS.items()]
    return "\n".join(lines)


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fheat",
                                description="Numerical checks for the nonlinear f-heat equation.")
    sub = p.add_subparsers(dest="verb", required=True)
    run = sub.add_parser("run", help="run a campaign from an INI config")
    run.add_argument("config")
    run.add_argument("--jobs", type=int, default=None, help="worker threads")
    run.add_argument("--seed", type=int, default=None, help="campaign seed (u64)")
    run.add_argument("--out", default=None, help="output directory")
    run.add_argument("--quiet", action="store_true")
    sub.add_parser("catalog", help="list model spaces and weight profiles")
    rep = sub.add_parser("report", help="render a report.json as a table")
    rep.add_argument("directory")
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    if args.verb == "catalog":
        print(list_catalog())
        return 0
    try:
        if args.verb == "report":
            report = load_report(args.directory)
            print(render_report(report))
            return 0 if report["passed"] else 1
        config = load_config(args.config, seed=args.seed, jobs=args.jobs, out=args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    report = run_campaign(config)
    if not args.quiet:
        print(render_report(report))
    return 0 if report["passed"] else 1


if __name__ == "__main__":
    sys.exit(main())
