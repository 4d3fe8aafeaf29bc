"""Command-line interface for the benchmark harness.

Subcommands: run (execute a config grid to CSV), summarize (per-cell medians),
plot (log-log SVG from a summary), selftest (fast sanity checks).

Exit codes: 0 success, 1 completed with failures (failed cells or failed
selftest checks), 2 bad usage, unreadable input, or invalid config.
"""

from __future__ import annotations

import argparse
import sys
from typing import Optional, Sequence

from .bench import (ConfigError, ExperimentConfig, read_csv, read_summary,
                    run_experiment, summarize, write_summary)
from .plotting import PLOT_KINDS, render_plot
from .selftest import run_selftest

__all__ = ["main"]


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sais-bench",
        description="Adaptive importance sampling benchmark harness.")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a benchmark config to CSV")
    run_p.add_argument("--config", required=True,
                       help="JSON experiment configuration")
    run_p.add_argument("--out", default="results.csv",
                       help="output CSV path (default: results.csv)")
    run_p.add_argument("--jobs", type=int, default=1,
                       help="worker processes (default: 1)")
    run_p.add_argument("--progress", action="store_true",
                       help="print a line per finished cell to stderr")

    sum_p = sub.add_parser("summarize", help="median summary of a results CSV")
    sum_p.add_argument("--in", dest="in_path", required=True,
                       help="results CSV from `run`")
    sum_p.add_argument("--out", required=True, help="summary CSV path")

    plot_p = sub.add_parser("plot", help="render a summary CSV as SVG")
    plot_p.add_argument("--in", dest="in_path", required=True,
                        help="summary CSV from `summarize`")
    plot_p.add_argument("--kind", required=True, choices=PLOT_KINDS)
    plot_p.add_argument("--out", required=True, help="output SVG path")

    sub.add_parser("selftest", help="run fast sanity checks")
    return parser


def _cmd_run(args: argparse.Namespace) -> int:
    try:
        config = ExperimentConfig.from_json(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    if args.jobs < 1:
        print("error: --jobs must be >= 1", file=sys.stderr)
        return 2

    progress = None
    if args.progress:
        def progress(row):
            status = row.error or "ok"
            print(f"  {row.method} budget={row.budget} "
                  f"rep={row.replicate}: {status}", file=sys.stderr)

    rows = run_experiment(config, jobs=args.jobs, out_path=args.out,
                          progress=progress)
    failed = sum(1 for r in rows if r.error)
    print(f"wrote {len(rows)} rows to {args.out}"
          + (f" ({failed} failed)" if failed else ""))
    if failed:
        for row in rows:
            if row.error:
                print(f"  failed: {row.method} budget={row.budget} "
                      f"rep={row.replicate}: {row.error}", file=sys.stderr)
        return 1
    return 0


def _cmd_summarize(args: argparse.Namespace) -> int:
    try:
        rows = read_csv(args.in_path)
    except (OSError, ValueError) as exc:
        print(f"error reading {args.in_path}: {exc}", file=sys.stderr)
        return 2
    summary = summarize(rows)
    if not summary:
        print("error: no usable rows to summarize", file=sys.stderr)
        return 1
    write_summary(summary, args.out)
    print(f"wrote {len(summary)} summary rows to {args.out}")
    return 0


def _cmd_plot(args: argparse.Namespace) -> int:
    try:
        rows = read_summary(args.in_path)
    except (OSError, ValueError) as exc:
        print(f"error reading {args.in_path}: {exc}", file=sys.stderr)
        return 2
    try:
        render_plot(rows, args.kind, args.out)
    except ValueError as exc:
        print(f"plot error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {args.kind} plot to {args.out}")
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "run":
        return _cmd_run(args)
    if args.command == "summarize":
        return _cmd_summarize(args)
    if args.command == "plot":
        return _cmd_plot(args)
    failures = run_selftest(verbose=True)
    return 1 if failures else 0


if __name__ == "__main__":
    raise SystemExit(main())
