"""Command-line front end: run sweeps, compare engines, plot results.

Exit status: 0 on success, 1 when ``compare`` finds tolerance violations,
2 on invalid configs or I/O failures.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from . import __version__
from .experiments import bundled_config_names, compare, load_spec, plot_table, run


def _spec_with_overrides(args: argparse.Namespace):
    spec = load_spec(args.config)
    updates = {}
    if args.trials is not None:
        updates["trials"] = args.trials
    if args.seed is not None:
        updates["seed"] = args.seed
    if getattr(args, "engine", None):
        updates["engines"] = args.engine
    return replace(spec, **updates) if updates else spec


def _cmd_run(args: argparse.Namespace) -> int:
    spec = _spec_with_overrides(args)
    table = run(spec, workers=args.workers)
    out = args.out or spec.out or f"{spec.name}.csv"
    table.write(out)
    print(
        f"wrote {out}: {len(table.rows)} rows "
        f"(engines={spec.engines}, trials={spec.trials}, seed={spec.seed})"
    )
    return 0


def _cmd_compare(args: argparse.Namespace) -> int:
    spec = replace(_spec_with_overrides(args), engines="both")
    report = compare(spec, workers=args.workers)
    text = "\n".join(report.lines())
    print(text)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    return 0 if report.ok else 1


def _cmd_plot(args: argparse.Namespace) -> int:
    out = plot_table(args.csv, args.out)
    print(f"wrote {out}")
    return 0


def _add_spec_options(sub: argparse.ArgumentParser, with_engine: bool) -> None:
    sub.add_argument("config", help="path to an INI config, or a bundled name (e.g. fig5b)")
    sub.add_argument("--trials", type=int, default=None, help="Monte Carlo trials per sweep point")
    sub.add_argument("--seed", type=int, default=None, help="root seed override")
    if with_engine:
        sub.add_argument(
            "--engine",
            choices=("analysis", "mc", "both"),
            default=None,
            help="engine override",
        )
    sub.add_argument("--out", default=None, help="output path")
    sub.add_argument("--workers", type=int, default=1, help="sweep-point worker threads")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nomacache",
        description="NOMA-assisted caching: sweep runner, engine comparison, plotting.",
        epilog=f"bundled configs: {', '.join(bundled_config_names())}",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command")

    run_p = sub.add_parser("run", help="execute a sweep config and write its CSV")
    _add_spec_options(run_p, with_engine=True)
    run_p.set_defaults(func=_cmd_run)

    cmp_p = sub.add_parser(
        "compare",
        help="run both engines and report analysis-vs-simulation discrepancies",
    )
    _add_spec_options(cmp_p, with_engine=False)
    cmp_p.set_defaults(func=_cmd_compare)

    plot_p = sub.add_parser("plot", help="render a run CSV as an SVG figure")
    plot_p.add_argument("csv", help="CSV file produced by 'run'")
    plot_p.add_argument("--out", default=None, help="output SVG path")
    plot_p.set_defaults(func=_cmd_plot)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not hasattr(args, "func"):
        parser.print_help()
        return 2
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
