"""Command-line entry point: ``robustpr run`` and ``robustpr crb``."""
from __future__ import annotations

import argparse
import sys

from .experiment import ConfigError, load_config, run_experiment, summarize, write_outputs


def _common(parser):
    parser.add_argument("--config", required=True, help="YAML experiment config")
    parser.add_argument("--seed", type=int, help="master seed (overrides the config)")
    parser.add_argument("--trials", type=int, help="trials per grid point (overrides the config)")
    parser.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config entry, e.g. --set noise.kind=laplacian")
    parser.add_argument("--jobs", type=int, default=1, help="worker processes (default 1)")


def build_parser():
    parser = argparse.ArgumentParser(prog="robustpr", description="Robust phase retrieval experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a Monte-Carlo experiment and write CSV files")
    _common(run)
    run.add_argument("--out", default="results.csv", help="per-trial CSV path (default results.csv)")
    run.add_argument("--emit-plots", action="store_true", help="also write a PNG of the summary")

    crb = sub.add_parser("crb", help="tabulate Laplacian and Gaussian CRBs for a config")
    _common(crb)
    crb.add_argument("--out", help="optional per-trial CSV path")
    return parser


def _print_summary(summary, stream):
    cols = ("grid_value", "solver", "trials", "mse_db", "median_db", "success_rate",
            "crb_laplacian", "crb_gaussian")
    print("\t".join(cols), file=stream)
    for rec in summary:
        print("\t".join(f"{rec[c]:.6g}" if isinstance(rec[c], float) else str(rec[c]) for c in cols),
              file=stream)


def main(argv=None):
    args = build_parser().parse_args(argv)
    overrides = list(args.overrides)
    if args.command == "crb":
        overrides.append("scenario=crb_table")
    try:
        if args.jobs < 1:
            raise ConfigError("--jobs must be at least 1")
        cfg = load_config(args.config, overrides, seed=args.seed, trials=args.trials)
        rows = run_experiment(cfg, jobs=args.jobs)
        if args.out:
            paths = write_outputs(cfg, rows, args.out, emit_plots=getattr(args, "emit_plots", False))
            for path in paths:
                print(f"wrote {path}", file=sys.stderr)
        _print_summary(summarize(rows, cfg["success_threshold"]), sys.stdout)
    except ConfigError as exc:
        print(f"robustpr: config error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError, ArithmeticError) as exc:
        print(f"robustpr: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
