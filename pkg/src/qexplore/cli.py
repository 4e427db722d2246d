"""``qexplore`` command-line entry point.

Exit codes: 0 success, 1 configuration error, 2 PAC check failure (``verify``).
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from qexplore import bench

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_PAC = 2


def _overrides(args) -> dict:
    return {"seed": args.seed, "trials": args.trials, "jobs": args.jobs}


def _cmd_run(args) -> int:
    cfg = bench.load_config(args.config, **_overrides(args))
    out = bench.run(cfg, args.out)
    print(bench.format_summary(out.summary))
    print(f"wrote {len(out.records)} rows to {out.path}")
    return EXIT_OK


def _cmd_compare(args) -> int:
    configs = [bench.load_config(p, **_overrides(args)) for p in args.configs]
    print(bench.format_comparison(bench.compare(configs)))
    return EXIT_OK


def _cmd_verify(args) -> int:
    try:
        records = bench.read_csv(args.csv)
    except (OSError, ValueError) as exc:
        raise bench.ConfigError(str(exc)) from None
    report = bench.rescore(records, replay=args.replay)
    print(bench.format_summary(report.summary))
    for line in report.mismatches:
        print(f"replay mismatch: {line}")
    return EXIT_OK if report.ok else EXIT_PAC


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qexplore", description="Quantile exploration experiments.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, help="master seed (overrides the config)")
        p.add_argument("--trials", type=int, help="trials per sweep point")
        p.add_argument("--jobs", type=int, help="worker processes")

    p = sub.add_parser("run", help="run one config and write a CSV")
    p.add_argument("config", type=Path)
    p.add_argument("--out", type=Path, help="CSV path (overrides the config)")
    common(p)
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("compare", help="paired sample-count ratios between configs")
    p.add_argument("configs", nargs="+", type=Path)
    common(p)
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("verify", help="re-score a results CSV against the PAC target")
    p.add_argument("csv", type=Path)
    p.add_argument("--replay", action="store_true", help="re-run every row from its seed")
    p.set_defaults(func=_cmd_verify)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except bench.ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
