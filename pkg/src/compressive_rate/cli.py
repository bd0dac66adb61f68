"""Command-line entry point: ``compressive-rate <subcommand>``.

Exit codes: 0 on success, 1 for configuration errors, 2 when the solver
failure budget is exceeded or an inline audit fails.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from .experiments import (
    ConfigError,
    load_config,
    run_bounds_sweep,
    run_recovery_phase,
    run_sumrate_experiment,
    write_rows,
)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_FAILURE = 2


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="compressive-rate", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="sum-rate experiment from a TOML config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--workers", type=int, default=None, help="override simulation.workers")

    p = sub.add_parser("bounds", help="RIP compression-ratio curve over N")
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--eps", type=float, default=0.9)
    p.add_argument("--delta", type=float, default=1.0 / 3.0)
    p.add_argument("--n-min", type=int, default=100)
    p.add_argument("--n-max", type=int, default=10**7)
    p.add_argument("--num", type=int, default=61)
    p.add_argument("--out", required=True)

    p = sub.add_parser("recover", help="empirical BPDN recovery fraction over (M, k)")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k-grid", type=_int_list, required=True)
    p.add_argument("--m-grid", type=_int_list, required=True)
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)

    sub.add_parser("selftest", help="quick invariant checks")
    return parser


def _simulate(args) -> int:
    cfg = load_config(args.config)
    if args.workers is not None:
        if args.workers < 1:
            raise ConfigError("--workers must be >= 1")
        cfg = replace(cfg, workers=args.workers)
    result = run_sumrate_experiment(cfg)
    write_rows(result.rows, args.out, args.format)
    status = EXIT_OK
    if result.n_solves:
        print(f"solver failures: {result.n_solver_failures}/{result.n_solves}", file=sys.stderr)
    if result.failure_rate > cfg.failure_budget:
        print(f"failure rate {result.failure_rate:.3%} exceeds budget {cfg.failure_budget:.3%}",
              file=sys.stderr)
        status = EXIT_FAILURE
    for msg in result.audit_violations:
        print(f"audit: {msg}", file=sys.stderr)
        status = EXIT_FAILURE
    return status


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "simulate":
            return _simulate(args)
        if args.command == "bounds":
            rows = run_bounds_sweep(args.k, args.eps, args.delta, args.n_min, args.n_max, args.num)
            write_rows(rows, args.out)
            return EXIT_OK
        if args.command == "recover":
            rows = run_recovery_phase(args.n, args.k_grid, args.m_grid, args.trials, args.seed)
            write_rows(rows, args.out)
            return EXIT_OK
        from .selftest import run_selftest

        return EXIT_OK if run_selftest() else EXIT_FAILURE
    except (ConfigError, ValueError, OSError) as e:
        # bound evaluators reject out-of-domain arguments with ValueError too
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
