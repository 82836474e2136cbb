"""Command-line interface.

Subcommands: simulate <config>, reverse <config>, phase-dist <config>,
verify [--trials N] [--dims a,b,c] [--kinds nat,int,cyclic] [--seed S].
Exit codes: 0 success, 1 verification counterexample, 2 config error,
3 numerical failure (unstable step / tail overflow).
"""

from __future__ import annotations

import argparse
import sys

from .config import ExperimentConfig, parse_kind
from .errors import ConfigError, StepUnstableError, TailOverflowError
from .harness import run_phase_dist, run_reverse_demo, run_simulate, run_verify

EXIT_OK = 0
EXIT_COUNTEREXAMPLE = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="covphase",
        description=(
            "Phase statistics and phase-covariant dissipative dynamics on "
            "finite shift spectra"
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="integrate a configured run")
    p_sim.add_argument("config")

    p_rev = sub.add_parser(
        "reverse", help="forward pre-evolution then sign-flipped integration"
    )
    p_rev.add_argument("config")

    p_dist = sub.add_parser("phase-dist", help="dump p(phi) of the initial state")
    p_dist.add_argument("config")

    p_ver = sub.add_parser(
        "verify", help="randomized check that phase uncertainty never decreases"
    )
    p_ver.add_argument("--trials", type=int, default=1000, help="trials per kind")
    p_ver.add_argument("--dims", default="2," + ",".join(str(d) for d in range(3, 17)))
    p_ver.add_argument("--kinds", default="nat,int,cyclic")
    p_ver.add_argument("--seed", type=int, default=0)
    p_ver.add_argument("--out", default="verify_report.csv")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "simulate":
            paths = run_simulate(ExperimentConfig.from_path(args.config))
            for name, path in paths.items():
                print(f"{name}: {path}")
            return EXIT_OK
        if args.command == "reverse":
            paths = run_reverse_demo(ExperimentConfig.from_path(args.config))
            for name, path in paths.items():
                print(f"{name}: {path}")
            return EXIT_OK
        if args.command == "phase-dist":
            path = run_phase_dist(ExperimentConfig.from_path(args.config))
            print(f"phase_dist: {path}")
            return EXIT_OK
        if args.command == "verify":
            try:
                dims = [int(tok) for tok in args.dims.split(",") if tok.strip()]
                kinds = [parse_kind(tok) for tok in args.kinds.split(",") if tok.strip()]
            except ValueError as exc:
                raise ConfigError(f"bad flag value: {exc}")
            if not dims or not kinds:
                raise ConfigError("need at least one dimension and one kind")
            report = run_verify(
                trials=args.trials, dims=dims, kinds=kinds, seed=args.seed
            )
            report.write_csv(args.out)
            print(report.summary_line())
            print(f"report: {args.out}")
            return EXIT_OK if report.ok else EXIT_COUNTEREXAMPLE
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (StepUnstableError, TailOverflowError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
