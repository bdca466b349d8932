"""Command line entry point ``mortar-dg``."""

import argparse
import logging
import os
import sys

__all__ = ["main", "build_parser"]

_THREAD_VARS = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS",
                "NUMEXPR_NUM_THREADS")

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2


def build_parser():
    from .config import EXPERIMENTS

    parser = argparse.ArgumentParser(
        prog="mortar-dg",
        description="Nonconforming DG spectral element elastodynamics experiments.")
    parser.add_argument("experiment", choices=EXPERIMENTS)
    parser.add_argument("--config", required=True, help="JSON configuration file")
    parser.add_argument("--out", default=None, help="output directory (default: config 'output')")
    parser.add_argument("--threads", type=int, default=None,
                        help="number of BLAS/OpenMP threads")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.threads is not None:
        if args.threads < 1:
            print("error: --threads must be >= 1", file=sys.stderr)
            return EXIT_USAGE
        # must happen before numpy loads its BLAS
        for var in _THREAD_VARS:
            os.environ[var] = str(args.threads)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")

    from .config import ConfigError, load_config
    from .experiments import run_experiment

    try:
        cfg = load_config(args.config, args.experiment)
    except (OSError, ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    out_dir = args.out or cfg.output
    report = run_experiment(cfg, out_dir)
    for key, value in report.summary.items():
        print(f"{key}: {value}")
    print(f"outputs written to {out_dir}")
    if report.diverged_at is not None:
        print(f"error: state diverged at t = {report.diverged_at:.6g}", file=sys.stderr)
        return EXIT_FAILED
    if report.violations:
        for msg in report.violations:
            print(f"error: invariant violated: {msg}", file=sys.stderr)
        return EXIT_FAILED
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
