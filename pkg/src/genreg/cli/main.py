#!/usr/bin/env python3
"""CLI entry point for genreg.

Usage:
    genreg fit --x X.csv --y y.csv --graph chain --lambda1 1 --lambda2 0.1
    genreg cv --x X.csv --y y.csv --graph grid:11x11 --jobs 4
    genreg synth --experiment study.toml --out results/
    genreg bench --sizes 250,500,1000 --n 2000 --timeout 600
    genreg eigen-curve --graph chain:100 --cov toeplitz --cov-rho 0.8
    genreg re-check --graph chain:20 --n 200
    genreg graph --kind star --p 4
    genreg theory --graph chain:100 --n 70 --tv-linf 5
"""

from __future__ import annotations

import argparse
import logging
import sys
from collections.abc import Sequence
from typing import Any

from genreg.cli.commands import COMMANDS
from genreg.config import RunConfig, load_toml
from genreg.errors import ExitCode, GenRegError
from genreg.penalty import HYPERPARAMETER_NAMES, LossConvention, Preset
from genreg.solvers import SolverKind

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s :%(message)s"

# Parser bookkeeping that never reaches RunConfig.
_META = ("command", "config", "verbose", "quiet")


def configure_logging(verbose: int = 0, quiet: bool = False) -> None:
    """Log to stderr; ``-v`` for INFO, ``-vv`` for DEBUG, ``-q`` for errors only."""
    if quiet:
        level = logging.ERROR
    else:
        level = {0: logging.WARNING, 1: logging.INFO}.get(verbose, logging.DEBUG)
    logging.basicConfig(stream=sys.stderr, format=LOG_FORMAT, level=level, force=True)
    logging.captureWarnings(True)


def _common_options() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--config", help="TOML file of flag defaults")
    parent.add_argument(
        "-v", "--verbose", action="count", default=0, help="More logging (repeatable)"
    )
    parent.add_argument("-q", "--quiet", action="store_true", help="Only log errors")
    parent.add_argument("--out", help="Output directory (default: out)")
    parent.add_argument("--seed", type=int, help="Random seed (default: 0)")
    parent.add_argument("--jobs", type=int, help="Worker processes (default: 1)")
    return parent


def _graph_options() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument(
        "--graph", help="Edge-list file or preset (chain:100, grid:11x11, barbell:3x4)"
    )
    parent.add_argument("--kind", help="Graph family when --graph is not given")
    parent.add_argument("--p", help="Graph size for --kind (grid/barbell: 11x11, 3x4)")
    return parent


def _covariance_options() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument(
        "--cov",
        choices=["identity", "toeplitz", "laplacian_inverse"],
        help="Design covariance (default: identity)",
    )
    parent.add_argument("--cov-rho", type=float, help="Toeplitz correlation (default: 0.5)")
    parent.add_argument("--cov-c", type=float, help="Laplacian-inverse shift (default: 0.5)")
    return parent


def _model_options() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--x", help="Design matrix CSV (n x p)")
    parent.add_argument("--y", help="Response CSV (n values)")
    parent.add_argument(
        "--graph", help="Edge-list file or preset (chain, chain:100, grid:11x11)"
    )
    parent.add_argument(
        "--preset", choices=[p.value for p in Preset], help="Estimator (default: gen)"
    )
    for name in HYPERPARAMETER_NAMES:
        parent.add_argument(f"--{name}", type=float, help=f"Value of {name}")
        parent.add_argument(
            f"--grid-{name}", dest=f"grid_{name}", help=f"Comma-separated CV grid for {name}"
        )
    parent.add_argument(
        "--loss",
        dest="loss_convention",
        choices=[c.value for c in LossConvention],
        help="Loss scaling the hyperparameters refer to (default: half_sumsq)",
    )
    parent.add_argument(
        "--solver", choices=[s.value for s in SolverKind], help="Solver (default: cd)"
    )
    parent.add_argument("--tol", type=float, help="Stopping tolerance")
    parent.add_argument("--max-iter", type=int, help="Iteration cap")
    parent.add_argument("--tau", type=float, help="IP barrier growth factor (default: 10)")
    parent.add_argument("--alpha", type=float, help="IP sufficient decrease (default: 0.01)")
    parent.add_argument("--gamma", type=float, help="IP backtracking factor (default: 0.5)")
    parent.add_argument("--rho-admm", type=float, help="ADMM penalty parameter (default: 1)")
    parent.add_argument("--timeout", type=float, help="Wall-clock limit in seconds")
    return parent


def build_parser() -> argparse.ArgumentParser:
    """The ``genreg`` argument parser with one subparser per command."""
    from genreg import __version__

    parser = argparse.ArgumentParser(
        description="Generalized Elastic Net estimation and experiments",
        prog="genreg",
    )
    parser.add_argument("--version", action="version", version=f"genreg {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    common = _common_options()
    model = _model_options()
    graph = _graph_options()
    cov = _covariance_options()

    sub.add_parser("fit", parents=[common, model], help="Fit one estimator")

    cv = sub.add_parser("cv", parents=[common, model], help="Grid-search cross-validation")
    cv.add_argument("--k", type=int, help="Number of folds (default: 5)")

    synth = sub.add_parser("synth", parents=[common], help="Run a resampling study")
    synth.add_argument("--experiment", help="Experiment TOML (default: built-in chain study)")
    synth.add_argument("--replicates", type=int, help="Override the replicate count")

    bench = sub.add_parser("bench", parents=[common], help="Time the three solvers")
    bench.add_argument("--n", type=int, help="Sample size (default: 2000)")
    bench.add_argument("--sizes", help="Comma-separated p values (default: 250,500,1000)")
    bench.add_argument("--kind", help="Graph family (default: chain)")
    bench.add_argument("--solvers", help="Comma-separated solvers (default: cd,ip,admm)")
    bench.add_argument("--repeats", type=int, help="Timings per point (default: 3)")
    bench.add_argument("--timeout", type=float, help="Per-fit wall-clock limit in seconds")

    eigen = sub.add_parser(
        "eigen-curve", parents=[common, graph, cov], help="Minimum-eigenvalue curve"
    )
    eigen.add_argument(
        "--grid-lambda2", dest="grid_lambda2", help="Comma-separated lambda2 values"
    )

    re_check = sub.add_parser(
        "re-check", parents=[common, graph, cov], help="Monte Carlo restricted-eigenvalue check"
    )
    re_check.add_argument("--n", type=int, help="Rows per trial (default: 200)")
    re_check.add_argument("--trials", type=int, help="Number of designs (default: 50)")
    re_check.add_argument("--directions", type=int, help="Directions per design (default: 20)")

    sub.add_parser("graph", parents=[common, graph], help="Dump graph matrices and spectra")

    theory = sub.add_parser(
        "theory", parents=[common, graph, cov], help="Theoretical tuning parameters"
    )
    theory.add_argument("--n", type=int, help="Sample size (default: 100)")
    theory.add_argument("--sigma", type=float, help="Noise level (default: 1)")
    theory.add_argument("--tv-linf", type=float, help="||D beta*||_inf (default: 0.3)")
    return parser


def build_config(args: argparse.Namespace) -> RunConfig:
    """Merge defaults, the ``--config`` file and explicit flags."""
    base: dict[str, Any] = load_toml(args.config) if args.config else {}
    config = RunConfig.from_mapping(args.command, base)
    flags = {k: v for k, v in vars(args).items() if k not in _META}
    return config.merged(flags)


def main(argv: Sequence[str] | None = None) -> int:
    """Run a genreg subcommand and return its exit code."""
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.verbose, args.quiet)

    try:
        config = build_config(args)
        logger.info("running %s with output in %s", args.command, config.out)
        return int(COMMANDS[args.command](config))
    except GenRegError as exc:
        logger.error("%s", exc)
        return int(exc.exit_code)
    except ValueError as exc:
        logger.error("invalid argument: %s", exc)
        return int(ExitCode.USAGE)
    except OSError as exc:
        logger.error("%s", exc)
        return int(ExitCode.IO)
    except KeyboardInterrupt:
        logger.error("interrupted")
        return int(ExitCode.USAGE)


if __name__ == "__main__":
    sys.exit(main())
