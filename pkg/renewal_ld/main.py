"""Command-line entry point for renewal-ld.

This module provides the ``renewal-ld`` command with the simulate,
quadrature, verify and fit subcommands, and maps toolkit errors to process
exit codes.
"""

import argparse
from collections.abc import Sequence
import logging
import sys

from renewal_ld import __version__
from renewal_ld.config import Settings, load_experiment_config, resolve_config
from renewal_ld.engine.pipeline import (
    FitPipeline,
    QuadraturePipeline,
    SimulationPipeline,
    VerifyPipeline,
)
from renewal_ld.errors import ConfigError, RenewalLDError
from renewal_ld.models import ExperimentConfig

logger = logging.getLogger(__name__)

COMMANDS = ("simulate", "quadrature", "verify", "fit")


def configure_logging(settings: Settings) -> None:
    """Send log records to stderr at the configured level."""
    fmt = "%(levelname)s %(name)s: %(message)s"
    if settings.log_timestamps:
        fmt = "%(asctime)s " + fmt
    logging.basicConfig(level=settings.log_level, format=fmt, stream=sys.stderr, force=True)


def build_parser() -> argparse.ArgumentParser:
    """Create the argument parser.

    Every subcommand takes the same options: ``--config`` (required),
    ``--out``, ``--threads`` and ``--seed``. The last three override the
    config file and the environment.

    Returns:
        Parser whose ``command`` attribute names the chosen subcommand.
    """
    parser = argparse.ArgumentParser(
        prog="renewal-ld",
        description="Finite-time large deviations of heavy-tailed renewal counting processes.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "simulate": "Monte Carlo histogram, MGF/CGF/ratio curves, rate functions and tails",
        "quadrature": "occupation table by convolution and the curves derived from it",
        "verify": "certify closed forms, bounds and limits; exit 5 on failure",
        "fit": "tail-asymptotic fit of log P[N_t < xt]",
    }
    for name in COMMANDS:
        cmd = sub.add_parser(name, help=helps[name])
        cmd.add_argument("--config", required=True, help="experiment JSON file")
        cmd.add_argument("--out", default=None, help="output directory (overrides config)")
        cmd.add_argument("--threads", type=int, default=None, help="worker threads")
        cmd.add_argument("--seed", type=int, default=None, help="base seed (overrides config)")
    return parser


def run_command(command: str, config: ExperimentConfig, threads: int) -> None:
    """Dispatch one subcommand on a resolved configuration."""
    if command == "simulate":
        if config.mode in ("mc", "both"):
            SimulationPipeline(config, threads).run()
        if config.mode in ("quadrature", "both"):
            QuadraturePipeline(config, threads).run()
    elif command == "quadrature":
        QuadraturePipeline(config, threads).run()
    elif command == "verify":
        report = VerifyPipeline(config, threads).run()
        logger.info(f"All enabled checks passed ({len(report.checks)} run)")
    elif command == "fit":
        FitPipeline(config, threads).run()
    else:
        raise ConfigError(f"unknown command {command}")


def main(argv: Sequence[str] | None = None) -> int:
    """Run the command line and return the process exit code."""
    args = build_parser().parse_args(argv)
    try:
        settings = Settings.from_env()
    except ConfigError as e:
        logging.basicConfig(stream=sys.stderr)
        logger.error(str(e))
        return e.exit_code
    configure_logging(settings)

    try:
        threads = args.threads if args.threads is not None else settings.threads
        if threads < 1:
            raise ConfigError(f"--threads must be >= 1, got {threads}")
        if args.seed is not None and not 0 <= args.seed < 2**64:
            raise ConfigError(f"--seed must be a 64-bit unsigned value, got {args.seed}")
        config = resolve_config(
            load_experiment_config(args.config), settings, output_dir=args.out, seed=args.seed
        )
        run_command(args.command, config, threads)
    except RenewalLDError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return e.exit_code
    except ValueError as e:
        # invalid arguments surfacing from the engine, e.g. rate_times off the grid
        logger.error(f"Invalid argument: {e}")
        return ConfigError.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
