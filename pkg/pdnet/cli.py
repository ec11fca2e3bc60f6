"""
pdnet CLI - Command Line Interface for the pdnet experiments.

Runs and certifies the unified primal-dual iterate, checks the operator
splitting behind its rate, and sweeps the gossip-rounds tradeoff.

Exit codes: 0 pass, 1 usage or IO error, 2 assumption or certification
failure, 3 divergence.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

from .config import ExperimentConfig
from .errors import AssumptionError, PdnetError
from .runners import RUNNERS
from .settings import Settings, get_settings

logger = logging.getLogger(__name__)


def fail(reason: str, message: str) -> None:
    """Print the single machine-readable failure line."""
    print(f"❌ {reason}: {message}", file=sys.stderr)


def load_config(path: Optional[str]) -> ExperimentConfig:
    if path is None:
        return ExperimentConfig()
    return ExperimentConfig.load(path)


def run_command(command: str, args: argparse.Namespace, settings: Settings) -> int:
    """
    Build the runner for a subcommand and map its outcome to an exit code.

    Args:
        command: One of run, verify, tradeoff
        args: Parsed arguments carrying config, out and seed
        settings: Environment settings supplying the remaining defaults

    Returns:
        Process exit code
    """
    try:
        config = load_config(args.config)
        seed = next(s for s in (args.seed, config.seed, settings.seed) if s is not None)
        out = Path(args.out or config.output_dir or settings.out_dir)
        runner = RUNNERS[command](config.with_overrides(seed=seed), out, seed, settings)
        passed = runner.generate()
    except AssumptionError as e:
        fail(e.reason, str(e))
        if e.certificate is not None:
            for check in e.certificate.checks:
                if not check.passed:
                    print(f"   {check.name}: {check.detail}", file=sys.stderr)
        return e.exit_code
    except PdnetError as e:
        fail(e.reason, str(e))
        return e.exit_code
    except OSError as e:
        fail("io-error", str(e))
        return 1

    if not passed:
        fail("certification-failed", f"{command} did not pass, see {out}")
        return 2

    print(f"✅ {command} passed, artifacts in {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="pdnet - unified primal-dual methods for distributed composite optimization",
        prog="pdnet",
    )
    subparsers = parser.add_subparsers(dest="command", help="Available commands")

    for name, help_text in (
        ("run", "Run one preset and certify its rate and KKT residuals"),
        ("verify", "Check the operator splitting and the contraction chain"),
        ("tradeoff", "Sweep gossip rounds per gradient step"),
    ):
        sub = subparsers.add_parser(name, help=help_text)
        sub.add_argument("--config", help="Experiment config (JSON)", default=None)
        sub.add_argument("--out", help="Output directory (overrides the config)", default=None)
        sub.add_argument("--seed", type=int, help="Seed (overrides the config)", default=None)

    subparsers.add_parser("version", help="Show pdnet version")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Main CLI entry point."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 0 if e.code in (0, None) else 1

    try:
        settings = get_settings()
        logging.basicConfig(level=settings.log_level, format="%(levelname)s %(name)s: %(message)s")
    except (PdnetError, ValueError) as e:
        fail("config-error", str(e))
        return 1

    if args.command in RUNNERS:
        return run_command(args.command, args, settings)
    if args.command == "version":
        from . import __version__

        print(f"pdnet {__version__}")
        return 0

    parser.print_help()
    return 1


if __name__ == "__main__":
    sys.exit(main())
