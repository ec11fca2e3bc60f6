"""
Runners: one per CLI subcommand, each owning its output directory.
"""

from .base_runner import BaseRunner
from .run_runner import RunRunner
from .tradeoff_runner import TradeoffRunner
from .verify_runner import VerifyRunner

RUNNERS = {
    "run": RunRunner,
    "verify": VerifyRunner,
    "tradeoff": TradeoffRunner,
}

__all__ = ["BaseRunner", "RUNNERS", "RunRunner", "TradeoffRunner", "VerifyRunner"]
