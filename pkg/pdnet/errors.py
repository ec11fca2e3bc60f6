"""
Exception hierarchy for pdnet.

Every error raised on purpose by the library derives from PdnetError, so callers
(the CLI in particular) can map failures to exit codes in one place.
"""

from typing import Any, Optional


class PdnetError(Exception):
    """Base class for all pdnet errors."""

    #: Short machine-readable token printed by the CLI.
    reason = "error"
    exit_code = 1


class ConfigError(PdnetError, ValueError):
    """Invalid experiment configuration."""

    reason = "config-error"
    exit_code = 1


class DimensionError(PdnetError, ValueError):
    """Array shapes do not match the problem or the network."""

    reason = "config-error"
    exit_code = 1


class GraphError(PdnetError, ValueError):
    """Malformed or disconnected graph, or a mixing matrix unusable for the request."""

    reason = "assumption-violation"
    exit_code = 2


class AssumptionError(PdnetError, ValueError):
    """A weight triple or preset violates the standing assumptions."""

    reason = "assumption-violation"
    exit_code = 2

    def __init__(self, message: str, certificate: Optional[Any] = None):
        super().__init__(message)
        self.certificate = certificate


class ConvergenceError(PdnetError, RuntimeError):
    """An iterative procedure did not produce a usable result."""

    reason = "certification-failed"
    exit_code = 2


class DivergenceError(PdnetError, RuntimeError):
    """An iterate became nonfinite or exceeded the divergence bound."""

    reason = "divergence"
    exit_code = 3

    def __init__(self, iterate: str, k: int, magnitude: float):
        super().__init__(
            f"iterate {iterate} diverged at k={k} (max |entry| = {magnitude:.3e})"
        )
        self.iterate = iterate
        self.k = k
        self.magnitude = magnitude
