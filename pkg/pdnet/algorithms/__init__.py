"""
The unified primal-dual iterate, its weight triples and rate theory, and the
centralized baseline.
"""

from .centralized import CentralizedRun, prox_grad_run
from .rates import RatePrediction, rate_prediction
from .unified import AlgorithmState, PrimalDualSolver, Trajectory
from .weights import (
    PRESETS,
    ConditionCheck,
    TripleCertificate,
    WeightTriple,
    preset,
    require_valid,
    validate_triple,
)

__all__ = [
    "AlgorithmState",
    "CentralizedRun",
    "ConditionCheck",
    "PRESETS",
    "PrimalDualSolver",
    "RatePrediction",
    "Trajectory",
    "TripleCertificate",
    "WeightTriple",
    "preset",
    "prox_grad_run",
    "rate_prediction",
    "require_valid",
    "validate_triple",
]
