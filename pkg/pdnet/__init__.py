"""
pdnet - unified primal-dual proximal methods for distributed composite optimization

One iterate parameterized by a weight triple (A, B, C) covers EXTRA, NIDS,
DIGing, NEXT/AugDGM and related methods. The package builds gossip matrices,
runs the iterate on simulated networks, predicts and certifies its linear
rate, checks the operator splitting behind that rate, and balances gossip
rounds against gradient steps.

Usage:
    # Certify NIDS on a 10-agent ring
    pdnet run --config experiment.json --out out/

    # Check the lifted operator factors
    pdnet verify --config experiment.json

    # Sweep gossip rounds per gradient step
    pdnet tradeoff --out out/
"""

from .algorithms import PrimalDualSolver, WeightTriple, preset, rate_prediction, validate_triple
from .certification import certify, empirical_rate, kkt_residual
from .errors import PdnetError
from .problems import CompositeProblem, NonsmoothTerm, random_problem
from .topology import Graph, GossipMatrix, build_metropolis, spectral_info

__version__ = "0.1.0"
__description__ = "Unified primal-dual proximal methods for distributed composite optimization"

__all__ = [
    "CompositeProblem",
    "Graph",
    "GossipMatrix",
    "NonsmoothTerm",
    "PdnetError",
    "PrimalDualSolver",
    "WeightTriple",
    "build_metropolis",
    "certify",
    "empirical_rate",
    "kkt_residual",
    "preset",
    "random_problem",
    "rate_prediction",
    "spectral_info",
    "validate_triple",
]
