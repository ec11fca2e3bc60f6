"""
Communication graphs and gossip matrices.
"""

from .graph import Graph
from .gossip import (
    GossipMatrix,
    SpectralInfo,
    build_metropolis,
    chebyshev_factor,
    chebyshev_matrix,
    k_hop_power,
    lazy,
    spectral_info,
)

__all__ = [
    "Graph",
    "GossipMatrix",
    "SpectralInfo",
    "build_metropolis",
    "chebyshev_factor",
    "chebyshev_matrix",
    "k_hop_power",
    "lazy",
    "spectral_info",
]
