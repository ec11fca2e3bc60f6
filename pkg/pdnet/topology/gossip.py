"""
Gossip matrices compliant with a graph, their K-hop polynomials, and spectral data.
"""

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from numpy.typing import NDArray

from ..errors import ConfigError, GraphError
from ..linalg import (
    EIG_SNAP,
    Matrix,
    averaging_matrix,
    lambda_2,
    sym_eigvals,
    symmetrize,
)
from .graph import Graph

logger = logging.getLogger(__name__)

# Row/column sums of produced matrices stay within this of 1 (scaled by hop order).
STOCHASTIC_TOL = 1e-12

# Entries below this in magnitude count as structural zeros.
PATTERN_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class GossipMatrix:
    """
    Symmetric doubly stochastic mixing matrix tied to a graph.

    Attributes:
        entries: m x m matrix W (read-only copy).
        graph: Graph the matrix is compliant with.
        hop_order: Number of communication rounds one multiplication costs.
    """

    entries: Matrix
    graph: Graph
    hop_order: int = 1

    def __post_init__(self) -> None:
        w = np.array(self.entries, dtype=float, copy=True)
        m = self.graph.m

        if w.shape != (m, m):
            raise GraphError(f"gossip matrix has shape {w.shape}, graph has m={m}")
        if not np.all(np.isfinite(w)):
            raise GraphError("gossip matrix has nonfinite entries")
        if self.hop_order < 1:
            raise GraphError(f"hop_order must be >= 1, got {self.hop_order}")

        scale = max(1.0, float(np.max(np.abs(w))))
        if np.max(np.abs(w - w.T)) > STOCHASTIC_TOL * scale:
            raise GraphError("gossip matrix is not symmetric")

        tol = STOCHASTIC_TOL * max(1, self.hop_order) * scale
        ones = np.ones(m)
        if np.linalg.norm(w @ ones - ones) > tol * np.sqrt(m):
            raise GraphError("gossip matrix rows do not sum to 1")
        if np.linalg.norm(ones @ w - ones) > tol * np.sqrt(m):
            raise GraphError("gossip matrix columns do not sum to 1")

        if self.hop_order == 1:
            allowed = self.graph.adjacency() + np.eye(m)
            stray = (np.abs(w) > PATTERN_TOL) & (allowed == 0)
            if np.any(stray):
                i, j = np.argwhere(stray)[0]
                raise GraphError(f"W[{i}, {j}] is nonzero but {{{i}, {j}}} is not an edge")

        w = symmetrize(w)
        w.setflags(write=False)
        object.__setattr__(self, "entries", w)

    @classmethod
    def from_array(cls, entries: Matrix, graph: Optional[Graph] = None) -> "GossipMatrix":
        """Wrap a matrix; without a graph, the graph is read off the sparsity pattern."""
        w = np.asarray(entries, dtype=float)
        if graph is None:
            if w.ndim != 2 or w.shape[0] != w.shape[1]:
                raise GraphError(f"gossip matrix must be square, got shape {w.shape}")
            pairs = np.argwhere(np.triu(np.abs(w) > PATTERN_TOL, k=1))
            graph = Graph.from_edges(w.shape[0], ((int(i), int(j)) for i, j in pairs))
        return cls(w, graph)

    @property
    def m(self) -> int:
        return self.graph.m

    def __matmul__(self, other: NDArray[np.float64]) -> NDArray[np.float64]:
        return self.entries @ other


@dataclass(frozen=True, eq=False)
class SpectralInfo:
    """
    Spectral summary of a gossip matrix.

    rho_com is the spectral norm of W - J, which equals lambda_max(W - J) when
    W is positive semidefinite. lambda_max_signed keeps the signed value.
    """

    rho_com: float
    eigenvalues: NDArray[np.float64]
    lambda2_of_C: float
    lambda_max_signed: float
    is_mixing: bool = field(default=True)


def build_metropolis(graph: Graph) -> GossipMatrix:
    """
    Metropolis weights W_ij = 1 / (1 + max(deg_i, deg_j)) on edges.

    Args:
        graph: Connected graph

    Returns:
        GossipMatrix with hop_order 1

    Raises:
        GraphError: if the graph is disconnected
    """
    graph.require_connected()
    deg = graph.degrees()
    w = np.zeros((graph.m, graph.m))
    for i, j in graph.edges:
        w[i, j] = w[j, i] = 1.0 / (1.0 + max(deg[i], deg[j]))
    w[np.diag_indices(graph.m)] = 1.0 - w.sum(axis=1)
    return GossipMatrix(w, graph)


def lazy(w: GossipMatrix) -> GossipMatrix:
    """(I + W) / 2."""
    return GossipMatrix(0.5 * (np.eye(w.m) + w.entries), w.graph, w.hop_order)


def k_hop_power(w: GossipMatrix, k: int) -> GossipMatrix:
    """W^k, costing k times the rounds of W."""
    if k < 1:
        raise ConfigError(f"k must be a positive integer, got {k}")
    if k == 1:
        return w
    return GossipMatrix(np.linalg.matrix_power(w.entries, k), w.graph, k * w.hop_order)


def chebyshev_factor(rho_com: float, k: int) -> float:
    """
    Mixing factor 2c^k / (1 + c^{2k}) of the Chebyshev polynomial of degree k.

    Here c = (sqrt(theta) - 1) / (sqrt(theta) + 1) and theta = (1 + rho) / (1 - rho).
    """
    if not 0.0 <= rho_com < 1.0:
        raise GraphError(f"rho_com must lie in [0, 1), got {rho_com}")
    if k < 1:
        raise ConfigError(f"k must be a positive integer, got {k}")
    c = chebyshev_base(rho_com)
    return 2.0 * c**k / (1.0 + c ** (2 * k))


def chebyshev_base(rho_com: float) -> float:
    root = np.sqrt((1.0 + rho_com) / (1.0 - rho_com))
    return float((root - 1.0) / (root + 1.0))


def chebyshev_matrix(w: GossipMatrix, k: int) -> GossipMatrix:
    """
    Chebyshev-accelerated gossip P_k(W) = T_k(W / rho) / T_k(1 / rho).

    Evaluated with the three-term matrix recursion T_{j+1} = 2 (W / rho) T_j - T_{j-1},
    which is what k consecutive rounds of neighbour exchange compute.

    Args:
        w: Gossip matrix with 0 < rho_com < 1
        k: Polynomial degree (number of rounds)

    Raises:
        GraphError: rho_com is 0 (nothing to accelerate) or 1 (no mixing)
    """
    if k < 1:
        raise ConfigError(f"k must be a positive integer, got {k}")

    rho = spectral_info(w).rho_com
    if rho == 0.0:
        raise GraphError("rho_com is 0; Chebyshev acceleration is undefined, use W directly")
    if rho >= 1.0:
        raise GraphError("rho_com is 1; W does not mix")

    scaled = w.entries / rho
    t_prev, t_curr = np.eye(w.m), scaled
    s_prev, s_curr = 1.0, 1.0 / rho
    for _ in range(k - 1):
        t_prev, t_curr = t_curr, 2.0 * scaled @ t_curr - t_prev
        s_prev, s_curr = s_curr, 2.0 * s_curr / rho - s_prev

    logger.debug("chebyshev k=%d rho=%.6g T_k(1/rho)=%.6g", k, rho, s_curr)
    return GossipMatrix(symmetrize(t_curr / s_curr), w.graph, k * w.hop_order)


def spectral_info(w: GossipMatrix, c_matrix: Optional[Matrix] = None) -> SpectralInfo:
    """
    Spectrum of W and the mixing factor rho_com.

    Args:
        w: Gossip matrix
        c_matrix: Consensus matrix C whose lambda_2 is reported; defaults to I - W

    Returns:
        SpectralInfo
    """
    eigenvalues = sym_eigvals(w.entries)
    deviation = sym_eigvals(w.entries - averaging_matrix(w.m))
    rho = float(np.max(np.abs(deviation)))
    if abs(rho - 1.0) <= EIG_SNAP:
        rho = 1.0
    elif rho <= EIG_SNAP:
        rho = 0.0

    c = np.eye(w.m) - w.entries if c_matrix is None else np.asarray(c_matrix, dtype=float)
    lam2 = lambda_2(c) if w.m >= 2 else 0.0

    return SpectralInfo(
        rho_com=rho,
        eigenvalues=eigenvalues,
        lambda2_of_C=lam2,
        lambda_max_signed=float(deviation[-1]),
        is_mixing=rho < 1.0,
    )
