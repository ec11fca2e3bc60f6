"""
Dense linear-algebra helpers and the numerical tolerance policy.

All spectral work in pdnet goes through this module so that the snapping and
strictness tolerances are stated once.
"""

from typing import Tuple

import numpy as np
import scipy.linalg
from numpy.typing import NDArray

# Eigenvalues this close to a bound are snapped onto it.
EIG_SNAP = 1e-12

# Strict matrix inequalities need an eigenvalue margin above this.
STRICT_MARGIN = 1e-9

COMMUTE_RTOL = 1e-9

DIVERGENCE_BOUND = 1e12

Matrix = NDArray[np.float64]


def symmetrize(M: Matrix) -> Matrix:
    return 0.5 * (M + M.T)


def snap(values: NDArray[np.float64], bounds: Tuple[float, ...] = (-1.0, 0.0, 1.0)) -> NDArray[np.float64]:
    """Snap eigenvalues lying within EIG_SNAP of any of ``bounds`` onto it."""
    out = np.array(values, dtype=float, copy=True)
    for b in bounds:
        out[np.abs(out - b) <= EIG_SNAP] = b
    return out


def sym_eigvals(M: Matrix) -> NDArray[np.float64]:
    """Ascending, snapped eigenvalues of the symmetric part of ``M``."""
    return snap(scipy.linalg.eigh(symmetrize(M), eigvals_only=True))


def sym_eigh(M: Matrix) -> Tuple[NDArray[np.float64], Matrix]:
    values, vectors = scipy.linalg.eigh(symmetrize(M))
    return snap(values), vectors


def lambda_max(M: Matrix) -> float:
    return float(sym_eigvals(M)[-1])


def lambda_min(M: Matrix) -> float:
    return float(sym_eigvals(M)[0])


def lambda_2(M: Matrix) -> float:
    """Second-smallest eigenvalue of a symmetric matrix."""
    values = sym_eigvals(M)
    if values.size < 2:
        raise ValueError("lambda_2 needs at least a 2x2 matrix")
    return float(values[1])


def psd_sqrt(M: Matrix) -> Matrix:
    """Symmetric square root of a PSD matrix; eigenvalues below EIG_SNAP are clipped to 0."""
    values, vectors = scipy.linalg.eigh(symmetrize(M))
    values = np.where(values < EIG_SNAP, 0.0, values)
    return symmetrize((vectors * np.sqrt(values)) @ vectors.T)


def inv_sqrt_pd(M: Matrix) -> Matrix:
    values, vectors = scipy.linalg.eigh(symmetrize(M))
    if values[0] <= 0.0:
        raise ValueError("matrix is not positive definite")
    return symmetrize((vectors / np.sqrt(values)) @ vectors.T)


def generalized_lambda_max(A: Matrix, B: Matrix) -> float:
    """Largest eigenvalue of the pencil (A, B), i.e. of B^{-1/2} A B^{-1/2}; B must be PD."""
    values = scipy.linalg.eigh(symmetrize(A), symmetrize(B), eigvals_only=True)
    return float(values[-1])


def averaging_matrix(m: int) -> Matrix:
    """J = 1 1^T / m."""
    return np.full((m, m), 1.0 / m)


def consensus_complement(m: int) -> Matrix:
    """Orthogonal projector I - J onto the complement of span(1)."""
    return np.eye(m) - averaging_matrix(m)


def spectral_norm(M: Matrix) -> float:
    return float(np.linalg.norm(M, 2))


def weighted_sq_norm(X: Matrix, M: Matrix) -> float:
    """<M X, X> in the trace inner product."""
    return float(np.sum((M @ X) * X))


def max_abs(X: NDArray[np.float64]) -> float:
    if X.size == 0:
        return 0.0
    return float(np.max(np.abs(X)))
