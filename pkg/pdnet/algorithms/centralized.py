"""
Centralized proximal gradient, the reference the distributed iterate is compared with.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
from numpy.typing import NDArray

from ..errors import ConfigError
from ..problems import CompositeProblem
from ..problems.terms import interval_distance
from ..tradeoff import rho_opt
from .unified import Trajectory, guard

logger = logging.getLogger(__name__)


@dataclass
class CentralizedRun:
    """
    Iterates x^k of centralized proximal gradient.

    trajectory uses the distributed CSV schema with zero consensus and
    kkt_primal columns; kkt_dual is dist(-grad F(x), dG(x)).
    """

    gamma: float
    rate_target: float
    xs: List[NDArray[np.float64]] = field(default_factory=list)
    trajectory: Trajectory = field(default_factory=lambda: Trajectory("centralized", 0.0))


def prox_grad_run(
    p: CompositeProblem,
    gamma: float,
    iters: int,
    x0: Optional[NDArray[np.float64]] = None,
    x_star: Optional[NDArray[np.float64]] = None,
) -> CentralizedRun:
    """
    x^{k+1} = prox_{gamma G}(x^k - gamma grad F(x^k)).

    Args:
        p: Problem
        gamma: Positive step size
        iters: Number of steps
        x0: Starting point (default 0)
        x_star: Minimizer; computed with reference_solution when omitted

    Returns:
        CentralizedRun with xs = [x^0, ..., x^iters]

    Raises:
        DivergenceError: on nonfinite or exploding iterates
    """
    if not gamma > 0.0:
        raise ConfigError(f"gamma must be positive, got {gamma}")
    if iters < 0:
        raise ConfigError(f"iters must be >= 0, got {iters}")

    x = np.zeros(p.d) if x0 is None else np.array(x0, dtype=float)
    if x_star is None:
        x_star = p.reference_solution()
    optimum = p.objective(x_star)

    run = CentralizedRun(gamma, rho_opt(p.kappa), [x.copy()], Trajectory("centralized", gamma))
    traj = run.trajectory
    for k in range(1, iters + 1):
        x = p.nonsmooth.prox(x - gamma * p.average_gradient(x), gamma)
        guard("x", x, k)
        run.xs.append(x)

        lo, hi = p.nonsmooth.subdifferential_bounds(x)
        traj.iters.append(k)
        traj.err_sq.append(float(np.sum((x - x_star) ** 2)))
        traj.consensus.append(0.0)
        traj.obj_gap.append(p.objective(x) - optimum)
        traj.kkt_primal.append(0.0)
        traj.kkt_dual.append(float(np.linalg.norm(interval_distance(-p.average_gradient(x), lo, hi))))

    logger.debug("centralized run: %d iterations at gamma=%.6g", iters, gamma)
    return run
