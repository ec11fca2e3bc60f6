"""
The unified primal-dual proximal iterate

    x^k     = prox_{gamma g}(z^k)
    z^{k+1} = A x^k - gamma B grad f(x^k) - y^k
    y^{k+1} = y^k + C z^{k+1}

together with its forms with the dual variable eliminated.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
from numpy.typing import NDArray

from ..certification import KktEvaluator
from ..errors import AssumptionError, ConfigError, ConvergenceError, DimensionError, DivergenceError
from ..linalg import DIVERGENCE_BOUND, Matrix, max_abs, sym_eigh
from ..problems import CompositeProblem
from .weights import WeightTriple

logger = logging.getLogger(__name__)

TRAJECTORY_COLUMNS = ("iter", "err_sq", "consensus", "obj_gap", "kkt_primal", "kkt_dual")

# Tolerance for "y0 lies in range(C)" and for consistent eliminated-form histories.
RANGE_RTOL = 1e-10


def guard(name: str, M: NDArray[np.float64], k: int) -> None:
    """Raise DivergenceError if M is nonfinite or exceeds the divergence bound."""
    if not np.all(np.isfinite(M)):
        raise DivergenceError(name, k, float("inf"))
    magnitude = max_abs(M)
    if magnitude > DIVERGENCE_BOUND:
        raise DivergenceError(name, k, magnitude)


@dataclass(frozen=True, eq=False)
class AlgorithmState:
    """Iterates (x^k, z^k, y^k), each m x d, with x^k = prox(z^k)."""

    x: Matrix
    z: Matrix
    y: Matrix
    k: int = 0

    def dual_column_sums(self) -> NDArray[np.float64]:
        return self.y.sum(axis=0)


@dataclass
class Trajectory:
    """Per-iteration metrics of a run, one entry per completed step."""

    label: str
    gamma: float
    iters: List[int] = field(default_factory=list)
    err_sq: List[float] = field(default_factory=list)
    consensus: List[float] = field(default_factory=list)
    obj_gap: List[float] = field(default_factory=list)
    kkt_primal: List[float] = field(default_factory=list)
    kkt_dual: List[float] = field(default_factory=list)
    max_dual_sum: float = 0.0
    final: Optional[AlgorithmState] = None
    states: List[AlgorithmState] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.iters)

    def rows(self) -> List[Tuple[float, ...]]:
        return list(
            zip(self.iters, self.err_sq, self.consensus, self.obj_gap, self.kkt_primal, self.kkt_dual)
        )

    def column(self, name: str) -> NDArray[np.float64]:
        if name not in TRAJECTORY_COLUMNS:
            raise KeyError(name)
        return np.asarray(getattr(self, "iters" if name == "iter" else name), dtype=float)

    def summary(self) -> Dict[str, float]:
        if not self.iters:
            return {"iters": 0}
        return {
            "iters": self.iters[-1],
            "err_sq": self.err_sq[-1],
            "consensus": self.consensus[-1],
            "obj_gap": self.obj_gap[-1],
            "kkt_primal": self.kkt_primal[-1],
            "kkt_dual": self.kkt_dual[-1],
            "max_dual_sum": self.max_dual_sum,
        }


class PrimalDualSolver:
    """
    Unified iterate bound to a triple, a problem and a step size.

    The solver does not validate the triple; callers that need the rate
    guarantees run validate_triple first. Deliberately broken triples are
    useful as negative controls.
    """

    def __init__(self, triple: WeightTriple, problem: CompositeProblem, gamma: float):
        if triple.m != problem.m:
            raise DimensionError(f"triple has m={triple.m}, problem has m={problem.m}")
        if problem.m < 2:
            raise AssumptionError("a network needs at least two agents (null space of C)")
        if not gamma > 0.0:
            raise ConfigError(f"gamma must be positive, got {gamma}")

        self.triple = triple
        self.problem = problem
        self.gamma = float(gamma)
        self._eye = np.eye(problem.m)

    @property
    def shape(self) -> Tuple[int, int]:
        return self.problem.m, self.problem.d

    def _check(self, M: Optional[Matrix], name: str) -> Matrix:
        if M is None:
            return np.zeros(self.shape)
        M = np.array(M, dtype=float)
        if M.shape != self.shape:
            raise DimensionError(f"{name} has shape {M.shape}, expected {self.shape}")
        return M

    def prox(self, z: Matrix) -> Matrix:
        return self.problem.prox_rowwise(self.gamma, z)

    def initial_state(self, z0: Optional[Matrix] = None, y0: Optional[Matrix] = None) -> AlgorithmState:
        """
        State at k = 0; z0 and y0 default to zero.

        Raises:
            ConfigError: if y0 is not in range(C)
        """
        z = self._check(z0, "z0")
        y = self._check(y0, "y0")
        if np.any(y):
            values, vectors = sym_eigh(self.triple.C)
            null_basis = vectors[:, values <= 1e-12]
            outside = float(np.linalg.norm(null_basis.T @ y))
            if outside > RANGE_RTOL * max(1.0, float(np.linalg.norm(y))):
                raise ConfigError(f"y0 is not in range(C): distance {outside:.3e}")
        return AlgorithmState(self.prox(z), z, y, 0)

    def step(self, s: AlgorithmState) -> AlgorithmState:
        """
        One primal-dual update.

        Raises:
            DivergenceError: naming the first iterate (z, y or x) to blow up
        """
        t = self.triple
        k = s.k + 1

        z = t.A @ s.x - self.gamma * (t.B @ self.problem.gradient_stack(s.x)) - s.y
        guard("z", z, k)

        increment = t.C @ z
        if t.dual_centered:
            increment -= increment.mean(axis=0)
        y = s.y + increment
        guard("y", y, k)

        x = self.prox(z)
        guard("x", x, k)
        return AlgorithmState(x, z, y, k)

    def step_eliminated(
        self,
        z_prev: Matrix,
        z_curr: Matrix,
        x_prev: Optional[Matrix] = None,
        x_curr: Optional[Matrix] = None,
    ) -> Tuple[Matrix, Matrix]:
        """
        z^{k+2} = (I - C) z^{k+1} + A (x^{k+1} - x^k) - gamma B (grad f(x^{k+1}) - grad f(x^k)).

        Args:
            z_prev: z^k
            z_curr: z^{k+1}
            x_prev: x^k; must equal prox(z^k) when given
            x_curr: x^{k+1}; must equal prox(z^{k+1}) when given

        Returns:
            (z^{k+2}, x^{k+2})

        Raises:
            ConvergenceError: if a supplied x is not the prox of its z
        """
        z_prev = self._check(z_prev, "z_prev")
        z_curr = self._check(z_curr, "z_curr")
        x_prev = self._consistent(z_prev, x_prev, "x_prev")
        x_curr = self._consistent(z_curr, x_curr, "x_curr")

        t = self.triple
        grad_diff = self.problem.gradient_stack(x_curr) - self.problem.gradient_stack(x_prev)
        z_next = (self._eye - t.C) @ z_curr + t.A @ (x_curr - x_prev) - self.gamma * (t.B @ grad_diff)
        return z_next, self.prox(z_next)

    def _consistent(self, z: Matrix, x: Optional[Matrix], name: str) -> Matrix:
        expected = self.prox(z)
        if x is None:
            return expected
        x = self._check(x, name)
        gap = max_abs(x - expected)
        if gap > RANGE_RTOL * (1.0 + max_abs(expected)):
            raise ConvergenceError(f"{name} is not prox of its z (gap {gap:.3e})")
        return x

    def step_smooth(self, x_prev: Matrix, x_curr: Matrix) -> Matrix:
        """
        x^{k+2} = (I - C + A) x^{k+1} - A x^k - gamma B (grad f(x^{k+1}) - grad f(x^k)).

        Only valid without a nonsmooth term, where x = z.
        """
        if not self.problem.nonsmooth.is_zero:
            raise ConfigError("the smooth eliminated form needs a zero nonsmooth term")
        x_prev = self._check(x_prev, "x_prev")
        x_curr = self._check(x_curr, "x_curr")
        t = self.triple
        grad_diff = self.problem.gradient_stack(x_curr) - self.problem.gradient_stack(x_prev)
        return (self._eye - t.C + t.A) @ x_curr - t.A @ x_prev - self.gamma * (t.B @ grad_diff)

    def eliminated_path(self, iters: int, z0: Optional[Matrix] = None) -> List[Matrix]:
        """
        z^0 .. z^iters generated by one full step followed by the eliminated form.

        Starts from y^0 = 0.
        """
        s0 = self.initial_state(z0)
        path = [s0.z]
        if iters >= 1:
            path.append(self.step(s0).z)
        xs = [self.prox(z) for z in path]
        while len(path) <= iters:
            z_next, x_next = self.step_eliminated(path[-2], path[-1], xs[-2], xs[-1])
            guard("z", z_next, len(path))
            path.append(z_next)
            xs.append(x_next)
        return path

    def run(
        self,
        iters: int,
        z0: Optional[Matrix] = None,
        y0: Optional[Matrix] = None,
        x_star: Optional[NDArray[np.float64]] = None,
        keep_states: bool = False,
    ) -> Trajectory:
        """
        Iterate and record metrics after every step.

        Args:
            iters: Number of steps (0 gives an empty trajectory)
            z0: Initial z (default 0)
            y0: Initial y in range(C) (default 0)
            x_star: Minimizer; computed with reference_solution when omitted
            keep_states: Also keep every AlgorithmState, starting with k = 0

        Returns:
            Trajectory with columns iter, err_sq, consensus, obj_gap, kkt_primal, kkt_dual
        """
        if iters < 0:
            raise ConfigError(f"iters must be >= 0, got {iters}")

        p = self.problem
        if x_star is None:
            x_star = p.reference_solution()
        x_star = np.asarray(x_star, dtype=float)
        optimum = p.objective(x_star)
        kkt = KktEvaluator(p, self.triple.C)

        trajectory = Trajectory(self.triple.label, self.gamma)
        state = self.initial_state(z0, y0)
        if keep_states:
            trajectory.states.append(state)

        for _ in range(iters):
            state = self.step(state)
            x = state.x
            mean = x.mean(axis=0)
            residual = kkt(x)

            trajectory.iters.append(state.k)
            trajectory.err_sq.append(float(np.sum((x - x_star) ** 2)))
            trajectory.consensus.append(float(np.linalg.norm(x - mean)))
            trajectory.obj_gap.append(p.objective(mean) - optimum)
            trajectory.kkt_primal.append(residual.primal)
            trajectory.kkt_dual.append(residual.dual)
            trajectory.max_dual_sum = max(trajectory.max_dual_sum, max_abs(state.dual_column_sums()))
            if keep_states:
                trajectory.states.append(state)

        trajectory.final = state
        logger.debug(
            "%s: %d iterations at gamma=%.6g, final err_sq=%.3e",
            self.triple.label,
            iters,
            self.gamma,
            trajectory.err_sq[-1] if iters else float("nan"),
        )
        return trajectory
