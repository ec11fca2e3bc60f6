"""
Composite problem min_x (1/m) sum_i f_i(x) + G(x) over m agents.
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np

from ..errors import ConfigError, ConvergenceError, DimensionError
from ..linalg import Matrix, symmetrize
from .terms import Array, NonsmoothTerm, QuadraticCost

logger = logging.getLogger(__name__)

REFERENCE_TOL = 1e-12
REFERENCE_MAX_ITER = 10**6

# Fixed-point iterations cannot resolve steps below a few ulps of the iterate.
_ULP_FLOOR = 64 * np.finfo(float).eps


@dataclass(frozen=True, eq=False)
class CompositeProblem:
    """
    Per-agent quadratic costs plus a shared nonsmooth term.

    Attributes:
        costs: One QuadraticCost per agent, all of dimension d.
        nonsmooth: Shared term G.
        seed: Seed the instance was drawn with, if generated.
    """

    costs: Sequence[QuadraticCost]
    nonsmooth: NonsmoothTerm = field(default_factory=NonsmoothTerm.zero)
    seed: Optional[int] = None
    hessians: Matrix = field(init=False, repr=False)
    offsets: Matrix = field(init=False, repr=False)

    def __post_init__(self) -> None:
        costs = tuple(self.costs)
        if not costs:
            raise ConfigError("a problem needs at least one agent")
        dims = {c.d for c in costs}
        if len(dims) != 1:
            raise DimensionError(f"local costs disagree on dimension: {sorted(dims)}")
        object.__setattr__(self, "costs", costs)

        hessians = np.stack([c.Q for c in costs])
        offsets = np.stack([c.b for c in costs])
        hessians.setflags(write=False)
        offsets.setflags(write=False)
        object.__setattr__(self, "hessians", hessians)
        object.__setattr__(self, "offsets", offsets)

    @property
    def m(self) -> int:
        return len(self.costs)

    @property
    def d(self) -> int:
        return self.costs[0].d

    @property
    def mu(self) -> float:
        return min(c.mu for c in self.costs)

    @property
    def L(self) -> float:
        return max(c.L for c in self.costs)

    @property
    def kappa(self) -> float:
        return self.L / self.mu

    def _check_stack(self, x: Array, name: str = "x") -> Array:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.m, self.d):
            raise DimensionError(f"{name} has shape {x.shape}, expected ({self.m}, {self.d})")
        return x

    def gradient_stack(self, x: Array) -> Array:
        """Row i is grad f_i(x_i) = Q_i x_i - b_i."""
        x = self._check_stack(x)
        return np.einsum("ijk,ik->ij", self.hessians, x) - self.offsets

    def prox_rowwise(self, gamma: float, z: Array) -> Array:
        """prox_{gamma G} applied to each row of z."""
        return self.nonsmooth.prox(self._check_stack(z, "z"), gamma)

    def smooth_value(self, x: Array) -> float:
        """F(x) = (1/m) sum_i f_i(x)."""
        return float(np.mean([c.value(x) for c in self.costs]))

    def objective(self, x: Array) -> float:
        """F(x) + G(x) at a single d-vector."""
        x = np.asarray(x, dtype=float)
        if x.shape != (self.d,):
            raise DimensionError(f"x has shape {x.shape}, expected ({self.d},)")
        g = self.nonsmooth.value(x)
        if np.isinf(g):
            return g
        return self.smooth_value(x) + g

    def average_gradient(self, x: Array) -> Array:
        """grad F(x) at a single d-vector."""
        return self.average_hessian @ x - self.offsets.mean(axis=0)

    @property
    def average_hessian(self) -> Matrix:
        return symmetrize(self.hessians.mean(axis=0))

    def reference_solution(
        self, tol: float = REFERENCE_TOL, max_iter: int = REFERENCE_MAX_ITER
    ) -> Array:
        """
        High-precision minimizer x* of F + G.

        Runs centralized proximal gradient with gamma = 2 / (L + mu). Without a
        nonsmooth term the result is cross-checked against the normal equations
        and the direct solve is returned.

        Args:
            tol: Stop once ||x^{k+1} - x^k|| <= tol * min(gamma, 1)
            max_iter: Iteration cap

        Returns:
            d-vector x*

        Raises:
            ConvergenceError: if the cap is hit or the cross-check disagrees
        """
        if not tol > 0.0:
            raise ConfigError(f"tol must be positive, got {tol}")

        gamma = 2.0 / (self.L + self.mu)
        x = np.zeros(self.d)
        for k in range(max_iter):
            x_next = self.nonsmooth.prox(x - gamma * self.average_gradient(x), gamma)
            step = float(np.linalg.norm(x_next - x))
            x = x_next
            if step <= max(tol * min(gamma, 1.0), _ULP_FLOOR * (1.0 + np.linalg.norm(x))):
                logger.debug("reference solution converged in %d iterations", k + 1)
                break
        else:
            raise ConvergenceError(f"reference solution did not converge in {max_iter} iterations")

        if self.nonsmooth.is_zero:
            direct = np.linalg.solve(self.hessians.sum(axis=0), self.offsets.sum(axis=0))
            deviation = float(np.linalg.norm(direct - x))
            if deviation > 10.0 * tol * max(1.0, 1.0 / self.mu) * (1.0 + np.linalg.norm(direct)):
                raise ConvergenceError(
                    f"proximal gradient and direct solve disagree by {deviation:.3e}"
                )
            logger.debug("reference solution cross-check deviation %.3e", deviation)
            return direct
        return x

    def consensus_solution(self) -> Matrix:
        """The stacked optimum 1 x*^T."""
        return np.tile(self.reference_solution(), (self.m, 1))

    # Serialization

    def to_dict(self) -> Dict[str, Any]:
        return {
            "m": self.m,
            "d": self.d,
            "seed": self.seed,
            "Q": [c.Q.tolist() for c in self.costs],
            "b": [c.b.tolist() for c in self.costs],
            "nonsmooth": self.nonsmooth.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "CompositeProblem":
        """
        Build a problem from explicit arrays, or regenerate it from a seed.

        Seeded documents need m, d, mu, L and seed.
        """
        nonsmooth = NonsmoothTerm.from_dict(data.get("nonsmooth", {"kind": "zero"}))
        if "Q" in data:
            if "b" not in data or len(data["Q"]) != len(data["b"]):
                raise ConfigError("explicit problem needs matching 'Q' and 'b' lists")
            costs = [QuadraticCost(np.array(Q), np.array(b)) for Q, b in zip(data["Q"], data["b"])]
            return cls(costs, nonsmooth, data.get("seed"))

        missing = [k for k in ("m", "d", "mu", "L") if k not in data]
        if missing:
            raise ConfigError(f"problem document is missing {', '.join(missing)}")
        return random_problem(
            int(data["m"]),
            int(data["d"]),
            float(data["mu"]),
            float(data["L"]),
            nonsmooth=nonsmooth,
            seed=int(data.get("seed", 0)),
        )

    def save(self, path: Union[str, Path]) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path: Union[str, Path]) -> "CompositeProblem":
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise ConfigError(f"problem file {path} is not valid JSON: {e}")
        return cls.from_dict(data)


def random_problem(
    m: int,
    d: int,
    mu: float,
    L: float,
    nonsmooth: Optional[NonsmoothTerm] = None,
    seed: int = 0,
    shared_basis: bool = True,
) -> CompositeProblem:
    """
    Seeded random quadratic instance with global constants exactly (mu, L).

    Every agent's spectrum holds mu and L on the first two basis vectors and
    uniform draws from [mu, L] on the rest. With a shared basis the local Hessians
    commute and the averaged Hessian also attains mu and L. Otherwise each agent
    after the first draws its own basis, so the Hessians do not commute. For d = 1
    agents alternate between mu and L.

    Args:
        m: Number of agents
        d: Dimension
        mu: Strong convexity constant, > 0
        L: Smoothness constant, >= mu
        nonsmooth: Shared term (defaults to zero)
        seed: Seed for numpy's default generator
        shared_basis: Draw one orthonormal basis for all agents

    Returns:
        CompositeProblem
    """
    if m < 1 or d < 1:
        raise ConfigError(f"m and d must be positive, got m={m}, d={d}")
    if not 0.0 < mu <= L:
        raise ConfigError(f"need 0 < mu <= L, got mu={mu}, L={L}")

    rng = np.random.default_rng(seed)
    basis, _ = np.linalg.qr(rng.standard_normal((d, d)))

    costs: List[QuadraticCost] = []
    for i in range(m):
        if i > 0 and not shared_basis:
            basis, _ = np.linalg.qr(rng.standard_normal((d, d)))
        if d == 1:
            spectrum = np.array([mu if i % 2 == 0 else L])
        else:
            spectrum = np.concatenate([[mu, L], rng.uniform(mu, L, size=d - 2)])
        Q = symmetrize((basis * spectrum) @ basis.T)
        costs.append(QuadraticCost(Q, rng.standard_normal(d)))

    return CompositeProblem(costs, nonsmooth or NonsmoothTerm.zero(), seed)
