"""
Communication/computation balance: how many gossip rounds per gradient step
make the distributed method match the centralized proximal-gradient rate.
"""

import logging
import math
from dataclasses import asdict, dataclass
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .errors import ConfigError
from .topology.gossip import chebyshev_base, chebyshev_factor

logger = logging.getLogger(__name__)

TRADEOFF_COLUMNS = ("rho_com", "rho_opt", "k_plain", "k_cheby", "k_baseline")

# Round counts treat factor <= target * (1 + BOUNDARY_RTOL) as meeting the target.
BOUNDARY_RTOL = 1e-9

# Safety cap on round counts; far above anything a sensible grid produces.
MAX_ROUNDS = 100_000


def rho_opt(kappa: float) -> float:
    """(kappa - 1) / (kappa + 1), the centralized proximal-gradient rate."""
    if not kappa >= 1.0:
        raise ConfigError(f"kappa must be >= 1, got {kappa}")
    if math.isinf(kappa):
        return 1.0
    return (kappa - 1.0) / (kappa + 1.0)


def kappa_for(rate: float) -> float:
    """Inverse of rho_opt."""
    if not 0.0 <= rate < 1.0:
        raise ConfigError(f"rho_opt must lie in [0, 1), got {rate}")
    return (1.0 + rate) / (1.0 - rate)


def _check(rho_com: float, target_rate: float) -> None:
    if not 0.0 <= rho_com < 1.0:
        raise ConfigError(f"rho_com must lie in [0, 1), got {rho_com}")
    if not 0.0 < target_rate < 1.0:
        raise ConfigError(f"rho_opt must lie in (0, 1), got {target_rate}")


def _smallest_rounds(factor: Callable[[int], float], target: float, guess: float) -> int:
    """Smallest K >= 1 with factor(K) <= target, refined from a closed-form guess."""
    limit = target * (1.0 + BOUNDARY_RTOL)
    k = max(1, int(math.ceil(guess)) if math.isfinite(guess) else 1)
    while k > 1 and factor(k - 1) <= limit:
        k -= 1
    while factor(k) > limit:
        k += 1
        if k > MAX_ROUNDS:
            raise ConfigError(f"more than {MAX_ROUNDS} rounds needed for target {target:g}")
    return k


def rounds_plain(rho_com: float, target_rate: float) -> int:
    """Smallest K with rho_com^K <= rho_opt^2 (at least 1)."""
    _check(rho_com, target_rate)
    if rho_com == 0.0:
        return 1
    target = target_rate**2
    return _smallest_rounds(lambda k: rho_com**k, target, math.log(target) / math.log(rho_com))


def rounds_chebyshev(rho_com: float, target_rate: float) -> int:
    """
    Smallest K with 2c^K / (1 + c^{2K}) <= rho_opt^2.

    The closed form ln(1/t + sqrt(1/t^2 - 1)) / ln(1/c) with t = rho_opt^2 is
    rounded up and then checked against the factor itself.
    """
    _check(rho_com, target_rate)
    if rho_com == 0.0:
        return 1
    t = target_rate**2
    c = chebyshev_base(rho_com)
    guess = math.log(1.0 / t + math.sqrt(1.0 / t**2 - 1.0)) / math.log(1.0 / c)
    return _smallest_rounds(lambda k: chebyshev_factor(rho_com, k), t, guess)


def baseline_target(target_rate: float) -> float:
    """(sqrt(1 + rho_opt) - sqrt(1 - rho_opt)) / 2."""
    return (math.sqrt(1.0 + target_rate) - math.sqrt(1.0 - target_rate)) / 2.0


def rounds_baseline(rho_com: float, target_rate: float) -> int:
    """Smallest K with rho_com^K <= baseline_target(rho_opt), the multi-round baseline's criterion."""
    _check(rho_com, target_rate)
    if rho_com == 0.0:
        return 1
    target = baseline_target(target_rate)
    return _smallest_rounds(lambda k: rho_com**k, target, math.log(target) / math.log(rho_com))


@dataclass(frozen=True)
class TradeoffPoint:
    rho_com: float
    rho_opt: float
    k_plain: int
    k_cheby: int
    k_baseline: int

    def to_row(self) -> Tuple[Any, ...]:
        return tuple(getattr(self, c) for c in TRADEOFF_COLUMNS)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def tradeoff_point(rho_com: float, target_rate: float) -> TradeoffPoint:
    return TradeoffPoint(
        rho_com=rho_com,
        rho_opt=target_rate,
        k_plain=rounds_plain(rho_com, target_rate),
        k_cheby=rounds_chebyshev(rho_com, target_rate),
        k_baseline=rounds_baseline(rho_com, target_rate),
    )


def grid_values(start: float, stop: float, step: float) -> List[float]:
    """Inclusive arithmetic grid, rounded to 12 decimals so CSV output is stable."""
    if not step > 0.0 or stop < start:
        raise ConfigError(f"bad grid start={start}, stop={stop}, step={step}")
    n = int(round((stop - start) / step)) + 1
    return [round(start + i * step, 12) for i in range(n)]


def default_grid() -> List[Tuple[float, float]]:
    """rho_com and rho_opt both over 0.05, 0.10, ..., 0.95."""
    values = grid_values(0.05, 0.95, 0.05)
    return [(rc, ro) for rc in values for ro in values]


def sweep(grid: Optional[Iterable[Tuple[float, float]]] = None) -> List[TradeoffPoint]:
    """
    Round counts for every (rho_com, rho_opt) pair.

    Args:
        grid: Pairs to evaluate; defaults to default_grid()

    Returns:
        One TradeoffPoint per pair, in grid order
    """
    pairs = list(default_grid() if grid is None else grid)
    points = [tradeoff_point(rc, ro) for rc, ro in pairs]
    logger.debug("swept %d grid points", len(points))
    return points


@dataclass(frozen=True)
class EndToEndResult:
    """Distributed run at K = rounds_chebyshev compared against the centralized rate."""

    rho_opt: float
    target: float
    m: int
    rho_com: float
    k_cheby: int
    mixing_factor: float
    lambda_emp: float
    lambda_central: float
    passed: bool

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["pass"] = data.pop("passed")
        return data


def end_to_end(
    target_rate: float,
    m: int = 20,
    d: int = 5,
    iters: int = 300,
    seed: int = 0,
    rate_slack: float = 0.02,
    central_slack: float = 0.01,
) -> EndToEndResult:
    """
    Check that C = I - P_K(W)^2 at K = rounds_chebyshev reaches the centralized rate.

    Builds a Metropolis ring of m agents and a random quadratic problem with
    kappa = (1 + rho_opt) / (1 - rho_opt), runs the chebyshev preset at gamma*
    and the centralized method, and compares both fitted rates with rho_opt^2.
    """
    from .algorithms.centralized import prox_grad_run
    from .algorithms.unified import PrimalDualSolver
    from .algorithms.weights import preset
    from .certification import empirical_rate
    from .problems import random_problem
    from .topology import Graph, build_metropolis, chebyshev_matrix, spectral_info

    w = build_metropolis(Graph.ring(m))
    rho_com = spectral_info(w).rho_com
    k = rounds_chebyshev(rho_com, target_rate)
    mixing = spectral_info(chebyshev_matrix(w, k)).rho_com

    kappa = kappa_for(target_rate)
    problem = random_problem(m, d, 1.0, kappa, seed=seed)
    x_star = problem.reference_solution()
    gamma = 2.0 / (problem.L + problem.mu)

    triple = preset("chebyshev", w, k=k)
    trajectory = PrimalDualSolver(triple, problem, gamma).run(iters, x_star=x_star)
    central = prox_grad_run(problem, gamma, iters, x_star=x_star)

    target = target_rate**2
    lambda_emp = empirical_rate(trajectory).rate
    lambda_central = empirical_rate(central.trajectory).rate
    passed = (
        mixing <= target + 1e-9
        and lambda_emp <= target + rate_slack
        and abs(lambda_central - target) <= central_slack
    )
    logger.info(
        "end-to-end rho_opt=%.3f K=%d: lambda_emp=%.4f central=%.4f target=%.4f",
        target_rate,
        k,
        lambda_emp,
        lambda_central,
        target,
    )
    return EndToEndResult(
        rho_opt=target_rate,
        target=target,
        m=m,
        rho_com=rho_com,
        k_cheby=k,
        mixing_factor=mixing,
        lambda_emp=lambda_emp,
        lambda_central=lambda_central,
        passed=bool(passed),
    )


def sample_end_to_end(values: Sequence[float], count: int = 3, minimum: float = 0.5) -> List[float]:
    """Evenly spaced picks of ``count`` rho_opt values >= minimum from a grid axis."""
    eligible = sorted({v for v in values if v >= minimum})
    if len(eligible) <= count:
        return eligible
    picks = np.linspace(0, len(eligible) - 1, count).round().astype(int)
    return [eligible[i] for i in picks]
