"""
Step-size interval, contraction factor and linear rate predicted for a weight triple.
"""

from dataclasses import asdict, dataclass
from typing import Any, Dict, Optional

from ..errors import ConfigError
from ..linalg import sym_eigvals
from .weights import WeightTriple, require_valid


@dataclass(frozen=True)
class RatePrediction:
    """
    Predicted behaviour of the unified iterate at step size gamma.

    rate is max(lambda_opt, lambda_comm): the optimization part q^2 eta against
    the network part 1 - lambda_2(C).
    """

    gamma: float
    gamma_lo: float
    gamma_hi: float
    gamma_star: float
    q: float
    q_star: float
    eta: float
    lambda_opt: float
    lambda_comm: float
    rate: float

    @property
    def admissible(self) -> bool:
        return self.gamma_lo < self.gamma < self.gamma_hi

    @property
    def contractive(self) -> bool:
        return self.rate < 1.0

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["lambda"] = data.pop("rate")
        data["admissible"] = self.admissible
        return data


def contraction_factor(d_min: float, d_max: float, gamma: float, mu: float, L: float) -> float:
    """q = max(|lambda_min(D) - gamma L|, |lambda_max(D) - gamma mu|)."""
    return max(abs(d_min - gamma * L), abs(d_max - gamma * mu))


def rate_prediction(
    t: WeightTriple, mu: float, L: float, gamma: Optional[float] = None
) -> RatePrediction:
    """
    Evaluate the rate theory for a validated triple.

    Args:
        t: Weight triple; must pass validate_triple with (mu, L)
        mu: Strong convexity constant
        L: Smoothness constant
        gamma: Step size; defaults to the optimal gamma*

    Returns:
        RatePrediction

    Raises:
        AssumptionError: if the triple fails validation
    """
    if not 0.0 < mu <= L:
        raise ConfigError(f"need 0 < mu <= L, got mu={mu}, L={L}")
    require_valid(t, mu, L)

    d_min, d_max = t.d_bounds
    eta = t.eta
    slack = eta ** -0.5

    gamma_lo = max(d_max - slack, 0.0) / mu
    gamma_hi = (d_min + slack) / L
    gamma_star = (d_max + d_min) / (L + mu)
    if gamma is None:
        gamma = gamma_star
    elif not gamma > 0.0:
        raise ConfigError(f"gamma must be positive, got {gamma}")

    q = contraction_factor(d_min, d_max, gamma, mu, L)
    q_star = contraction_factor(d_min, d_max, gamma_star, mu, L)

    c_eigs = sym_eigvals(t.C)
    lambda_comm = 1.0 - float(c_eigs[1])
    lambda_opt = q**2 * eta

    return RatePrediction(
        gamma=float(gamma),
        gamma_lo=gamma_lo,
        gamma_hi=gamma_hi,
        gamma_star=gamma_star,
        q=q,
        q_star=q_star,
        eta=eta,
        lambda_opt=lambda_opt,
        lambda_comm=lambda_comm,
        rate=max(lambda_opt, lambda_comm),
    )
