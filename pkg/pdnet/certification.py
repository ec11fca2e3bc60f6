"""
Optimality and fixed-point residuals, empirical decay rates, and the pass/fail
certificate of a run.
"""

import logging
from dataclasses import dataclass
from typing import TYPE_CHECKING, Any, Dict, Optional, Sequence, Tuple, Union

import numpy as np
from numpy.typing import NDArray
from scipy import stats

from .errors import ConfigError, ConvergenceError, DimensionError
from .linalg import Matrix, averaging_matrix, psd_sqrt
from .problems import CompositeProblem
from .problems.terms import interval_distance

if TYPE_CHECKING:
    from .algorithms.rates import RatePrediction
    from .algorithms.unified import Trajectory
    from .algorithms.weights import WeightTriple

logger = logging.getLogger(__name__)

RATE_FLOOR = 1e-24
RATE_MIN_POINTS = 20
RATE_TAIL = 0.5
RATE_SLACK = 0.02
KKT_TOL = 1e-6
RELATIVE_FLOOR = 1e-20

# Dual inputs farther than this (relative) from range(sqrt C) are projected.
RANGE_RTOL = 1e-10


@dataclass(frozen=True, eq=False)
class KktResidual:
    """
    Residuals of the optimality system at a stacked point.

    primal is ||sqrt(C) x||; dual is the distance from -(grad f(x) + sqrt(C) y)
    to the subdifferential of g at x. projected is set when the supplied y had
    to be projected onto range(sqrt C).
    """

    primal: float
    dual: float
    y_used: Matrix
    projected: bool = False


class KktEvaluator:
    """
    KKT residuals for one problem and one consensus matrix C.

    The square root of C and its pseudo-inverse are computed once, so a run can
    evaluate residuals at every iteration.
    """

    def __init__(self, problem: CompositeProblem, c_matrix: Matrix):
        c_matrix = np.asarray(c_matrix, dtype=float)
        if c_matrix.shape != (problem.m, problem.m):
            raise DimensionError(f"C has shape {c_matrix.shape}, problem has m={problem.m}")

        self.problem = problem
        self.sqrt_C = psd_sqrt(c_matrix)
        self.pinv_sqrt_C = np.linalg.pinv(self.sqrt_C, hermitian=True)
        self.range_projector = self.sqrt_C @ self.pinv_sqrt_C
        consensus_complement = np.eye(problem.m) - averaging_matrix(problem.m)
        self.consensus_range = bool(
            np.max(np.abs(self.range_projector - consensus_complement)) <= 1e-8
        )
        if not self.consensus_range:
            logger.debug("null space of C is not span(1); dual recovery is pointwise")

    def __call__(self, x: Matrix, y: Optional[Matrix] = None) -> KktResidual:
        p = self.problem
        x = np.asarray(x, dtype=float)
        if x.shape != (p.m, p.d):
            raise DimensionError(f"x has shape {x.shape}, expected ({p.m}, {p.d})")

        grad = p.gradient_stack(x)
        lo, hi = p.nonsmooth.subdifferential_bounds(x)
        primal = float(np.linalg.norm(self.sqrt_C @ x))

        projected = False
        if y is None:
            y = self.recover_dual(grad, lo, hi)
        else:
            y = np.asarray(y, dtype=float)
            if y.shape != x.shape:
                raise DimensionError(f"y has shape {y.shape}, expected {x.shape}")
            in_range = self.range_projector @ y
            if np.linalg.norm(y - in_range) > RANGE_RTOL * max(1.0, float(np.linalg.norm(y))):
                logger.warning("dual certificate is outside range(sqrt C); projecting it")
                y, projected = in_range, True

        v = -(grad + self.sqrt_C @ y)
        dual = float(np.linalg.norm(interval_distance(v, lo, hi)))
        return KktResidual(primal, dual, y, projected)

    def recover_dual(self, grad: Matrix, lo: Matrix, hi: Matrix) -> Matrix:
        """
        Dual certificate y minimizing the dual residual at fixed x.

        With range(sqrt C) equal to the complement of 1, the best subgradient
        column sums are clips onto the summed intervals; they are spread back to
        rows greedily and y = -pinv(sqrt C) (I - J) (grad f + S).
        """
        if np.any(lo > hi):
            return np.zeros_like(grad)

        if self.consensus_range:
            target = np.clip(-grad.sum(axis=0), lo.sum(axis=0), hi.sum(axis=0))
            S = distribute(target, lo, hi)
        else:
            S = np.clip(-grad, lo, hi)

        centered = grad + S
        centered = centered - centered.mean(axis=0)
        return -(self.pinv_sqrt_C @ centered)


def distribute(target: NDArray[np.float64], lo: Matrix, hi: Matrix) -> Matrix:
    """
    Rows S_i in [lo_i, hi_i] whose column sums equal target.

    Starts from the point of each interval closest to 0 and moves rows toward
    their bounds in order until the target is met. target must lie in the
    summed interval.
    """
    S = np.clip(np.zeros_like(lo), lo, hi)
    for j in range(S.shape[1]):
        remaining = target[j] - S[:, j].sum()
        for i in range(S.shape[0]):
            if remaining == 0.0:
                break
            room = (hi[i, j] - S[i, j]) if remaining > 0 else (lo[i, j] - S[i, j])
            move = min(remaining, room) if remaining > 0 else max(remaining, room)
            S[i, j] += move
            remaining -= move
    return S


def kkt_residual(
    p: CompositeProblem, c_matrix: Matrix, x: Matrix, y: Optional[Matrix] = None
) -> KktResidual:
    """
    KKT residuals of the saddle-point system at (x, y).

    Args:
        p: Problem
        c_matrix: Consensus matrix C
        x: m x d stacked point
        y: Dual certificate; recovered by least squares when omitted

    Returns:
        KktResidual
    """
    return KktEvaluator(p, c_matrix)(x, y)


@dataclass(frozen=True)
class FixResidual:
    """Distance of x from the fixed-point set of the iterate."""

    consensus: float
    aggregate: float


def fix_residual(t: "WeightTriple", p: CompositeProblem, gamma: float, x: Matrix) -> FixResidual:
    """
    Fixed-point residuals: ||C x|| and the aggregate optimality condition.

    The aggregate term is ||r + gamma s|| with r = 1^T (I - A) x + gamma 1^T B grad f(x),
    minimized over s in 1^T dg(x), which is a box summed over agents.

    Raises:
        ConfigError: if gamma is not positive
    """
    if not gamma > 0.0:
        raise ConfigError(f"gamma must be positive, got {gamma}")
    x = np.asarray(x, dtype=float)
    grad = p.gradient_stack(x)
    ones = np.ones(p.m)

    consensus = float(np.linalg.norm(t.C @ x))
    r = ones @ (x - t.A @ x) + gamma * (ones @ (t.B @ grad))

    lo, hi = p.nonsmooth.subdifferential_bounds(x)
    if np.any(lo > hi):
        return FixResidual(consensus, float("inf"))

    s = np.clip(-r / gamma, lo.sum(axis=0), hi.sum(axis=0))
    return FixResidual(consensus, float(np.linalg.norm(r + gamma * s)))


@dataclass(frozen=True)
class RateFit:
    """
    Least-squares fit of log(err_sq) against k.

    rate = exp(slope); the band is exp(slope +- 2 stderr).
    """

    rate: float
    slope: float
    intercept: float
    stderr: float
    band: Tuple[float, float]
    points: int
    truncated: bool

    @property
    def contractive(self) -> bool:
        return self.rate < 1.0 - 1e-6

    def to_dict(self) -> Dict[str, Any]:
        return {
            "rate": self.rate,
            "slope": self.slope,
            "stderr": self.stderr,
            "band": list(self.band),
            "points": self.points,
            "truncated": self.truncated,
            "contractive": self.contractive,
        }


def empirical_rate(
    values: Union["Trajectory", Sequence[float], NDArray[np.float64]],
    iters: Optional[Sequence[float]] = None,
    floor: float = RATE_FLOOR,
    min_points: int = RATE_MIN_POINTS,
    tail: float = RATE_TAIL,
) -> RateFit:
    """
    Fit the geometric decay factor of an error sequence.

    The fit uses the last ``tail`` fraction of the sequence. If the error reaches
    ``floor`` before the end, the fit falls back to the last half of the part
    above the floor and the result is flagged as truncated.

    Args:
        values: err_sq sequence, or a Trajectory
        iters: Iteration indices (defaults to the trajectory's, or 0..n-1)
        floor: Numerical floor below which points are discarded
        min_points: Fewer tail points than this flags the fit as truncated
        tail: Fraction of the sequence used for the fit

    Raises:
        ConvergenceError: if fewer than 3 usable points remain
    """
    if hasattr(values, "err_sq"):
        if iters is None:
            iters = values.iters  # type: ignore[union-attr]
        values = values.err_sq  # type: ignore[union-attr]

    err = np.asarray(values, dtype=float)
    k = np.arange(err.size, dtype=float) if iters is None else np.asarray(iters, dtype=float)
    n = err.size

    usable = np.isfinite(err) & (err > floor)
    bad = np.flatnonzero(~usable)
    prefix = int(bad[0]) if bad.size else n

    start = int(np.floor(n * (1.0 - tail)))
    truncated = False
    if prefix < n:
        start, stop = prefix // 2, prefix
        truncated = True
    else:
        stop = n

    points = stop - start
    if points < 3:
        raise ConvergenceError(f"only {points} points above the floor {floor:g}; cannot fit a rate")
    if points < min_points:
        truncated = True
    if truncated:
        logger.warning("rate fitted on a truncated window of %d points", points)

    fit = stats.linregress(k[start:stop], np.log(err[start:stop]))
    slope, stderr = float(fit.slope), float(fit.stderr)
    return RateFit(
        rate=float(np.exp(slope)),
        slope=slope,
        intercept=float(fit.intercept),
        stderr=stderr,
        band=(float(np.exp(slope - 2 * stderr)), float(np.exp(slope + 2 * stderr))),
        points=points,
        truncated=truncated,
    )


@dataclass(frozen=True)
class CertificationReport:
    """Pass/fail certificate of one run."""

    preset: str
    gamma: float
    lambda_pred: Optional[float]
    lambda_emp: float
    kkt_primal: float
    kkt_dual: float
    passed: bool
    fit: RateFit
    rate_slack: float
    kkt_tol: float
    max_dual_sum: float

    def to_dict(self) -> Dict[str, Any]:
        return {
            "preset": self.preset,
            "gamma": self.gamma,
            "lambda_pred": self.lambda_pred,
            "lambda_emp": self.lambda_emp,
            "kkt_primal": self.kkt_primal,
            "kkt_dual": self.kkt_dual,
            "pass": self.passed,
            "fit": self.fit.to_dict(),
            "rate_slack": self.rate_slack,
            "kkt_tol": self.kkt_tol,
            "max_dual_sum": self.max_dual_sum,
        }


def certify(
    trajectory: "Trajectory",
    prediction: Optional["RatePrediction"] = None,
    rate_slack: float = RATE_SLACK,
    kkt_tol: float = KKT_TOL,
) -> CertificationReport:
    """
    Certify a finished run.

    Passes when the fitted rate is within rate_slack of the prediction (if one
    is given) and both final KKT residuals are at most kkt_tol. The fit ignores
    errors below RELATIVE_FLOOR times the first error.
    """
    if not len(trajectory):
        raise ConvergenceError("cannot certify an empty trajectory")

    # Errors stall at the precision of the reference solution.
    floor = max(RATE_FLOOR, RELATIVE_FLOOR * trajectory.err_sq[0])
    fit = empirical_rate(trajectory, floor=floor)
    kkt_primal, kkt_dual = trajectory.kkt_primal[-1], trajectory.kkt_dual[-1]
    lambda_pred = prediction.rate if prediction is not None else None

    rate_ok = lambda_pred is None or fit.rate <= lambda_pred + rate_slack
    kkt_ok = kkt_primal <= kkt_tol and kkt_dual <= kkt_tol
    if not rate_ok:
        logger.info(
            "%s: fitted rate %.4f exceeds %.4f + %.2f",
            trajectory.label,
            fit.rate,
            lambda_pred,
            rate_slack,
        )
    if not kkt_ok:
        logger.info(
            "%s: final KKT residuals (%.3e, %.3e) above %.1e",
            trajectory.label,
            kkt_primal,
            kkt_dual,
            kkt_tol,
        )

    return CertificationReport(
        preset=trajectory.label,
        gamma=trajectory.gamma,
        lambda_pred=lambda_pred,
        lambda_emp=fit.rate,
        kkt_primal=kkt_primal,
        kkt_dual=kkt_dual,
        passed=bool(rate_ok and kkt_ok),
        fit=fit,
        rate_slack=rate_slack,
        kkt_tol=kkt_tol,
        max_dual_sum=trajectory.max_dual_sum,
    )
