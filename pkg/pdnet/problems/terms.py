"""
Building blocks of a composite problem: smooth local costs and the shared
nonsmooth term.
"""

from dataclasses import dataclass
from typing import Any, Dict, Optional, Tuple, Union

import numpy as np
from numpy.typing import NDArray

from ..errors import ConfigError, DimensionError
from ..linalg import Matrix, sym_eigvals

Array = NDArray[np.float64]
Bound = Union[float, Array]

NONSMOOTH_KINDS = ("zero", "l1", "box")

# Coordinates within this distance of a kink count as sitting on it.
ACTIVE_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class QuadraticCost:
    """
    Local cost f_i(x) = 1/2 x^T Q x - b^T x with Q symmetric positive definite.
    """

    Q: Matrix
    b: Array

    kind = "quadratic"

    def __post_init__(self) -> None:
        Q = np.atleast_2d(np.array(self.Q, dtype=float))
        b = np.atleast_1d(np.array(self.b, dtype=float))
        d = b.shape[0]
        if Q.shape != (d, d):
            raise DimensionError(f"Q has shape {Q.shape}, b has length {d}")
        if np.max(np.abs(Q - Q.T), initial=0.0) > 1e-12 * max(1.0, np.max(np.abs(Q))):
            raise ConfigError("Q must be symmetric")
        Q = 0.5 * (Q + Q.T)
        eigs = sym_eigvals(Q)
        if eigs[0] <= 0.0:
            raise ConfigError(f"Q must be positive definite, lambda_min = {eigs[0]:.3e}")
        Q.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "_eigs", eigs)

    @property
    def d(self) -> int:
        return int(self.b.shape[0])

    @property
    def mu(self) -> float:
        return float(self._eigs[0])  # type: ignore[attr-defined]

    @property
    def L(self) -> float:
        return float(self._eigs[-1])  # type: ignore[attr-defined]

    def value(self, x: Array) -> float:
        return float(0.5 * x @ self.Q @ x - self.b @ x)

    def gradient(self, x: Array) -> Array:
        return self.Q @ x - self.b


@dataclass(frozen=True, eq=False)
class NonsmoothTerm:
    """
    Shared nonsmooth term G with a closed-form proximal map.

    Attributes:
        kind: "zero", "l1" (weight * ||x||_1) or "box" (indicator of [lower, upper]).
        weight: l1 weight, ignored for other kinds.
        lower: Box lower bound, scalar or per coordinate.
        upper: Box upper bound, scalar or per coordinate.
    """

    kind: str = "zero"
    weight: float = 0.0
    lower: Optional[Bound] = None
    upper: Optional[Bound] = None

    def __post_init__(self) -> None:
        if self.kind not in NONSMOOTH_KINDS:
            raise ConfigError(
                f"unknown nonsmooth kind '{self.kind}', expected one of {NONSMOOTH_KINDS}"
            )
        if self.kind == "l1" and not self.weight >= 0.0:
            raise ConfigError(f"l1 weight must be >= 0, got {self.weight}")
        if self.kind == "box":
            if self.lower is None or self.upper is None:
                raise ConfigError("box term needs both lower and upper bounds")
            lower = np.array(self.lower, dtype=float)
            upper = np.array(self.upper, dtype=float)
            if np.any(lower > upper):
                raise ConfigError("box lower bound exceeds upper bound")
            object.__setattr__(self, "lower", lower)
            object.__setattr__(self, "upper", upper)

    @classmethod
    def zero(cls) -> "NonsmoothTerm":
        return cls("zero")

    @classmethod
    def l1(cls, weight: float) -> "NonsmoothTerm":
        return cls("l1", weight=weight)

    @classmethod
    def box(cls, lower: Bound, upper: Bound) -> "NonsmoothTerm":
        return cls("box", lower=lower, upper=upper)

    @property
    def is_zero(self) -> bool:
        return self.kind == "zero" or (self.kind == "l1" and self.weight == 0.0)

    def value(self, x: Array) -> float:
        """G(x); +inf outside the box."""
        if self.kind == "l1":
            return float(self.weight * np.sum(np.abs(x)))
        if self.kind == "box":
            inside = np.all(x >= self.lower - ACTIVE_TOL) and np.all(x <= self.upper + ACTIVE_TOL)
            return 0.0 if inside else float("inf")
        return 0.0

    def prox(self, v: Array, gamma: float) -> Array:
        """
        prox_{gamma G} applied to every row of v.

        Args:
            v: Array whose last axis is the coordinate axis
            gamma: Positive step size

        Returns:
            New array of the same shape
        """
        if not gamma > 0.0:
            raise ConfigError(f"prox step must be positive, got {gamma}")
        if self.kind == "l1":
            return np.sign(v) * np.maximum(np.abs(v) - gamma * self.weight, 0.0)
        if self.kind == "box":
            return np.clip(v, self.lower, self.upper)
        return np.array(v, dtype=float, copy=True)

    def subdifferential_bounds(self, x: Array) -> Tuple[Array, Array]:
        """
        Coordinatewise interval [lo, hi] with dG(x) equal to their product.

        The subdifferential of each kind is separable, so it is a box in every
        row. Points outside the domain get an empty interval (lo = +inf, hi = -inf).
        """
        x = np.asarray(x, dtype=float)
        if self.kind == "l1":
            at_zero = np.abs(x) <= ACTIVE_TOL
            signed = self.weight * np.sign(x)
            lo = np.where(at_zero, -self.weight, signed)
            hi = np.where(at_zero, self.weight, signed)
            return lo, hi

        if self.kind == "box":
            lower = np.broadcast_to(self.lower, x.shape)
            upper = np.broadcast_to(self.upper, x.shape)
            at_lower = np.abs(x - lower) <= ACTIVE_TOL
            at_upper = np.abs(x - upper) <= ACTIVE_TOL
            outside = (x < lower - ACTIVE_TOL) | (x > upper + ACTIVE_TOL)
            lo = np.where(at_lower, -np.inf, 0.0)
            hi = np.where(at_upper, np.inf, 0.0)
            lo = np.where(outside, np.inf, lo)
            hi = np.where(outside, -np.inf, hi)
            return lo, hi

        zeros = np.zeros_like(x)
        return zeros, zeros.copy()

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {"kind": self.kind}
        if self.kind == "l1":
            data["weight"] = float(self.weight)
        if self.kind == "box":
            data["lower"] = np.asarray(self.lower).tolist()
            data["upper"] = np.asarray(self.upper).tolist()
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "NonsmoothTerm":
        kind = data.get("kind", "zero")
        if kind == "l1":
            return cls.l1(float(data.get("weight", 0.0)))
        if kind == "box":
            return cls.box(data.get("lower"), data.get("upper"))  # type: ignore[arg-type]
        return cls(kind)


def interval_distance(v: Array, lo: Array, hi: Array) -> Array:
    """Entrywise distance from v to [lo, hi]; +inf where the interval is empty."""
    empty = lo > hi
    nearest = np.clip(v, np.where(empty, 0.0, lo), np.where(empty, 0.0, hi))
    return np.where(empty, np.inf, np.abs(v - nearest))
