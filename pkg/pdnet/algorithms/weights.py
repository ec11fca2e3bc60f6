"""
Weight triples (A, B, C) with the factor D, their assumption checks, and the
named presets that recover known distributed algorithms.
"""

import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Callable, Dict, List, Optional, Tuple, Union

import numpy as np

from ..errors import AssumptionError, ConfigError, DimensionError
from ..linalg import (
    COMMUTE_RTOL,
    EIG_SNAP,
    STRICT_MARGIN,
    Matrix,
    generalized_lambda_max,
    psd_sqrt,
    spectral_norm,
    sym_eigvals,
    symmetrize,
)
from ..topology import GossipMatrix, chebyshev_matrix, k_hop_power

logger = logging.getLogger(__name__)

# Equalities such as 1^T A 1 = m are checked to this relative tolerance.
EQUALITY_RTOL = 1e-9


@dataclass(frozen=True, eq=False)
class WeightTriple:
    """
    The matrices driving the unified iterate.

    Attributes:
        A: Mixing applied to x (A = B D).
        B: Symmetric mixing applied to the gradient.
        C: Symmetric PSD consensus penalty.
        D: Symmetric factor with A = B D.
        label: Preset name or "custom".
    """

    A: Matrix
    B: Matrix
    C: Matrix
    D: Matrix
    label: str = "custom"

    def __post_init__(self) -> None:
        mats = {}
        for name in ("A", "B", "C", "D"):
            M = np.array(getattr(self, name), dtype=float)
            if M.ndim != 2 or M.shape[0] != M.shape[1]:
                raise DimensionError(f"{name} must be square, got shape {M.shape}")
            mats[name] = M
        sizes = {M.shape[0] for M in mats.values()}
        if len(sizes) != 1:
            raise DimensionError(f"A, B, C, D disagree on size: {sorted(sizes)}")
        for name, M in mats.items():
            M.setflags(write=False)
            object.__setattr__(self, name, M)

    @property
    def m(self) -> int:
        return int(self.A.shape[0])

    @cached_property
    def sqrt_C(self) -> Matrix:
        """Symmetric square root of C, small negative eigenvalues clipped."""
        return psd_sqrt(self.C)

    @cached_property
    def d_bounds(self) -> Tuple[float, float]:
        """(lambda_min(D), lambda_max(D))."""
        eigs = sym_eigvals(self.D)
        return float(eigs[0]), float(eigs[-1])

    @cached_property
    def eta(self) -> float:
        """
        lambda_max(B^2 (I - C)^{-1}), as the top eigenvalue of the pencil (B^2, I - C).

        Raises:
            AssumptionError: if I - C is not positive definite
        """
        i_minus_c = np.eye(self.m) - self.C
        if sym_eigvals(i_minus_c)[0] <= STRICT_MARGIN:
            raise AssumptionError(f"{self.label}: I - C is not positive definite")
        return generalized_lambda_max(self.B @ self.B, i_minus_c)

    @property
    def dual_centered(self) -> bool:
        """True when 1^T C = 0, so the dual update keeps column sums at zero."""
        return bool(np.linalg.norm(np.ones(self.m) @ self.C) <= STRICT_MARGIN)

    def scaled(self, a_scale: float) -> "WeightTriple":
        """Scale A and D together; A = B D is kept while 1^T A 1 moves off m."""
        label = f"{self.label}[a_scale={a_scale:g}]"
        return WeightTriple(a_scale * self.A, self.B, self.C, a_scale * self.D, label)


@dataclass(frozen=True)
class ConditionCheck:
    """One assumption check; margin is positive (or zero for equalities) when it holds."""

    name: str
    passed: bool
    margin: float
    detail: str = ""

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "passed": self.passed,
            "margin": self.margin,
            "detail": self.detail,
        }


# Conditions that do not depend on the problem constants.
STRUCTURAL = (
    "a_sum",
    "b_column_sums",
    "b_symmetric",
    "c_symmetric",
    "c_psd",
    "c_null_space",
    "d_symmetric",
    "d_range",
    "a_factor",
    "i_minus_c_pd",
    "bc_commute",
)


@dataclass(frozen=True)
class TripleCertificate:
    """Per-condition report produced by validate_triple."""

    label: str
    checks: List[ConditionCheck] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def structural_passed(self) -> bool:
        return all(c.passed for c in self.checks if c.name in STRUCTURAL)

    @property
    def failures(self) -> List[str]:
        return [c.name for c in self.checks if not c.passed]

    def __getitem__(self, name: str) -> ConditionCheck:
        for check in self.checks:
            if check.name == name:
                return check
        raise KeyError(name)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "label": self.label,
            "passed": self.passed,
            "checks": [c.to_dict() for c in self.checks],
        }


def step_condition_constant(d_min: float, d_max: float, mu: float, L: float) -> float:
    """(L + mu) / (L lambda_max(D) - mu lambda_min(D)); +inf when the denominator is <= 0."""
    denominator = L * d_max - mu * d_min
    if denominator <= 0.0:
        return float("inf")
    return (L + mu) / denominator


def validate_triple(
    t: WeightTriple, mu: Optional[float] = None, L: Optional[float] = None
) -> TripleCertificate:
    """
    Check a triple against the standing assumptions.

    Structural conditions cover the sums of A and B, the null space of C,
    the range of D, A = B D, I - C > 0 and the commutation of B and C. With
    mu and L given, the step-size condition B^2 < c^2 (I - C) is added.

    Args:
        t: Triple to check
        mu: Strong convexity constant, optional
        L: Smoothness constant, optional

    Returns:
        TripleCertificate; never raises for failing conditions
    """
    m = t.m
    ones = np.ones(m)
    eye = np.eye(m)
    checks: List[ConditionCheck] = []

    def equality(name: str, residual: float, scale: float, detail: str) -> None:
        ok = residual <= EQUALITY_RTOL * max(1.0, scale)
        checks.append(ConditionCheck(name, ok, residual, detail))

    a_sum = float(ones @ t.A @ ones)
    equality("a_sum", abs(a_sum - m), m, f"1^T A 1 = {a_sum:.12g}, expected {m}")

    b_cols = ones @ t.B
    equality("b_column_sums", float(np.max(np.abs(b_cols - 1.0))), 1.0, "max |1^T B - 1^T|")

    for name in ("B", "C", "D"):
        M = getattr(t, name)
        asym = float(np.max(np.abs(M - M.T)))
        equality(f"{name.lower()}_symmetric", asym, spectral_norm(M), f"max |{name} - {name}^T|")

    c_eigs = sym_eigvals(t.C)
    c_min = float(c_eigs[0])
    checks.append(ConditionCheck("c_psd", c_min >= -EIG_SNAP, c_min, "lambda_min(C)"))

    c_one = float(np.linalg.norm(t.C @ ones))
    lam2 = float(c_eigs[1]) if m >= 2 else 0.0
    c_scale = max(1.0, spectral_norm(t.C)) * np.sqrt(m)
    null_ok = c_one <= EQUALITY_RTOL * c_scale and lam2 > STRICT_MARGIN
    checks.append(
        ConditionCheck(
            "c_null_space",
            bool(null_ok),
            lam2,
            f"||C 1|| = {c_one:.3e}, lambda_2(C) = {lam2:.6g}",
        )
    )

    d_min, d_max = t.d_bounds
    d_margin = min(d_min + 1.0, 1.0 - d_max)
    d_ok = d_min + 1.0 > STRICT_MARGIN and d_max <= 1.0
    checks.append(
        ConditionCheck("d_range", bool(d_ok), d_margin, f"spec(D) in [{d_min:.6g}, {d_max:.6g}]")
    )

    equality(
        "a_factor",
        spectral_norm(t.A - t.B @ t.D),
        1.0 + spectral_norm(t.B) * spectral_norm(t.D),
        "||A - B D||",
    )

    ic_margin = 1.0 - float(c_eigs[-1])
    checks.append(
        ConditionCheck("i_minus_c_pd", ic_margin > STRICT_MARGIN, ic_margin, "lambda_min(I - C)")
    )

    commutator = spectral_norm(t.B @ t.C - t.C @ t.B)
    bound = COMMUTE_RTOL * (1.0 + spectral_norm(t.B) * spectral_norm(t.C))
    checks.append(ConditionCheck("bc_commute", commutator <= bound, commutator, "||BC - CB||"))

    if mu is not None and L is not None:
        c = step_condition_constant(d_min, d_max, mu, L)
        if np.isinf(c):
            checks.append(ConditionCheck("step_condition", True, float("inf"), "c = inf"))
        else:
            slack = symmetrize(c**2 * (eye - t.C) - t.B @ t.B)
            margin = float(sym_eigvals(slack)[0])
            checks.append(
                ConditionCheck(
                    "step_condition",
                    margin > STRICT_MARGIN,
                    margin,
                    f"lambda_min(c^2 (I - C) - B^2) with c = {c:.6g}",
                )
            )

    cert = TripleCertificate(t.label, checks)
    if not cert.passed:
        logger.debug("%s fails %s", t.label, ", ".join(cert.failures))
    return cert


def require_valid(
    t: WeightTriple, mu: Optional[float] = None, L: Optional[float] = None
) -> TripleCertificate:
    """validate_triple, raising AssumptionError with the certificate on failure."""
    cert = validate_triple(t, mu, L)
    if not cert.passed:
        raise AssumptionError(f"{t.label} violates {', '.join(cert.failures)}", certificate=cert)
    return cert


# Presets


def _entries(w: Union[GossipMatrix, Matrix]) -> Matrix:
    return w.entries if isinstance(w, GossipMatrix) else np.asarray(w, dtype=float)


def _extra(W: Matrix, eye: Matrix) -> Dict[str, Matrix]:
    A = 0.5 * (eye + W)
    return {"A": A, "B": eye, "C": 0.5 * (eye - W), "D": A}


def _nids(W: Matrix, eye: Matrix) -> Dict[str, Matrix]:
    A = 0.5 * (eye + W)
    return {"A": A, "B": A, "C": 0.5 * (eye - W), "D": eye}


def _next_augdgm(W: Matrix, eye: Matrix) -> Dict[str, Matrix]:
    W2 = W @ W
    return {"A": W2, "B": W2, "C": (eye - W) @ (eye - W), "D": eye}


def _diging(W: Matrix, eye: Matrix) -> Dict[str, Matrix]:
    W2 = W @ W
    return {"A": W2, "B": eye, "C": (eye - W) @ (eye - W), "D": W2}


def _jakovetic(W: Matrix, eye: Matrix, b: float = 0.5) -> Dict[str, Matrix]:
    W2 = W @ W
    A = b * W2 + (1.0 - b) * W
    return {"A": A, "B": eye, "C": b * W2 - (1.0 + b) * W + eye, "D": A}


def _mansoori(W: Matrix, eye: Matrix, k: int = 2) -> Dict[str, Matrix]:
    if k < 2:
        raise ConfigError(f"mansoori needs k >= 2, got {k}")
    powers = [eye]
    for _ in range(k):
        powers.append(powers[-1] @ W)
    A = powers[k]
    B = symmetrize(sum(powers[1:k]))
    if np.min(np.abs(sym_eigvals(B))) <= STRICT_MARGIN:
        raise AssumptionError(f"mansoori(k={k}): B is singular, D = B^-1 A is undefined")
    return {"A": A, "B": B, "C": W - A, "D": symmetrize(np.linalg.solve(B, A))}


def _alghunaim(W: Matrix, eye: Matrix, alpha: float = 0.5) -> Dict[str, Matrix]:
    return {"A": W, "B": eye, "C": alpha * (eye - W), "D": W}


def _case1(W: Matrix, eye: Matrix) -> Dict[str, Matrix]:
    lam_min = float(sym_eigvals(W)[0])
    if lam_min <= STRICT_MARGIN:
        raise AssumptionError(f"case1 needs W positive definite, lambda_min(W) = {lam_min:.6g}")
    return {"A": W, "B": W, "C": eye - W, "D": eye}


def _case2(W: Matrix, eye: Matrix) -> Dict[str, Matrix]:
    smallest = float(np.min(np.abs(sym_eigvals(W))))
    if smallest <= STRICT_MARGIN:
        raise AssumptionError(f"case2 needs W nonsingular, min |lambda(W)| = {smallest:.3e}")
    return {"A": W, "B": W, "C": eye - W @ W, "D": eye}


def _polynomial(P: Matrix, eye: Matrix, name: str) -> Dict[str, Matrix]:
    smallest = float(np.min(np.abs(sym_eigvals(P))))
    if smallest <= STRICT_MARGIN:
        raise AssumptionError(f"{name}: P_K(W) is singular, so I - C is not positive definite")
    return {"A": P, "B": P, "C": eye - P @ P, "D": eye}


PRESETS = (
    "extra",
    "nids",
    "next_augdgm",
    "diging",
    "jakovetic",
    "mansoori",
    "alghunaim",
    "case1",
    "case2",
    "chebyshev",
)

ALIASES = {"nids_exact_diffusion": "nids", "exact_diffusion": "nids"}

_PARAMS: Dict[str, Tuple[str, ...]] = {
    "extra": (),
    "nids": (),
    "next_augdgm": (),
    "diging": (),
    "jakovetic": ("b",),
    "mansoori": ("k",),
    "alghunaim": ("alpha",),
    "case1": ("k",),
    "case2": ("k",),
    "chebyshev": ("k",),
}

_BUILDERS: Dict[str, Callable[..., Dict[str, Matrix]]] = {
    "extra": _extra,
    "nids": _nids,
    "next_augdgm": _next_augdgm,
    "diging": _diging,
    "jakovetic": _jakovetic,
    "mansoori": _mansoori,
    "alghunaim": _alghunaim,
}


def canonical_name(name: str) -> str:
    key = name.strip().lower()
    key = ALIASES.get(key, key)
    if key not in PRESETS:
        raise ConfigError(f"unknown preset '{name}', expected one of {', '.join(PRESETS)}")
    return key


def preset(
    name: str, w: Union[GossipMatrix, Matrix], a_scale: float = 1.0, **params: Any
) -> WeightTriple:
    """
    Build a named weight triple from a gossip matrix.

    Args:
        name: One of PRESETS (or an alias such as nids_exact_diffusion)
        w: Gossip matrix W
        a_scale: Multiplies A and D; values other than 1 break 1^T A 1 = m
        **params: b (jakovetic), k (mansoori, case1, case2, chebyshev), alpha (alghunaim)

    Returns:
        WeightTriple labelled with the preset and its parameters

    Raises:
        ConfigError: unknown name or parameter
        AssumptionError: case1 without W > 0, case2 or chebyshev with a singular
            polynomial, mansoori with singular B
    """
    key = canonical_name(name)
    unknown = set(params) - set(_PARAMS[key])
    if unknown:
        raise ConfigError(f"preset {key} does not take {', '.join(sorted(unknown))}")
    k_param = params.get("k")
    if k_param is not None and (isinstance(k_param, bool) or not isinstance(k_param, (int, np.integer))):
        raise ConfigError(f"preset {key} needs an integer k, got {k_param!r}")

    W = _entries(w)
    eye = np.eye(W.shape[0])

    if key == "chebyshev":
        k = int(params.get("k", 2))
        if not isinstance(w, GossipMatrix):
            w = GossipMatrix.from_array(W)
        mats = _polynomial(chebyshev_matrix(w, k).entries, eye, f"chebyshev(k={k})")
    elif key in ("case1", "case2"):
        k = int(params.get("k", 1))
        if k < 1:
            raise ConfigError(f"{key} needs k >= 1, got {k}")
        Wk = np.linalg.matrix_power(W, k) if k > 1 else W
        if isinstance(w, GossipMatrix) and k > 1:
            Wk = k_hop_power(w, k).entries
        mats = _case1(Wk, eye) if key == "case1" else _case2(Wk, eye)
    else:
        mats = _BUILDERS[key](W, eye, **params)

    label = key
    if params:
        label += "(" + ", ".join(f"{p}={params[p]:g}" for p in sorted(params)) + ")"

    triple = WeightTriple(mats["A"], mats["B"], mats["C"], mats["D"], label)
    if a_scale != 1.0:
        triple = triple.scaled(a_scale)
    return triple
