"""
Experiment configuration files.

An experiment config is a JSON object. Every section is optional; missing values
fall back to the defaults below and to the environment settings. Relative file
paths are resolved against the directory holding the config file.

    {
      "graph": {"generator": "ring", "m": 10, "lazy": false},
      "problem": {"d": 5, "mu": 1.0, "L": 10.0, "nonsmooth": {"kind": "l1", "weight": 0.1}},
      "preset": {"name": "nids", "params": {}, "a_scale": 1.0},
      "gamma": "star",
      "iters": 800,
      "seed": 0,
      "certification": {"rate_slack": 0.02, "kkt_tol": 1e-6},
      "verify": {"presets": ["extra", "nids"], "sizes": [3, 10], "trials": 100},
      "tradeoff": {"rho_com": {"start": 0.05, "stop": 0.95, "step": 0.05}, "end_to_end": false},
      "output": {"dir": "out"}
    }
"""

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

from .algorithms.weights import PRESETS, WeightTriple, canonical_name, preset
from .errors import ConfigError
from .problems import CompositeProblem, NonsmoothTerm, random_problem
from .splitting import DEFAULT_VERIFY_PRESETS, DEFAULT_VERIFY_SIZES
from .topology import Graph, GossipMatrix, build_metropolis, lazy
from .tradeoff import grid_values

GENERATORS = ("ring", "path", "complete", "star", "random_geometric", "erdos_renyi")

_SECTIONS = (
    "graph",
    "problem",
    "preset",
    "gamma",
    "iters",
    "seed",
    "trials",
    "certification",
    "verify",
    "tradeoff",
    "output",
)


def _section(data: Dict[str, Any], name: str, allowed: Tuple[str, ...]) -> Dict[str, Any]:
    value = data.get(name) or {}
    if not isinstance(value, dict):
        raise ConfigError(f"'{name}' must be an object")
    unknown = set(value) - set(allowed)
    if unknown:
        raise ConfigError(f"unknown keys in '{name}': {', '.join(sorted(unknown))}")
    return value


def _positive_int(value: Any, name: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or value < 1:
        raise ConfigError(f"{name} must be a positive integer, got {value!r}")
    return value


def _number(value: Any, name: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{name} must be a number, got {value!r}")
    return float(value)


def _flag(value: Any, name: str) -> bool:
    if not isinstance(value, bool):
        raise ConfigError(f"{name} must be true or false, got {value!r}")
    return value


def _resolve(path: Optional[str], base: Optional[Path]) -> Optional[Path]:
    if path is None:
        return None
    p = Path(path)
    return p if p.is_absolute() or base is None else base / p


@dataclass(frozen=True)
class GraphSpec:
    generator: str = "ring"
    m: int = 10
    file: Optional[Path] = None
    radius: float = 0.5
    p: float = 0.3
    lazy: bool = False

    @classmethod
    def from_dict(cls, data: Dict[str, Any], base: Optional[Path]) -> "GraphSpec":
        generator = data.get("generator", "ring")
        if generator not in GENERATORS:
            choices = ", ".join(GENERATORS)
            raise ConfigError(f"unknown graph generator '{generator}', expected one of {choices}")
        return cls(
            generator=generator,
            m=_positive_int(data.get("m", 10), "graph.m"),
            file=_resolve(data.get("file"), base),
            radius=_number(data.get("radius", 0.5), "graph.radius"),
            p=_number(data.get("p", 0.3), "graph.p"),
            lazy=_flag(data.get("lazy", False), "graph.lazy"),
        )

    def build_graph(self, seed: int) -> Graph:
        if self.file is not None:
            return Graph.load(self.file)
        if self.generator == "random_geometric":
            return Graph.random_geometric(self.m, self.radius, seed)
        if self.generator == "erdos_renyi":
            return Graph.erdos_renyi(self.m, self.p, seed)
        return getattr(Graph, self.generator)(self.m)

    def build(self, seed: int) -> GossipMatrix:
        """Metropolis gossip matrix of the configured graph, made lazy on request."""
        w = build_metropolis(self.build_graph(seed))
        return lazy(w) if self.lazy else w


@dataclass(frozen=True)
class ProblemSpec:
    d: int = 5
    mu: float = 1.0
    L: float = 10.0
    nonsmooth: NonsmoothTerm = field(default_factory=NonsmoothTerm.zero)
    file: Optional[Path] = None
    shared_basis: bool = True

    @classmethod
    def from_dict(cls, data: Dict[str, Any], base: Optional[Path]) -> "ProblemSpec":
        mu = _number(data.get("mu", 1.0), "problem.mu")
        L = _number(data.get("L", 10.0), "problem.L")
        if not 0.0 < mu <= L:
            raise ConfigError(f"need 0 < mu <= L, got mu={mu}, L={L}")
        nonsmooth = data.get("nonsmooth") or {"kind": "zero"}
        if not isinstance(nonsmooth, dict):
            raise ConfigError("problem.nonsmooth must be an object")
        return cls(
            d=_positive_int(data.get("d", 5), "problem.d"),
            mu=mu,
            L=L,
            nonsmooth=NonsmoothTerm.from_dict(nonsmooth),
            file=_resolve(data.get("file"), base),
            shared_basis=_flag(data.get("shared_basis", True), "problem.shared_basis"),
        )

    def build(self, m: int, seed: int) -> CompositeProblem:
        if self.file is not None:
            return CompositeProblem.load(self.file)
        return random_problem(
            m, self.d, self.mu, self.L, nonsmooth=self.nonsmooth, seed=seed, shared_basis=self.shared_basis
        )


@dataclass(frozen=True)
class PresetSpec:
    name: str = "nids"
    params: Dict[str, Any] = field(default_factory=dict)
    a_scale: float = 1.0

    @classmethod
    def from_value(cls, value: Union[str, Dict[str, Any], None]) -> "PresetSpec":
        if value is None:
            return cls()
        if isinstance(value, str):
            return cls(canonical_name(value))
        if not isinstance(value, dict):
            raise ConfigError("preset must be a name or an object")
        unknown = set(value) - {"name", "params", "a_scale"}
        if unknown:
            raise ConfigError(f"unknown keys in 'preset': {', '.join(sorted(unknown))}")
        params = value.get("params") or {}
        if not isinstance(params, dict):
            raise ConfigError("preset.params must be an object")
        return cls(
            name=canonical_name(str(value.get("name", "nids"))),
            params={
                k: _positive_int(v, "preset.params.k") if k == "k" else _number(v, f"preset.params.{k}")
                for k, v in params.items()
            },
            a_scale=_number(value.get("a_scale", 1.0), "preset.a_scale"),
        )

    def build(self, w: GossipMatrix) -> WeightTriple:
        return preset(self.name, w, a_scale=self.a_scale, **self.params)


@dataclass(frozen=True)
class VerifySpec:
    presets: Tuple[str, ...] = DEFAULT_VERIFY_PRESETS
    sizes: Tuple[int, ...] = DEFAULT_VERIFY_SIZES
    trials: Optional[int] = None
    d: int = 3
    mu: float = 1.0
    L: float = 2.0
    q_scale: float = 1.0
    lambda_scale: float = 1.0
    nonsmooth: Optional[NonsmoothTerm] = None

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "VerifySpec":
        presets = data.get("presets", list(DEFAULT_VERIFY_PRESETS))
        sizes = data.get("sizes", list(DEFAULT_VERIFY_SIZES))
        if not isinstance(presets, list) or not presets:
            raise ConfigError("verify.presets must be a non-empty list")
        if not isinstance(sizes, list) or not sizes:
            raise ConfigError("verify.sizes must be a non-empty list")
        trials = data.get("trials")
        mu = _number(data.get("mu", 1.0), "verify.mu")
        L = _number(data.get("L", 2.0), "verify.L")
        if not 0.0 < mu <= L:
            raise ConfigError(f"need 0 < mu <= L, got mu={mu}, L={L}")
        sized = tuple(_positive_int(m, "verify.sizes") for m in sizes)
        if min(sized) < 2:
            raise ConfigError("verify.sizes must be at least 2")
        return cls(
            presets=tuple(canonical_name(str(p)) for p in presets),
            sizes=sized,
            trials=None if trials is None else _positive_int(trials, "verify.trials"),
            d=_positive_int(data.get("d", 3), "verify.d"),
            mu=mu,
            L=L,
            q_scale=_number(data.get("q_scale", 1.0), "verify.q_scale"),
            lambda_scale=_number(data.get("lambda_scale", 1.0), "verify.lambda_scale"),
            nonsmooth=NonsmoothTerm.from_dict(data["nonsmooth"]) if data.get("nonsmooth") else None,
        )


@dataclass(frozen=True)
class TradeoffSpec:
    """Grid axes are (start, stop, step) triples; points lists explicit (rho_com, rho_opt) pairs."""

    rho_com: Tuple[float, float, float] = (0.05, 0.95, 0.05)
    rho_opt: Tuple[float, float, float] = (0.05, 0.95, 0.05)
    points: Optional[Tuple[Tuple[float, float], ...]] = None
    end_to_end: bool = False
    m: int = 20
    d: int = 5
    iters: int = 300

    @staticmethod
    def _axis(value: Any, name: str) -> Tuple[float, float, float]:
        if not isinstance(value, dict):
            raise ConfigError(f"tradeoff.{name} must be an object with start, stop, step")
        axis = (
            _number(value.get("start"), f"tradeoff.{name}.start"),
            _number(value.get("stop"), f"tradeoff.{name}.stop"),
            _number(value.get("step"), f"tradeoff.{name}.step"),
        )
        grid_values(*axis)
        return axis

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "TradeoffSpec":
        default = cls()
        points = data.get("points")
        if points is not None:
            if not isinstance(points, list) or not points:
                raise ConfigError("tradeoff.points must be a non-empty list of pairs")
            pairs = []
            for pair in points:
                if not isinstance(pair, list) or len(pair) != 2:
                    raise ConfigError(f"tradeoff point {pair!r} is not a [rho_com, rho_opt] pair")
                pairs.append((_number(pair[0], "rho_com"), _number(pair[1], "rho_opt")))
            points = tuple(pairs)
        return cls(
            rho_com=cls._axis(data["rho_com"], "rho_com") if "rho_com" in data else default.rho_com,
            rho_opt=cls._axis(data["rho_opt"], "rho_opt") if "rho_opt" in data else default.rho_opt,
            points=points,
            end_to_end=_flag(data.get("end_to_end", False), "tradeoff.end_to_end"),
            m=_positive_int(data.get("m", 20), "tradeoff.m"),
            d=_positive_int(data.get("d", 5), "tradeoff.d"),
            iters=_positive_int(data.get("iters", 300), "tradeoff.iters"),
        )

    def grid(self) -> List[Tuple[float, float]]:
        if self.points is not None:
            return list(self.points)
        return [(rc, ro) for rc in grid_values(*self.rho_com) for ro in grid_values(*self.rho_opt)]

    def rho_opt_values(self) -> List[float]:
        return sorted({ro for _, ro in self.grid()})


@dataclass(frozen=True)
class ExperimentConfig:
    """One parsed experiment; seed and output dir stay None until resolved against settings."""

    graph: GraphSpec = field(default_factory=GraphSpec)
    problem: ProblemSpec = field(default_factory=ProblemSpec)
    preset: PresetSpec = field(default_factory=PresetSpec)
    gamma: Union[str, float] = "star"
    iters: int = 800
    seed: Optional[int] = None
    trials: Optional[int] = None
    rate_slack: float = 0.02
    kkt_tol: float = 1e-6
    verify: VerifySpec = field(default_factory=VerifySpec)
    tradeoff: TradeoffSpec = field(default_factory=TradeoffSpec)
    output_dir: Optional[Path] = None

    @classmethod
    def from_dict(cls, data: Dict[str, Any], base: Optional[Path] = None) -> "ExperimentConfig":
        """
        Parse a config object.

        Args:
            data: Decoded JSON object
            base: Directory relative file paths are resolved against

        Raises:
            ConfigError: on unknown keys or invalid values
        """
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        unknown = set(data) - set(_SECTIONS)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")

        gamma = data.get("gamma", "star")
        if gamma != "star":
            gamma = _number(gamma, "gamma")
            if not gamma > 0.0:
                raise ConfigError(f"gamma must be 'star' or a positive number, got {gamma}")

        seed = data.get("seed")
        if seed is not None and (isinstance(seed, bool) or not isinstance(seed, int) or seed < 0):
            raise ConfigError(f"seed must be a non-negative integer, got {seed!r}")
        trials = data.get("trials")

        certification = _section(data, "certification", ("rate_slack", "kkt_tol"))
        output = _section(data, "output", ("dir",))

        return cls(
            graph=GraphSpec.from_dict(
                _section(data, "graph", ("generator", "m", "file", "radius", "p", "lazy")), base
            ),
            problem=ProblemSpec.from_dict(
                _section(data, "problem", ("d", "mu", "L", "nonsmooth", "file", "shared_basis")), base
            ),
            preset=PresetSpec.from_value(data.get("preset")),
            gamma=gamma,
            iters=_positive_int(data.get("iters", 800), "iters"),
            seed=seed,
            trials=None if trials is None else _positive_int(trials, "trials"),
            rate_slack=_number(certification.get("rate_slack", 0.02), "certification.rate_slack"),
            kkt_tol=_number(certification.get("kkt_tol", 1e-6), "certification.kkt_tol"),
            verify=VerifySpec.from_dict(
                _section(
                    data,
                    "verify",
                    ("presets", "sizes", "trials", "d", "mu", "L", "q_scale", "lambda_scale", "nonsmooth"),
                )
            ),
            tradeoff=TradeoffSpec.from_dict(
                _section(data, "tradeoff", ("rho_com", "rho_opt", "points", "end_to_end", "m", "d", "iters"))
            ),
            output_dir=_resolve(output.get("dir"), base),
        )

    @classmethod
    def load(cls, path: Union[str, Path]) -> "ExperimentConfig":
        """Read a JSON config; OSError propagates for missing files."""
        path = Path(path)
        text = path.read_text(encoding="utf-8")
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError(f"config {path} is not valid JSON: {e}")
        return cls.from_dict(data, path.parent)

    def with_overrides(
        self, seed: Optional[int] = None, output_dir: Optional[Path] = None
    ) -> "ExperimentConfig":
        changes: Dict[str, Any] = {}
        if seed is not None:
            changes["seed"] = seed
        if output_dir is not None:
            changes["output_dir"] = Path(output_dir)
        return replace(self, **changes)

    @property
    def trial_count(self) -> Optional[int]:
        """Verifier trials: verify.trials, then the top-level trials key."""
        return self.verify.trials if self.verify.trials is not None else self.trials


__all__ = [
    "ExperimentConfig",
    "GENERATORS",
    "GraphSpec",
    "PRESETS",
    "PresetSpec",
    "ProblemSpec",
    "TradeoffSpec",
    "VerifySpec",
]
