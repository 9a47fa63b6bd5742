"""Experiment config schema: JSON file -> frozen dataclasses.

Every key is validated; unknown keys are rejected with their dotted path.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

from cbdom.dyadic.lattice import MAX_LEVEL
from cbdom.errors import ConfigError
from cbdom.estimates.probes import CHAIN_DEPTH, MAX_CHAIN_DEPTH
from cbdom.geometry.john import JOHN_TOL
from cbdom.geometry.nets import DEFAULT_NET_SIZES
from cbdom.geometry.zonotope import MEMBERSHIP_TOL
from cbdom.operators.base import NORM_TOL

COMMANDS = ("characteristics", "dominate", "verify", "sweep", "search", "selftest")
WEIGHT_KINDS = ("identity", "scalar_power", "matrix_rotating", "random_log_bounded",
                "explicit", "inverse")
OPERATOR_KINDS = ("haar_shift", "big_haar_shift", "martingale_transform", "paraproduct",
                  "cz_hilbert", "identity")
FUNCTION_KINDS = ("random", "constant", "haar")
SUPPORTS = ("full", "middle")


@dataclass(frozen=True)
class WeightSpec:
    kind: str = "identity"
    p: float = 0.0
    p1: float = 0.0
    p2: float = 0.0
    twist: float = 1.0
    phase: float = 0.0
    bound: float = 1.0
    x0: tuple[float, ...] | None = None
    matrices: tuple | None = None
    seed: int | None = None
    floor: float = 0.0

    def to_dict(self) -> dict:
        out = {"kind": self.kind}
        if self.kind == "scalar_power":
            out["p"] = self.p
        elif self.kind == "matrix_rotating":
            out.update(p1=self.p1, p2=self.p2, twist=self.twist, phase=self.phase)
        elif self.kind == "random_log_bounded":
            out["bound"] = self.bound
        elif self.kind == "explicit":
            out["matrices"] = self.matrices
        if self.x0 is not None:
            out["x0"] = list(self.x0)
        if self.seed is not None:
            out["seed"] = self.seed
        if self.floor > 0.0:
            out["floor"] = self.floor
        return out


@dataclass(frozen=True)
class OperatorSpec:
    kind: str = "big_haar_shift"
    complexity: int = 0
    separation_class: int | None = None
    normalize: bool = True
    cutoff: int = 3


@dataclass(frozen=True)
class FunctionSpec:
    kind: str = "random"
    support: str = "full"


@dataclass(frozen=True)
class Tolerances:
    membership: float = MEMBERSHIP_TOL
    john: float = JOHN_TOL
    norm: float = NORM_TOL


@dataclass(frozen=True)
class NetSizes:
    d2: int = DEFAULT_NET_SIZES[2]
    d3: int = DEFAULT_NET_SIZES[3]
    d4: int = DEFAULT_NET_SIZES[4]

    def size(self, d: int) -> int | None:
        return {2: self.d2, 3: self.d3, 4: self.d4}.get(d)


@dataclass(frozen=True)
class SweepSpec:
    p_grid: tuple[float, ...] = (0.5, 0.7, 0.8, 0.9, 0.95)
    depth: int = CHAIN_DEPTH


@dataclass(frozen=True)
class SearchSpec:
    alpha: float = 1.5
    budget: int = 40


@dataclass(frozen=True)
class ExperimentConfig:
    command: str
    dimension: int = 1
    level: int = 8
    vector_dim: int = 2
    weights: dict[str, WeightSpec] = field(default_factory=lambda: {"W": WeightSpec()})
    operator: OperatorSpec = field(default_factory=OperatorSpec)
    function: FunctionSpec = field(default_factory=FunctionSpec)
    epsilon: float = 0.5
    delta: float = 0.5
    tolerances: Tolerances = field(default_factory=Tolerances)
    nets: NetSizes = field(default_factory=NetSizes)
    seed: int = 0
    output: str | None = None
    sweep: SweepSpec = field(default_factory=SweepSpec)
    search: SearchSpec = field(default_factory=SearchSpec)

    def with_overrides(self, seed: int | None = None, output: str | None = None
                       ) -> ExperimentConfig:
        changes = {}
        if seed is not None:
            changes["seed"] = int(seed)
        if output is not None:
            changes["output"] = output
        return replace(self, **changes) if changes else self


# ---- validation helpers ----

def _keys(data: Any, allowed: tuple[str, ...], path: str) -> dict:
    if not isinstance(data, dict):
        raise ConfigError("expected an object", field=path)
    for key in data:
        if key not in allowed:
            where = f"{path}.{key}" if path else key
            raise ConfigError(f"unknown key {key!r}", field=where)
    return data


def _number(data: dict, key: str, path: str, default: float, lo: float | None = None,
            hi: float | None = None, open_lo: bool = False, open_hi: bool = False) -> float:
    where = f"{path}.{key}" if path else key
    value = data.get(key, default)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"expected a number, got {value!r}", field=where)
    value = float(value)
    if lo is not None and (value < lo or (open_lo and value == lo)):
        raise ConfigError(f"{value!r} is below the allowed range", field=where)
    if hi is not None and (value > hi or (open_hi and value == hi)):
        raise ConfigError(f"{value!r} is above the allowed range", field=where)
    return value


def _integer(data: dict, key: str, path: str, default: int | None, lo: int | None = None,
             hi: int | None = None) -> int | None:
    where = f"{path}.{key}" if path else key
    value = data.get(key, default)
    if value is None and default is None:
        return None
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"expected an integer, got {value!r}", field=where)
    if (lo is not None and value < lo) or (hi is not None and value > hi):
        raise ConfigError(f"{value} outside [{lo}, {hi}]", field=where)
    return value


def _choice(data: dict, key: str, path: str, default: str, choices: tuple[str, ...]) -> str:
    where = f"{path}.{key}" if path else key
    value = data.get(key, default)
    if value not in choices:
        raise ConfigError(f"{value!r} is not one of {', '.join(choices)}", field=where)
    return value


# ---- sections ----

def _weight(data: Any, path: str, dim: int, d: int) -> WeightSpec:
    data = _keys(data, ("kind", "p", "p1", "p2", "twist", "phase", "bound", "x0",
                        "matrices", "seed", "floor"), path)
    kind = _choice(data, "kind", path, "identity", WEIGHT_KINDS)
    x0 = data.get("x0")
    if x0 is not None:
        if isinstance(x0, (int, float)) and not isinstance(x0, bool):
            x0 = [x0] * dim
        if not isinstance(x0, list) or len(x0) != dim or not all(
                isinstance(v, (int, float)) and not isinstance(v, bool) for v in x0):
            raise ConfigError(f"expected {dim} coordinates", field=f"{path}.x0")
        x0 = tuple(float(v) for v in x0)
    matrices = data.get("matrices")
    if kind == "explicit":
        if not isinstance(matrices, list) or len(matrices) != d or not all(
                isinstance(row, list) and len(row) == d for row in matrices):
            raise ConfigError(f"explicit weights take one {d} x {d} matrix",
                              field=f"{path}.matrices")
        matrices = tuple(tuple(float(v) for v in row) for row in matrices)
    if kind == "matrix_rotating" and d != 2:
        raise ConfigError("rotating weights need vector_dim 2", field=f"{path}.kind")
    return WeightSpec(
        kind=kind,
        p=_number(data, "p", path, 0.0, -0.999, 0.999),
        p1=_number(data, "p1", path, 0.0, -0.999, 0.999),
        p2=_number(data, "p2", path, 0.0, -0.999, 0.999),
        twist=_number(data, "twist", path, 1.0),
        phase=_number(data, "phase", path, 0.0),
        bound=_number(data, "bound", path, 1.0, 0.0),
        x0=x0,
        matrices=matrices,
        seed=_integer(data, "seed", path, None, 0),
        floor=_number(data, "floor", path, 0.0, 0.0),
    )


def _operator(data: Any, dim: int) -> OperatorSpec:
    path = "operator"
    data = _keys(data, ("kind", "complexity", "separation_class", "normalize", "cutoff"), path)
    kind = _choice(data, "kind", path, "big_haar_shift", OPERATOR_KINDS)
    if kind == "cz_hilbert" and dim != 1:
        raise ConfigError("the discrete Hilbert kernel needs dimension 1", field="operator.kind")
    r = _integer(data, "complexity", path, 0, 0, 4)
    k = _integer(data, "separation_class", path, None, 0, r)
    normalize = data.get("normalize", True)
    if not isinstance(normalize, bool):
        raise ConfigError("expected true or false", field="operator.normalize")
    return OperatorSpec(kind, r, k, normalize, _integer(data, "cutoff", path, 3, 1))


def parse_config(data: Any) -> ExperimentConfig:
    """Validate a decoded JSON object and build an :class:`ExperimentConfig`."""
    data = _keys(data, ("command", "dimension", "level", "vector_dim", "weights", "operator",
                        "function", "epsilon", "delta", "tolerances", "nets", "seed",
                        "output", "sweep", "search"), "")
    if "command" not in data:
        raise ConfigError("missing required key", field="command")
    command = _choice(data, "command", "", "", COMMANDS)
    dim = _integer(data, "dimension", "", 1, 1, 2)
    level = _integer(data, "level", "", 8, 0, MAX_LEVEL[dim])
    d = _integer(data, "vector_dim", "", 2, 1, 4)

    raw_weights = _keys(data.get("weights", {"W": {}}), ("W", "V"), "weights")
    weights = {name: _weight(spec, f"weights.{name}", dim, d)
               for name, spec in raw_weights.items()}
    weights.setdefault("W", WeightSpec())
    if weights["W"].kind == "inverse":
        raise ConfigError("W cannot be the inverse of itself", field="weights.W.kind")

    fn = _keys(data.get("function", {}), ("kind", "support"), "function")
    tol = _keys(data.get("tolerances", {}), ("membership", "john", "norm"), "tolerances")
    nets = _keys(data.get("nets", {}), ("d2", "d3", "d4"), "nets")
    sweep = _keys(data.get("sweep", {}), ("p_grid", "depth"), "sweep")
    search = _keys(data.get("search", {}), ("alpha", "budget"), "search")

    p_grid = sweep.get("p_grid", list(SweepSpec.p_grid))
    if not isinstance(p_grid, list) or not p_grid:
        raise ConfigError("expected a nonempty list of exponents", field="sweep.p_grid")
    p_grid = tuple(_number({"p": p}, "p", "sweep.p_grid", 0.0, -0.999, 0.999) for p in p_grid)

    output = data.get("output")
    if output is not None and not isinstance(output, str):
        raise ConfigError("expected a path string", field="output")

    return ExperimentConfig(
        command=command,
        dimension=dim,
        level=level,
        vector_dim=d,
        weights=weights,
        operator=_operator(data.get("operator", {}), dim),
        function=FunctionSpec(_choice(fn, "kind", "function", "random", FUNCTION_KINDS),
                              _choice(fn, "support", "function", "full", SUPPORTS)),
        epsilon=_number(data, "epsilon", "", 0.5, 0.0, 1.0, open_lo=True, open_hi=True),
        delta=_number(data, "delta", "", 0.5, 0.0, 1.0, open_lo=True, open_hi=True),
        tolerances=Tolerances(
            _number(tol, "membership", "tolerances", MEMBERSHIP_TOL, 0.0, open_lo=True),
            _number(tol, "john", "tolerances", JOHN_TOL, 0.0, open_lo=True),
            _number(tol, "norm", "tolerances", NORM_TOL, 0.0, open_lo=True)),
        nets=NetSizes(*(_integer(nets, key, "nets", DEFAULT_NET_SIZES[k], 1)
                        for k, key in ((2, "d2"), (3, "d3"), (4, "d4")))),
        seed=_integer(data, "seed", "", 0, 0),
        output=output,
        sweep=SweepSpec(p_grid,
                        _integer(sweep, "depth", "sweep", CHAIN_DEPTH, 1, MAX_CHAIN_DEPTH)),
        search=SearchSpec(_number(search, "alpha", "search", 1.5, 1.0, 1.5),
                          _integer(search, "budget", "search", 40, 1)),
    )


def load_config(path: str | Path) -> ExperimentConfig:
    """Read and validate a JSON experiment file."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(exc.msg, line=exc.lineno, column=exc.colno) from exc
    return parse_config(data)
