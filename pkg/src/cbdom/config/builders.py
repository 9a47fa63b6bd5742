"""Turn config specs into lattices, weights, operators and test functions.

Randomness is drawn from one ``default_rng([seed, stream])`` per purpose, so
changing how one object is built never shifts the draws of another.
"""

from __future__ import annotations

import numpy as np

from cbdom.config.schema import ExperimentConfig, WeightSpec
from cbdom.dyadic.functions import GridFunction
from cbdom.dyadic.lattice import DyadicLattice
from cbdom.errors import ConfigError
from cbdom.operators.base import IdentityOperator, Operator
from cbdom.operators.cz import CZKernel
from cbdom.operators.haar import HaarShift, martingale_transform, random_shift, separate
from cbdom.operators.paraproduct import make_paraproduct
from cbdom.weights import generators
from cbdom.weights.matrix_weight import MatrixWeight

STREAMS = {"weights": 1, "operator": 2, "function": 3, "search": 4, "trials": 5}


def stream(seed: int, name: str, trial: int = 0) -> np.random.Generator:
    return np.random.default_rng([seed, STREAMS[name], trial])


def build_lattice(cfg: ExperimentConfig) -> DyadicLattice:
    return DyadicLattice(cfg.dimension, cfg.level)


def build_weight(spec: WeightSpec, lattice: DyadicLattice, d: int,
                 rng: np.random.Generator, base: MatrixWeight | None = None) -> MatrixWeight:
    """One weight from its spec; a per-weight ``seed`` replaces the shared stream.

    A positive ``floor`` makes invertibility a requirement: every cell's
    smallest eigenvalue must clear it.
    """
    if spec.seed is not None:
        rng = stream(spec.seed, "weights")
    W = _generate(spec, lattice, d, rng, base)
    if spec.floor > 0.0:
        W = MatrixWeight(lattice, W.matrices, floor=spec.floor, invertible=True)
    return W


def _generate(spec: WeightSpec, lattice: DyadicLattice, d: int,
              rng: np.random.Generator, base: MatrixWeight | None) -> MatrixWeight:
    if spec.kind == "identity":
        return generators.identity(lattice, d)
    if spec.kind == "scalar_power":
        return generators.scalar_power(lattice, spec.p, spec.x0, d)
    if spec.kind == "matrix_rotating":
        return generators.matrix_rotating(lattice, spec.p1, spec.p2, spec.twist,
                                          spec.phase, spec.x0)
    if spec.kind == "random_log_bounded":
        return generators.random_log_bounded(lattice, d, rng, spec.bound)
    if spec.kind == "explicit":
        return generators.explicit(lattice, np.array(spec.matrices, dtype=float))
    if base is None:
        raise ConfigError("an inverse weight needs W", field="weights.V.kind")
    return base.inverse_weight()


def build_weights(cfg: ExperimentConfig, lattice: DyadicLattice
                  ) -> tuple[MatrixWeight, MatrixWeight | None]:
    rng = stream(cfg.seed, "weights")
    W = build_weight(cfg.weights["W"], lattice, cfg.vector_dim, rng)
    spec = cfg.weights.get("V")
    V = None if spec is None else build_weight(spec, lattice, cfg.vector_dim, rng, base=W)
    return W, V


def build_operator(cfg: ExperimentConfig, lattice: DyadicLattice) -> Operator:
    spec = cfg.operator
    rng = stream(cfg.seed, "operator")
    r = spec.complexity
    if spec.kind == "identity":
        return IdentityOperator(lattice)
    if spec.kind == "cz_hilbert":
        return CZKernel(lattice, cutoff=spec.cutoff)
    if spec.kind in ("haar_shift", "big_haar_shift"):
        levels = None
        if spec.separation_class is not None:
            levels = list(range(spec.separation_class, lattice.max_level - r, r + 1))
        return random_shift(lattice, r, rng, big=spec.kind == "big_haar_shift", levels=levels)
    if spec.kind == "martingale_transform":
        T = martingale_transform(lattice, rng, complexity=r)
    else:
        b = GridFunction(lattice, rng.standard_normal(lattice.n_cells))
        T = make_paraproduct(b, r, normalize=spec.normalize, tol=cfg.tolerances.norm,
                             seed=cfg.seed)
    if spec.separation_class is not None:
        T = separate(T)[spec.separation_class]
    return T


def shift_pieces(T: Operator) -> list[HaarShift]:
    """The separated pieces of a shift; nonzero pieces only."""
    if not isinstance(T, HaarShift):
        raise ConfigError("domination of this operator needs a Haar shift or paraproduct",
                          field="operator.kind")
    pieces = [P for P in separate(T) if not P.is_zero()]
    return pieces or [T]


def _middle_mask(lattice: DyadicLattice) -> np.ndarray:
    n = lattice.n_side
    axis = np.zeros(n, dtype=bool)
    axis[n // 4:n - n // 4] = True
    mask = axis
    for _ in range(lattice.dim - 1):
        mask = np.logical_and.outer(mask, axis)
    return mask.ravel()


def build_function(cfg: ExperimentConfig, lattice: DyadicLattice, trial: int = 0,
                   d: int | None = None) -> GridFunction:
    """Test function per ``cfg.function``; ``trial`` selects an independent draw."""
    d = cfg.vector_dim if d is None else d
    rng = stream(cfg.seed, "function", trial)
    spec = cfg.function
    if spec.kind == "random":
        vals = rng.standard_normal((lattice.n_cells, d))
    elif spec.kind == "constant":
        vals = np.tile(rng.standard_normal(d), (lattice.n_cells, 1))
    else:
        if lattice.max_level == 0:
            raise ConfigError("a Haar function needs level >= 1", field="function.kind")
        sign = np.ones(lattice.n_cells)
        half = np.array([lattice.cell_cube(c, 1).index[0] for c in range(lattice.n_cells)])
        sign[half == 1] = -1.0
        vals = sign[:, None] * rng.standard_normal(d)[None, :]
    if spec.support == "middle":
        vals = vals * _middle_mask(lattice)[:, None]
    return GridFunction(lattice, vals)

