"""Sharpness probes: power weights on the simple chain, rotating-weight search."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from cbdom.domination.families import make_simple_sparse
from cbdom.dyadic.lattice import DyadicLattice
from cbdom.errors import DomainError
from cbdom.estimates.norms import composite_norm
from cbdom.operators.base import NORM_TOL, Operator
from cbdom.operators.haar import random_shift
from cbdom.weights.characteristics import a2_matrix, a2_scalar
from cbdom.weights.generators import matrix_rotating, power_values
from cbdom.weights.matrix_weight import MatrixWeight
from cbdom.workers import parallel_map

log = logging.getLogger(__name__)

SLOPE_TARGET = (0.85, 1.15)
DEFAULT_P_GRID = (0.5, 0.7, 0.8, 0.9, 0.95)
CHAIN_DEPTH = 1024
MAX_CHAIN_DEPTH = 4096

# (low, high) per rotating-weight parameter
SEARCH_BOUNDS = {
    "p1": (-0.95, 0.95),
    "p2": (-0.95, 0.95),
    "twist": (0.0, 4.0),
    "phase": (0.0, np.pi),
}


# ---- power weights ----

@dataclass(frozen=True)
class ChainProfile:
    """Weight masses on the shells of the chain ``I_k = [0, 2^-k)^N``, k <= depth.

    Shell ``k < depth`` is ``I_k \\ I_{k+1}`` and shell ``depth`` is the tip
    ``I_depth``.  The chain operator ``f -> sum_k <f>_{I_k} 1_{I_k}`` is
    constant on shells and sees only the shell integrals of ``f``, so its
    ``L^2(V) -> L^2(W)`` norm is the norm of a square kernel of size
    ``depth + 1``.  Masses are kept as logarithms; deep chains underflow otherwise.
    """
    dim: int
    log_w: np.ndarray
    log_v: np.ndarray

    @property
    def depth(self) -> int:
        return len(self.log_w) - 1

    def _log_volume_sums(self) -> np.ndarray:
        # log sum_{k <= n} |I_k|^-1
        step = self.dim * np.log(2.0)
        n1 = np.arange(1, self.depth + 2) * step
        return n1 + np.log(-np.expm1(-n1)) - np.log(np.expm1(step))

    def kernel(self) -> np.ndarray:
        n = np.arange(self.depth + 1)
        sums = self._log_volume_sums()[np.minimum.outer(n, n)]
        return np.exp(0.5 * self.log_w[:, None] + 0.5 * self.log_v[None, :] + sums)

    def norm(self) -> float:
        """``|W^{1/2} A V^{1/2}|`` for the chain operator ``A``."""
        return float(np.linalg.norm(self.kernel(), 2))

    def a2(self) -> float:
        """``max_k <w>_{I_k} <v>_{I_k}`` over the chain cubes."""
        tail_w = np.logaddexp.accumulate(self.log_w[::-1])[::-1]
        tail_v = np.logaddexp.accumulate(self.log_v[::-1])[::-1]
        log_volume = -np.arange(self.depth + 1) * self.dim * np.log(2.0)
        return float(np.exp(tail_w + tail_v - 2.0 * log_volume).max())


def power_chain(p: float, depth: int = CHAIN_DEPTH) -> ChainProfile:
    """Exact shell masses of ``w = |x|^p`` and ``w^-1`` on ``[0, 1)``.

    For these weights the dyadic A2 supremum sits on the chain cubes, where
    every product equals ``1 / (1 - p^2)``.
    """
    if not -1.0 < p < 1.0:
        raise DomainError(f"|x|^p is an A2 weight only for -1 < p < 1, got {p}")
    if not 1 <= depth <= MAX_CHAIN_DEPTH:
        raise DomainError(f"chain depth {depth} outside [1, {MAX_CHAIN_DEPTH}]")
    k = np.arange(depth + 1, dtype=float)
    ln2 = np.log(2.0)

    def masses(q: float) -> np.ndarray:
        # integral of x^q over each shell, q > -1
        logs = -k * (1.0 + q) * ln2 + np.log(-np.expm1(-(1.0 + q) * ln2) / (1.0 + q))
        logs[-1] = -depth * (1.0 + q) * ln2 - np.log1p(q)
        return logs

    return ChainProfile(1, masses(p), masses(-p))


def lattice_chain(W: MatrixWeight, V: MatrixWeight, depth: int | None = None) -> ChainProfile:
    """Shell masses of two scalar grid weights for the chain down to ``depth``."""
    lat = W.lattice
    depth = lat.max_level if depth is None else depth
    chain = make_simple_sparse(lat, depth)
    inside = np.zeros(lat.n_cells, dtype=int)
    for Q in chain.cubes:
        inside[lat.cell_indices(Q)] += 1
    shell = inside - 1
    h = lat.cell_volume
    w = np.bincount(shell, weights=W.scalar_values(), minlength=depth + 1) * h
    v = np.bincount(shell, weights=V.scalar_values(), minlength=depth + 1) * h
    if np.any(w <= 0) or np.any(v <= 0):
        raise DomainError("chain shells need positive weight masses")
    return ChainProfile(lat.dim, np.log(w), np.log(v))


@dataclass
class ProbeResult:
    rows: list[dict]
    slope: float | None
    depth: int
    grid_slope: float | None = None

    @property
    def within_target(self) -> bool:
        return self.slope is not None and SLOPE_TARGET[0] <= self.slope <= SLOPE_TARGET[1]

    def to_dict(self) -> dict:
        return {"rows": self.rows, "slope": self.slope, "depth": self.depth,
                "grid_slope": self.grid_slope, "slope_target": list(SLOPE_TARGET),
                "within_target": self.within_target}


def power_pair(lattice: DyadicLattice, p: float) -> tuple[MatrixWeight, MatrixWeight]:
    """``w = max(|x|, 2^-J)^p`` and its reciprocal."""
    w = power_values(lattice, p, x0=0.0)
    return MatrixWeight.scalar(lattice, w), MatrixWeight.scalar(lattice, 1.0 / w)


def fit_slope(a2: list[float], norms: list[float]) -> float | None:
    """Least-squares slope of ``log norm`` against ``log a2``."""
    x = np.log(np.asarray(a2, dtype=float))
    y = np.log(np.asarray(norms, dtype=float))
    if len(x) < 2 or np.ptp(x) == 0.0 or not np.all(np.isfinite(y)):
        return None
    return float(np.polyfit(x, y, 1)[0])


def power_weight_probe(lattice: DyadicLattice, p_grid=DEFAULT_P_GRID,
                       depth: int = CHAIN_DEPTH, T: Operator | None = None,
                       tol: float = NORM_TOL, threads: int | None = None) -> ProbeResult:
    """Norm growth against ``[w]_A2`` for ``(W, V) = (w, w^-1)``, ``w = |x|^p``.

    Without ``T`` the measured object is the scalar Lerner operator of the
    chain ``[0, 2^-k)``, k <= ``depth``, under the exact power weight; the
    depth is the same at every exponent.  The ``grid_*`` columns repeat the
    chain measurement on ``lattice`` down to its finest level, where the
    cutoff ``2^-J`` caps ``[w]_A2`` as p approaches 1.  With ``T`` the
    measured norm is ``|w^{1/2} T w^{-1/2}|`` on the lattice.
    """
    p_grid = [float(p) for p in p_grid]
    if not p_grid:
        raise DomainError("the probe needs at least one exponent")

    def one(p: float) -> dict:
        W, V = power_pair(lattice, p)
        grid_a2 = a2_scalar(W).value
        grid_norm = lattice_chain(W, V).norm()
        if T is None:
            chain = power_chain(p, depth)
            a2, norm = chain.a2(), chain.norm()
        else:
            a2, norm = grid_a2, composite_norm(T, W, V, tol=tol)
        log.info("power probe p=%.4g: [w]_A2 %.6g, norm %.6g (grid %.6g, %.6g)",
                 p, a2, norm, grid_a2, grid_norm)
        return {"p": p, "a2": a2, "norm": norm, "norm_sq": norm * norm, "ratio": norm / a2,
                "grid_a2": grid_a2, "grid_norm": grid_norm}

    rows = parallel_map(one, p_grid, threads)
    slope = fit_slope([r["a2"] for r in rows], [r["norm"] for r in rows])
    grid_slope = fit_slope([r["grid_a2"] for r in rows], [r["grid_norm"] for r in rows])
    for row in rows:
        row["slope"] = slope
    return ProbeResult(rows, slope, depth, grid_slope)


# ---- counterexample search ----

@dataclass
class SearchResult:
    alpha: float
    best_ratio: float
    params: dict[str, float]
    a2: float
    norm: float
    evaluations: int
    seed: int
    trace: list[float] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "best_ratio": self.best_ratio,
                "weight": {"kind": "matrix_rotating", **self.params},
                "a2": self.a2, "norm": self.norm, "evaluations": self.evaluations,
                "seed": self.seed, "trace": self.trace}


def rotating_ratio(T: Operator, lattice: DyadicLattice, params: dict[str, float],
                   alpha: float, tol: float = NORM_TOL) -> tuple[float, float, float]:
    """``(|W^{1/2} T W^{-1/2}| / [W]_A2^alpha, [W]_A2, norm)`` for a rotating weight."""
    W = matrix_rotating(lattice, **params)
    if not W.invertible:
        return -np.inf, np.inf, 0.0
    a2 = a2_matrix(W).value
    norm = composite_norm(T, W, W.inverse_weight(), tol=tol)
    return norm / a2 ** alpha, a2, norm


def _draw(rng: np.random.Generator) -> dict[str, float]:
    return {k: float(rng.uniform(lo, hi)) for k, (lo, hi) in SEARCH_BOUNDS.items()}


def counterexample_search(lattice: DyadicLattice, alpha: float = 1.5, budget: int = 40,
                          seed: int = 0, T: Operator | None = None, tol: float = NORM_TOL,
                          threads: int | None = None) -> SearchResult:
    """Maximize ``|W^{1/2} T W^{-1/2}| / [W]_A2^alpha`` over rotating 2 x 2 weights.

    Random restarts use a quarter of ``budget``; the rest goes to coordinate
    perturbation from the best restart with step halving.  Exploratory only:
    the result is whatever the budget found, reproducible from ``seed``.
    """
    if not 1.0 <= alpha <= 1.5:
        raise DomainError(f"exponent alpha must lie in [1, 1.5], got {alpha}")
    if budget < 1:
        raise DomainError("search budget must be positive")
    rng = np.random.default_rng(seed)
    if T is None:
        T = random_shift(lattice, 0, np.random.default_rng(seed), big=True)

    starts = [_draw(rng) for _ in range(max(1, budget // 4))]
    scored = parallel_map(lambda q: rotating_ratio(T, lattice, q, alpha, tol), starts, threads)
    best_i = max(range(len(starts)), key=lambda i: scored[i][0])
    best, (ratio, a2, norm) = starts[best_i], scored[best_i]
    trace = [float(ratio)]
    evaluations = len(starts)

    steps = {k: 0.25 * (hi - lo) for k, (lo, hi) in SEARCH_BOUNDS.items()}
    while evaluations < budget:
        improved = False
        for key, (lo, hi) in SEARCH_BOUNDS.items():
            for sign in (1.0, -1.0):
                if evaluations >= budget:
                    break
                trial = dict(best)
                trial[key] = float(np.clip(best[key] + sign * steps[key], lo, hi))
                if trial[key] == best[key]:
                    continue
                evaluations += 1
                r, t_a2, t_norm = rotating_ratio(T, lattice, trial, alpha, tol)
                if r > ratio:
                    best, ratio, a2, norm = trial, r, t_a2, t_norm
                    improved = True
                    trace.append(float(ratio))
                    log.info("search: ratio %.6g at %s", ratio, best)
        if not improved:
            steps = {k: s / 2 for k, s in steps.items()}
            if max(steps.values()) < 1e-6:
                break

    return SearchResult(alpha, float(ratio), best, float(a2), float(norm),
                        evaluations, seed, trace)
