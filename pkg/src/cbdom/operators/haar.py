"""Generalized big Haar shifts in block form.

A shift of complexity r stores, for every active level, one block matrix
per cube Q of that level: ``K_Q[a, b]`` is the kernel value on
``S_a x S_b`` for ``S_a, S_b`` in ``ch^{r+1} Q`` (row-major order).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from cbdom.dyadic.functions import (
    GridFunction,
    expand,
    group_children,
    level_averages,
    ungroup_children,
)
from cbdom.dyadic.lattice import DyadicCube, DyadicLattice
from cbdom.errors import DomainError
from cbdom.operators.base import Operator

log = logging.getLogger(__name__)


@dataclass(eq=False)
class HaarShift(Operator):
    lattice: DyadicLattice
    complexity: int
    kernels: dict[int, np.ndarray]
    big: bool = False
    kind: str = "haar_shift"
    notes: list[str] = field(default_factory=list)

    def __post_init__(self):
        if self.complexity < 0:
            raise DomainError("complexity must be nonnegative")
        self.lattice = self.lattice.full()
        N, J, r = self.lattice.dim, self.lattice.max_level, self.complexity
        k = self.block_size
        clean = {}
        for level, K in self.kernels.items():
            K = np.asarray(K, dtype=float)
            if level < 0 or level + r + 1 > J:
                raise DomainError(f"no room for a complexity-{r} block at level {level}")
            if K.shape != (1 << (N * level), k, k):
                raise DomainError(f"kernel blocks at level {level} have shape {K.shape}")
            if np.any(K):
                clean[int(level)] = K
        self.kernels = dict(sorted(clean.items()))

    @property
    def block_size(self) -> int:
        return 1 << (self.lattice.dim * (self.complexity + 1))

    @property
    def active_levels(self) -> list[int]:
        return list(self.kernels)

    def is_zero(self) -> bool:
        return not self.kernels

    def separation_class(self) -> int | None:
        """The class k if every active level is ``k mod (r+1)``, else None."""
        classes = {level % (self.complexity + 1) for level in self.kernels}
        if len(classes) > 1:
            return None
        return classes.pop() if classes else 0

    def sublattice(self) -> DyadicLattice:
        k = self.separation_class()
        if k is None:
            raise DomainError("shift is not r-separated; split it with separate() first")
        return self.lattice.sublattice(k, self.complexity)

    # ---- application ----

    def level_term(self, f: GridFunction, level: int, adjoint: bool = False) -> np.ndarray:
        """``sum_{level(Q)=level} T_Q f`` as a finest-level grid array."""
        lat = self.lattice
        N, J, g = lat.dim, lat.max_level, self.complexity + 1
        K = self.kernels[level]
        if adjoint:
            K = np.swapaxes(K, 1, 2)
        child = level_averages(f, lat, level + g)
        grouped = group_children(child, N, level, g)
        vol = 2.0 ** (-N * (level + g))
        out = np.einsum("qab,qbd->qad", K, grouped) * vol
        return expand(ungroup_children(out, N, level, g), N, J, level + g)

    def level_terms(self, f: GridFunction, adjoint: bool = False) -> dict[int, np.ndarray]:
        self.check_function(f)
        return {level: self.level_term(f, level, adjoint) for level in self.kernels}

    def _sum(self, f: GridFunction, adjoint: bool) -> GridFunction:
        self.check_function(f)
        out = np.zeros(self.lattice.shape + (f.d,))
        for level in self.kernels:
            out += self.level_term(f, level, adjoint)
        return GridFunction(self.lattice, out.reshape(-1, f.d))

    def apply(self, f: GridFunction) -> GridFunction:
        return self._sum(f, adjoint=False)

    def adjoint_apply(self, f: GridFunction) -> GridFunction:
        return self._sum(f, adjoint=True)

    def adjoint(self) -> HaarShift:
        return HaarShift(self.lattice, self.complexity,
                         {lv: np.swapaxes(K, 1, 2).copy() for lv, K in self.kernels.items()},
                         self.big, self.kind + "_adjoint")

    # ---- kernel invariants ----

    def kernel_report(self, tol: float = 1e-12) -> dict:
        """Sup-norm bound and (for big shifts) zero row/column sums, per level."""
        worst_bound, worst_sum = 0.0, 0.0
        for level, K in self.kernels.items():
            vol = 2.0 ** (-self.lattice.dim * level)
            worst_bound = max(worst_bound, float(np.abs(K).max()) * vol)
            sums = np.concatenate([np.abs(K.sum(axis=2)).ravel(),
                                   np.abs(K.sum(axis=1)).ravel()])
            worst_sum = max(worst_sum, float(sums.max()) * vol)
        return {
            "bound_ratio": worst_bound,
            "bound_ok": worst_bound <= 1.0 + tol,
            "zero_sums": worst_sum <= tol,
            "big_ok": (not self.big) or worst_sum <= tol,
        }

    def restricted(self, masks: dict[int, np.ndarray], kind: str | None = None) -> HaarShift:
        """Keep ``T_Q`` where ``masks[level(Q)]`` (flat, per cube) is True."""
        kernels = {}
        for level, K in self.kernels.items():
            keep = masks.get(level)
            if keep is None:
                continue
            kernels[level] = K * np.asarray(keep, dtype=float)[:, None, None]
        return HaarShift(self.lattice, self.complexity, kernels, self.big,
                         kind or self.kind)


# ---- constructions ----

def random_shift(lattice: DyadicLattice, complexity: int, rng: np.random.Generator,
                 big: bool = True, levels: list[int] | None = None) -> HaarShift:
    """Blocks uniform in [-1, 1], centered for big shifts, scaled to ``max|K_Q| = 1/|Q|``."""
    N, J = lattice.dim, lattice.max_level
    k = 1 << (N * (complexity + 1))
    if levels is None:
        levels = list(range(0, J - complexity))
    kernels = {}
    for level in levels:
        n_q = 1 << (N * level)
        K = rng.uniform(-1.0, 1.0, size=(n_q, k, k))
        if big:
            K = K - K.mean(axis=2, keepdims=True) - K.mean(axis=1, keepdims=True) \
                + K.mean(axis=(1, 2), keepdims=True)
        peak = np.abs(K).max(axis=(1, 2), keepdims=True)
        peak[peak == 0] = 1.0
        kernels[level] = K / peak * 2.0 ** (N * level)
    kind = "big_haar_shift" if big else "haar_shift"
    return HaarShift(lattice, complexity, kernels, big, kind)


def martingale_transform(lattice: DyadicLattice, rng: np.random.Generator,
                         complexity: int = 0, signs: dict[int, np.ndarray] | None = None
                         ) -> HaarShift:
    """``sigma_Q (k delta_ab - 1) / ((k-1)|Q|)`` blocks with random signs ``sigma_Q``."""
    N, J = lattice.dim, lattice.max_level
    k = 1 << (N * (complexity + 1))
    base = (k * np.eye(k) - 1.0) / (k - 1)
    kernels = {}
    for level in range(0, J - complexity):
        n_q = 1 << (N * level)
        sigma = signs[level] if signs and level in signs else rng.choice((-1.0, 1.0), size=n_q)
        kernels[level] = sigma[:, None, None] * base * 2.0 ** (N * level)
    return HaarShift(lattice, complexity, kernels, True, "martingale_transform")


def separate(T: HaarShift) -> list[HaarShift]:
    """Split into the r+1 r-separated pieces (levels by residue mod r+1)."""
    step = T.complexity + 1
    pieces = []
    for k in range(step):
        kernels = {lv: K for lv, K in T.kernels.items() if lv % step == k}
        pieces.append(HaarShift(T.lattice, T.complexity, kernels, T.big, T.kind))
    return pieces


def _check_disjoint(cubes: list[DyadicCube]) -> None:
    ordered = sorted(cubes, key=lambda Q: Q.level)
    for i, Q in enumerate(ordered):
        for R in ordered[i + 1:]:
            if Q.contains(R):
                raise DomainError(f"truncation family overlaps: {Q} contains {R}")


def truncate_shift(T: HaarShift, G: list[DyadicCube], mode: str = "inside") -> HaarShift:
    """``inside``: keep T_Q for Q inside some R in G; ``outside``: keep the rest."""
    if mode not in ("inside", "outside"):
        raise DomainError(f"unknown truncation mode {mode!r}")
    _check_disjoint(G)
    N = T.lattice.dim
    masks = {}
    for level in T.kernels:
        inside = np.zeros((1 << level,) * N, dtype=bool)
        for R in G:
            if R.level > level:
                continue
            s = 1 << (level - R.level)
            inside[tuple(slice(i * s, (i + 1) * s) for i in R.index)] = True
        masks[level] = (inside if mode == "inside" else ~inside).ravel()
    return T.restricted(masks, f"{T.kind}_{mode}")
