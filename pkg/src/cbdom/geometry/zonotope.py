"""Zonotopes in generator form and convex body averages of grid functions."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np
from scipy.optimize import lsq_linear

from cbdom.dyadic.functions import GridFunction
from cbdom.dyadic.lattice import DyadicCube, GridBox
from cbdom.errors import DomainError

MEMBERSHIP_TOL = 1e-9
MEMBERSHIP_MAX_ITER = 20000

INSIDE = "inside"
OUTSIDE = "outside"
INDETERMINATE = "indeterminate"


@dataclass(frozen=True)
class MembershipCertificate:
    """Outcome of a membership test.

    ``coefficients`` are the multipliers ``t`` in ``[-1, 1]^m`` of the closest
    point found; ``residual`` is its distance to the query point.
    """

    status: str
    residual: float
    coefficients: np.ndarray

    @property
    def inside(self) -> bool:
        return self.status == INSIDE


@dataclass(frozen=True, eq=False)
class Zonotope:
    """``{sum_i t_i g_i : t_i in [-1, 1]}`` for the rows ``g_i`` of ``generators``."""

    generators: np.ndarray

    def __post_init__(self):
        g = np.array(self.generators, dtype=float)
        if g.ndim != 2:
            raise DomainError(f"generators must be an (m, d) array, got {g.shape}")
        if not np.all(np.isfinite(g)):
            raise DomainError("zonotope generators must be finite")
        g.setflags(write=False)
        object.__setattr__(self, "generators", g)

    @classmethod
    def zero(cls, d: int) -> Zonotope:
        return cls(np.zeros((0, d)))

    @classmethod
    def segment(cls, v) -> Zonotope:
        return cls(np.atleast_2d(np.asarray(v, dtype=float)))

    @property
    def d(self) -> int:
        return self.generators.shape[1]

    @property
    def m(self) -> int:
        return self.generators.shape[0]

    def is_zero(self) -> bool:
        return not np.any(self.generators)

    def support(self, directions) -> np.ndarray | float:
        """``h(e) = sum_i |g_i . e|`` for one direction or a ``(k, d)`` stack."""
        e = np.asarray(directions, dtype=float)
        out = np.abs(e @ self.generators.T).sum(axis=-1)
        return float(out) if out.ndim == 0 else out

    def support_point(self, e) -> np.ndarray:
        """A point of the body attaining ``h(e)``."""
        return np.sign(self.generators @ np.asarray(e, dtype=float)) @ self.generators

    def scale(self, c: float) -> Zonotope:
        return Zonotope(self.generators * abs(float(c)))

    def minkowski_sum(self, other: Zonotope) -> Zonotope:
        if other.d != self.d:
            raise DomainError(f"cannot add zonotopes in R^{self.d} and R^{other.d}")
        return Zonotope(np.vstack([self.generators, other.generators]))

    __add__ = minkowski_sum

    def sign_points(self) -> np.ndarray:
        """All ``sum_i s_i g_i`` with ``s_i = +-1``; the vertices are among them."""
        if self.m > 12:
            raise DomainError(f"vertex enumeration is limited to 12 generators, got {self.m}")
        if self.m == 0:
            return np.zeros((1, self.d))
        signs = np.array(list(product((-1.0, 1.0), repeat=self.m)))
        return signs @ self.generators

    def gram(self) -> np.ndarray:
        return self.generators.T @ self.generators

    def contains(self, x, tol: float = MEMBERSHIP_TOL,
                 max_iter: int = MEMBERSHIP_MAX_ITER) -> MembershipCertificate:
        """Test ``x`` in the body by box-constrained least squares.

        Inside iff the distance of ``x`` to the body is at most
        ``tol * (1 + |x|)``.  The solver runs at most ``max_iter`` iterations
        (20000 by default); an unconverged solve that does not reach the
        tolerance is reported as indeterminate.
        """
        x = np.asarray(x, dtype=float)
        if x.shape != (self.d,):
            raise DomainError(f"point of shape {x.shape} is not in R^{self.d}")
        bound = tol * (1.0 + float(np.linalg.norm(x)))
        t = np.zeros(self.m)
        active = np.flatnonzero(np.any(self.generators != 0.0, axis=1))
        if active.size == 0 or not np.any(x):
            residual = float(np.linalg.norm(x))
            return MembershipCertificate(
                INSIDE if residual <= bound else OUTSIDE, residual, t)
        G = self.generators[active]
        method = "bvls" if active.size <= 256 else "trf"
        res = lsq_linear(G.T, x, bounds=(-1.0, 1.0), method=method,
                         max_iter=max_iter, tol=1e-12)
        if not res.success and method == "bvls":
            res = lsq_linear(G.T, x, bounds=(-1.0, 1.0), method="trf",
                             max_iter=max_iter, tol=1e-12)
        coef = np.clip(res.x, -1.0, 1.0)
        t[active] = coef
        residual = float(np.linalg.norm(G.T @ coef - x))
        if residual <= bound:
            status = INSIDE
        elif res.status == 0:
            status = INDETERMINATE
        else:
            status = OUTSIDE
        return MembershipCertificate(status, residual, t)

    def separation(self, x, directions: np.ndarray) -> tuple[float, np.ndarray]:
        """Largest ``x . e - h(e)`` over ``directions`` and the maximizing direction."""
        e = np.asarray(directions, dtype=float)
        gaps = e @ np.asarray(x, dtype=float) - self.support(e)
        i = int(np.argmax(gaps))
        return float(gaps[i]), e[i]


def body_average(f: GridFunction, region: DyadicCube | GridBox) -> Zonotope:
    """``<<f>>_region``: the set of all ``<phi f>_region`` with ``|phi| <= 1``.

    One generator ``(|c| / |region|) f(c)`` per finest cell c in the region.
    """
    lat = f.lattice
    box = lat.check_region(region)
    block = f.grid[box.slices].reshape(-1, f.d)
    return Zonotope(block / box.n_cells)
