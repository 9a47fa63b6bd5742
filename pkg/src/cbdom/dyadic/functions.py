"""Grid functions and the dyadic averaging machinery.

Everything here works per level: the averages of all cubes of one level come
out of a single reshape and sum, and cube-indexed level arrays have shape
``(2^level,)*N + tail`` in row-major cube order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from cbdom.dyadic.lattice import DyadicCube, DyadicLattice, GridBox
from cbdom.errors import DomainError


# ---- Level array helpers ----

def block_sums(grid: np.ndarray, dim: int, max_level: int, level: int) -> np.ndarray:
    """Sum a finest-level array over every cube of ``level``.

    ``grid`` has shape ``(2^J,)*dim + tail``; the result has shape
    ``(2^level,)*dim + tail``.
    """
    n = 1 << level
    s = 1 << (max_level - level)
    tail = grid.shape[dim:]
    if dim == 1:
        return grid.reshape((n, s) + tail).sum(axis=1)
    return grid.reshape((n, s, n, s) + tail).sum(axis=(1, 3))


def expand(level_array: np.ndarray, dim: int, max_level: int, level: int) -> np.ndarray:
    """Broadcast a per-cube array of ``level`` back onto the finest cells."""
    s = 1 << (max_level - level)
    out = level_array
    for axis in range(dim):
        out = np.repeat(out, s, axis=axis)
    return out


def group_children(level_array: np.ndarray, dim: int, level: int,
                   generations: int) -> np.ndarray:
    """Regroup an array on level ``level + generations`` by ancestor at ``level``.

    Returns ``(2^(N level), 2^(N generations)) + tail`` where the second axis
    runs over ``ch^generations Q`` in row-major order.
    """
    n = 1 << level
    m = 1 << generations
    tail = level_array.shape[dim:]
    if dim == 1:
        return level_array.reshape((n, m) + tail)
    a = level_array.reshape((n, m, n, m) + tail)
    a = np.moveaxis(a, 2, 1)
    return a.reshape((n * n, m * m) + tail)


def ungroup_children(grouped: np.ndarray, dim: int, level: int,
                     generations: int) -> np.ndarray:
    """Inverse of :func:`group_children`."""
    n = 1 << level
    m = 1 << generations
    tail = grouped.shape[2:]
    if dim == 1:
        return grouped.reshape((n * m,) + tail)
    a = grouped.reshape((n, n, m, m) + tail)
    a = np.moveaxis(a, 1, 2)
    return a.reshape((n * m, n * m) + tail)


def level_volume_ratio(dim: int, max_level: int, level: int) -> float:
    """``|c| / |Q|`` for a finest cell c and a cube Q of ``level`` (exact)."""
    return 2.0 ** (-dim * (max_level - level))


# ---- Grid functions ----

@dataclass(frozen=True, eq=False)
class GridFunction:
    """An R^d valued function, constant on each finest cell of ``lattice``.

    ``values`` has shape ``(n_cells, d)`` with cells in row-major order.
    """

    lattice: DyadicLattice
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        if v.ndim != 2 or v.shape[0] != self.lattice.n_cells or v.shape[1] < 1:
            raise DomainError(
                f"values of shape {v.shape} do not fit {self.lattice.n_cells} cells")
        if not np.all(np.isfinite(v)):
            raise DomainError("grid function has non-finite entries")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def zeros(cls, lattice: DyadicLattice, d: int = 1) -> GridFunction:
        return cls(lattice, np.zeros((lattice.n_cells, d)))

    @classmethod
    def constant(cls, lattice: DyadicLattice, v) -> GridFunction:
        v = np.atleast_1d(np.asarray(v, dtype=float))
        return cls(lattice, np.tile(v, (lattice.n_cells, 1)))

    @classmethod
    def indicator(cls, lattice: DyadicLattice,
                  region: DyadicCube | GridBox) -> GridFunction:
        vals = np.zeros(lattice.n_cells)
        vals[lattice.cell_indices(region)] = 1.0
        return cls(lattice, vals)

    @property
    def d(self) -> int:
        return self.values.shape[1]

    @property
    def grid(self) -> np.ndarray:
        """Values reshaped to ``lattice.shape + (d,)``."""
        return self.values.reshape(self.lattice.shape + (self.d,))

    @property
    def scalar(self) -> np.ndarray:
        self.require_scalar()
        return self.values[:, 0]

    def require_scalar(self) -> None:
        if self.d != 1:
            raise DomainError(f"expected a scalar function, got d={self.d}")

    def _other(self, other: GridFunction) -> np.ndarray:
        if other.lattice.dim != self.lattice.dim or \
                other.lattice.max_level != self.lattice.max_level:
            raise DomainError("grid functions live on different grids")
        if other.d != self.d:
            raise DomainError(f"dimension mismatch {self.d} vs {other.d}")
        return other.values

    def __add__(self, other: GridFunction) -> GridFunction:
        return GridFunction(self.lattice, self.values + self._other(other))

    def __sub__(self, other: GridFunction) -> GridFunction:
        return GridFunction(self.lattice, self.values - self._other(other))

    def __neg__(self) -> GridFunction:
        return GridFunction(self.lattice, -self.values)

    def __mul__(self, c: float) -> GridFunction:
        return GridFunction(self.lattice, self.values * float(c))

    __rmul__ = __mul__

    def multiply(self, phi: np.ndarray) -> GridFunction:
        """Pointwise product with a scalar per-cell array."""
        return GridFunction(self.lattice, self.values * np.asarray(phi, float)[:, None])

    def component(self, e: np.ndarray) -> GridFunction:
        """The scalar function ``x -> f(x) . e``."""
        return GridFunction(self.lattice, self.values @ np.asarray(e, dtype=float))

    def pointwise_norm(self) -> GridFunction:
        return GridFunction(self.lattice, np.linalg.norm(self.values, axis=1))

    def restrict(self, region: DyadicCube | GridBox) -> GridFunction:
        """``f * 1_region``."""
        mask = np.zeros(self.lattice.n_cells)
        mask[self.lattice.cell_indices(region)] = 1.0
        return self.multiply(mask)

    def l2_norm(self) -> float:
        return float(np.sqrt(np.sum(self.values ** 2) * self.lattice.cell_volume))

    def sup_norm(self) -> float:
        return float(np.max(np.linalg.norm(self.values, axis=1), initial=0.0))

    def is_zero(self) -> bool:
        return not np.any(self.values)


# ---- Averages ----

def average(f: GridFunction, region: DyadicCube | GridBox) -> np.ndarray:
    """Average of ``f`` over a cube of its lattice (or a cell-aligned box)."""
    box = f.lattice.check_region(region)
    block = f.grid[box.slices].reshape(-1, f.d)
    if isinstance(region, DyadicCube):
        ratio = level_volume_ratio(f.lattice.dim, f.lattice.max_level, region.level)
        return block.sum(axis=0) * ratio
    return block.sum(axis=0) / box.n_cells


def level_averages(f: GridFunction | np.ndarray, lattice: DyadicLattice,
                   level: int) -> np.ndarray:
    """Averages over every cube of ``level``: shape ``(2^level,)*N + (d,)``.

    ``f`` may also be a bare finest-level grid array with any trailing shape.
    """
    grid = f.grid if isinstance(f, GridFunction) else f
    sums = block_sums(grid, lattice.dim, lattice.max_level, level)
    return sums * level_volume_ratio(lattice.dim, lattice.max_level, level)


def cell_level_averages(f: GridFunction, level: int) -> np.ndarray:
    """``<f>_{Q(x)}`` for the cube Q(x) of ``level`` containing each cell, as ``(n_cells, d)``."""
    lat = f.lattice
    avg = level_averages(f, lat, level)
    return expand(avg, lat.dim, lat.max_level, level).reshape(lat.n_cells, f.d)


def martingale_difference(b: GridFunction, R: DyadicCube) -> GridFunction:
    """``Delta_R b``: child averages minus the average over R, supported on R."""
    lat = b.lattice
    lat.full().check_cube(R)
    if R.level >= lat.max_level:
        raise DomainError(f"{R} is at the finest level and has no children")
    out = np.zeros(lat.shape + (b.d,))
    mean = average(b, R)
    for child in R.children():
        box = child.box(lat.max_level)
        out[box.slices] = average(b, child) - mean
    return GridFunction(lat, out.reshape(lat.n_cells, b.d))


def martingale_differences(b: GridFunction, level: int) -> np.ndarray:
    """All ``Delta_R b`` for R on ``level`` at once, as a child-level array.

    The result has shape ``(2^(level+1),)*N + (d,)``: the value of
    ``Delta_R b`` on each child of each R.
    """
    lat = b.lattice
    if level >= lat.max_level:
        raise DomainError("no martingale differences at the finest level")
    child_avg = level_averages(b, lat, level + 1)
    parent_avg = level_averages(b, lat, level)
    return child_avg - expand(parent_avg, lat.dim, level + 1, level)


# ---- Maximal functions ----

def maximal_profile(w: GridFunction | np.ndarray, lattice: DyadicLattice,
                    top: int = 0) -> list[np.ndarray]:
    """Suffix maxima of ``|<w>_R|`` over levels, for a scalar function.

    Entry ``l - top`` is the finest-level array
    ``S_l(x) = max_{l <= level(R) <= J, R contains x} |<w>_R|``, so that
    ``M_Q w = S_{level(Q)}`` on Q.
    """
    if isinstance(w, GridFunction):
        w.require_scalar()
        grid = w.grid[..., 0]
    else:
        grid = np.asarray(w, dtype=float).reshape(lattice.shape)
    J, N = lattice.max_level, lattice.dim
    running = np.abs(grid)
    profile = [running]
    for level in range(J - 1, top - 1, -1):
        avg = np.abs(level_averages(grid, lattice, level))
        running = np.maximum(running, expand(avg, N, J, level))
        profile.append(running)
    profile.reverse()
    return profile


def maximal_function(f: GridFunction, Q: DyadicCube) -> GridFunction:
    """``M_Q f``: the largest ``|<f>_R|`` over dyadic R in Q containing x; zero off Q."""
    f.require_scalar()
    lat = f.lattice
    lat.full().check_cube(Q)
    box = Q.box(lat.max_level)
    local = DyadicLattice(lat.dim, lat.max_level - Q.level)
    sub = f.grid[box.slices][..., 0]
    top = maximal_profile(sub, local)[0]
    out = np.zeros(lat.shape)
    out[box.slices] = top
    return GridFunction(lat, out.ravel())
