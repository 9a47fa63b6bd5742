"""Dyadic cubes, cell-aligned boxes and finite dyadic lattices on [0,1)^N."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from itertools import product

import numpy as np

from cbdom.errors import DomainError

# Resolution caps per dimension: both give 2^14 finest cells.
MAX_LEVEL = {1: 14, 2: 7}


@dataclass(frozen=True, order=True)
class DyadicCube:
    """A dyadic cube addressed by ``level`` and an ``index`` tuple.

    The cube is ``prod_i [index_i 2^-level, (index_i + 1) 2^-level)``.
    """

    level: int
    index: tuple[int, ...]

    def __post_init__(self):
        if self.level < 0:
            raise DomainError(f"negative cube level {self.level}")
        index = tuple(int(i) for i in self.index)
        n = 1 << self.level
        if not index or any(not 0 <= i < n for i in index):
            raise DomainError(f"index {index} outside level {self.level}")
        object.__setattr__(self, "index", index)

    @property
    def dim(self) -> int:
        return len(self.index)

    @property
    def side(self) -> float:
        return 2.0 ** -self.level

    @property
    def volume(self) -> float:
        return 2.0 ** (-self.dim * self.level)

    @property
    def lower_corner(self) -> tuple[float, ...]:
        return tuple(i * self.side for i in self.index)

    @property
    def center(self) -> tuple[float, ...]:
        return tuple((i + 0.5) * self.side for i in self.index)

    def parent(self) -> DyadicCube:
        if self.level == 0:
            raise DomainError("the root cube has no parent")
        return DyadicCube(self.level - 1, tuple(i >> 1 for i in self.index))

    def ancestor(self, level: int) -> DyadicCube:
        if not 0 <= level <= self.level:
            raise DomainError(f"no ancestor of {self} at level {level}")
        shift = self.level - level
        return DyadicCube(level, tuple(i >> shift for i in self.index))

    def children(self) -> list[DyadicCube]:
        return self.descendants(1)

    def descendants(self, generations: int) -> list[DyadicCube]:
        """Return ``ch^generations`` of the cube in row-major order."""
        if generations < 0:
            raise DomainError("generations must be nonnegative")
        m = 1 << generations
        base = tuple(i * m for i in self.index)
        return [
            DyadicCube(self.level + generations,
                       tuple(b + o for b, o in zip(base, offset)))
            for offset in product(range(m), repeat=self.dim)
        ]

    def contains(self, other: DyadicCube) -> bool:
        if other.dim != self.dim or other.level < self.level:
            return False
        return other.ancestor(self.level) == self

    def box(self, max_level: int) -> GridBox:
        if self.level > max_level:
            raise DomainError(f"{self} is finer than level {max_level}")
        s = 1 << (max_level - self.level)
        lo = tuple(i * s for i in self.index)
        return GridBox(lo, tuple(a + s for a in lo), side=s)

    def __str__(self) -> str:
        return f"Q[{self.level}:{','.join(map(str, self.index))}]"


@dataclass(frozen=True)
class GridBox:
    """A half-open box of finest cells, ``lo <= cell < hi`` per axis.

    ``side`` is the nominal side length in cells; for a clipped enlarged
    cube it stays the side of the unclipped cube.
    """

    lo: tuple[int, ...]
    hi: tuple[int, ...]
    side: int = 0

    def __post_init__(self):
        lo = tuple(int(a) for a in self.lo)
        hi = tuple(int(b) for b in self.hi)
        if len(lo) != len(hi) or any(b <= a for a, b in zip(lo, hi)):
            raise DomainError(f"empty or malformed box {lo}..{hi}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        if not self.side:
            object.__setattr__(self, "side", max(b - a for a, b in zip(lo, hi)))

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def n_cells(self) -> int:
        n = 1
        for a, b in zip(self.lo, self.hi):
            n *= b - a
        return n

    @property
    def slices(self) -> tuple[slice, ...]:
        return tuple(slice(a, b) for a, b in zip(self.lo, self.hi))

    def contains(self, other: GridBox) -> bool:
        return all(a <= c and d <= b for a, b, c, d in
                   zip(self.lo, self.hi, other.lo, other.hi))

    def intersects(self, other: GridBox) -> bool:
        return all(max(a, c) < min(b, d) for a, b, c, d in
                   zip(self.lo, self.hi, other.lo, other.hi))

    def overlap_cells(self, other: GridBox) -> int:
        n = 1
        for a, b, c, d in zip(self.lo, self.hi, other.lo, other.hi):
            n *= max(0, min(b, d) - max(a, c))
        return n


@dataclass(frozen=True)
class DyadicLattice:
    """Dyadic cubes of [0,1)^N down to level ``max_level``.

    With ``separation=(k, r)`` only the levels ``k + (r+1) j`` are members
    (the coarsened filtration of an r-separated shift).
    """

    dim: int
    max_level: int
    separation: tuple[int, int] | None = None

    def __post_init__(self):
        if self.dim not in MAX_LEVEL:
            raise DomainError(f"dimension must be 1 or 2, got {self.dim}")
        if not 0 <= self.max_level <= MAX_LEVEL[self.dim]:
            raise DomainError(
                f"level {self.max_level} outside [0, {MAX_LEVEL[self.dim]}] "
                f"for N={self.dim}")
        if self.separation is not None:
            k, r = self.separation
            if r < 0 or not 0 <= k <= r:
                raise DomainError(f"invalid separation class {self.separation}")
            object.__setattr__(self, "separation", (int(k), int(r)))

    @property
    def n_side(self) -> int:
        return 1 << self.max_level

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n_side,) * self.dim

    @property
    def n_cells(self) -> int:
        return 1 << (self.dim * self.max_level)

    @property
    def cell_volume(self) -> float:
        return 2.0 ** (-self.dim * self.max_level)

    @property
    def root(self) -> DyadicCube:
        return DyadicCube(0, (0,) * self.dim)

    @cached_property
    def member_levels(self) -> tuple[int, ...]:
        if self.separation is None:
            return tuple(range(self.max_level + 1))
        k, r = self.separation
        return tuple(range(k, self.max_level + 1, r + 1))

    def levels(self) -> list[int]:
        return list(self.member_levels)

    def full(self) -> DyadicLattice:
        """The same grid without a separation class."""
        return DyadicLattice(self.dim, self.max_level)

    def sublattice(self, k: int, r: int) -> DyadicLattice:
        return DyadicLattice(self.dim, self.max_level, (k, r))

    def cubes(self, level: int) -> list[DyadicCube]:
        if level not in self.member_levels:
            return []
        return [DyadicCube(level, idx)
                for idx in product(range(1 << level), repeat=self.dim)]

    def all_cubes(self) -> list[DyadicCube]:
        return [Q for level in self.member_levels for Q in self.cubes(level)]

    def check_cube(self, Q: DyadicCube) -> None:
        if Q.dim != self.dim:
            raise DomainError(f"{Q} has dimension {Q.dim}, lattice has {self.dim}")
        if Q.level > self.max_level:
            raise DomainError(f"{Q} is finer than level {self.max_level}")
        if Q.level not in self.member_levels:
            raise DomainError(f"{Q} is not in the sublattice {self.separation}")

    def check_region(self, region: DyadicCube | GridBox) -> GridBox:
        """Validate a cube or box and return it as a box of cells."""
        if isinstance(region, DyadicCube):
            self.check_cube(region)
            return region.box(self.max_level)
        if region.dim != self.dim or any(a < 0 for a in region.lo) or any(
                b > self.n_side for b in region.hi):
            raise DomainError(f"box {region} outside the grid")
        return region

    def cell_indices(self, region: DyadicCube | GridBox) -> np.ndarray:
        """Flat (row-major) indices of the finest cells inside ``region``."""
        box = self.check_region(region)
        grid = np.arange(self.n_cells).reshape(self.shape)
        return grid[box.slices].ravel()

    def cell_cube(self, cell: int, level: int | None = None) -> DyadicCube:
        """The cube of ``level`` (finest by default) containing flat ``cell``."""
        coords = np.unravel_index(int(cell), self.shape)
        finest = DyadicCube(self.max_level, tuple(int(c) for c in coords))
        return finest if level is None else finest.ancestor(level)

    def cell_centers(self) -> np.ndarray:
        """Cell centers as an ``(n_cells, N)`` array."""
        axis = (np.arange(self.n_side) + 0.5) / self.n_side
        mesh = np.meshgrid(*([axis] * self.dim), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def enlarge(self, Q: DyadicCube, factor: int = 3) -> GridBox:
        """The concentric ``factor``-fold enlargement of ``Q``, clipped to [0,1)^N."""
        if factor < 1 or factor % 2 == 0:
            raise DomainError("enlargement factor must be an odd positive integer")
        box = Q.box(self.max_level)
        pad = (factor - 1) // 2 * box.side
        lo = tuple(max(0, a - pad) for a in box.lo)
        hi = tuple(min(self.n_side, b + pad) for b in box.hi)
        return GridBox(lo, hi, side=factor * box.side)
