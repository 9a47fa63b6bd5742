"""Per-cell positive semidefinite matrix weights."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from cbdom.dyadic.functions import GridFunction, level_averages
from cbdom.dyadic.lattice import DyadicLattice
from cbdom.errors import DomainError, NotInvertibleError, NotPSDError
from cbdom.geometry.smallmat import (
    PSD_TOL,
    mat_inv,
    mat_inv_sqrt,
    mat_sqrt,
    symmetrize,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class MatrixWeight:
    """A PSD d x d matrix per finest cell, ``matrices`` of shape ``(n_cells, d, d)``.

    ``invertible`` defaults to whether every cell's smallest eigenvalue
    exceeds ``floor``; passing ``invertible=True`` turns that into a
    requirement.  Non-invertible weights fall back to pseudo-inverses.
    """

    lattice: DyadicLattice
    matrices: np.ndarray
    floor: float = 0.0
    invertible: bool | None = None

    def __post_init__(self):
        m = np.asarray(self.matrices, dtype=float)
        if m.ndim == 1:
            m = m[:, None, None]
        m = symmetrize(m)
        n = self.lattice.n_cells
        if m.ndim != 3 or m.shape[0] != n or m.shape[1] != m.shape[2] or \
                not 1 <= m.shape[1] <= 4:
            raise DomainError(f"weight of shape {m.shape} does not fit {n} cells")
        eig = np.linalg.eigvalsh(m)
        top = np.maximum(eig[:, -1], 0.0)
        bad = eig[:, 0] < -PSD_TOL * np.maximum(top, 1e-300)
        if np.any(bad):
            cell = int(np.argmax(bad))
            raise NotPSDError(
                f"weight is not PSD at {self.lattice.cell_cube(cell)}: "
                f"eigenvalue {eig[cell, 0]:.3e}")
        low = float(eig[:, 0].min())
        invertible = low > max(self.floor, PSD_TOL * float(top.max(initial=0.0)))
        if self.invertible and not invertible:
            raise NotInvertibleError(
                f"smallest eigenvalue {low:.3e} is below the floor {self.floor:.3e}")
        m.setflags(write=False)
        object.__setattr__(self, "matrices", m)
        object.__setattr__(self, "invertible", invertible)

    @classmethod
    def scalar(cls, lattice: DyadicLattice, w, **kw) -> MatrixWeight:
        w = np.asarray(w.scalar if isinstance(w, GridFunction) else w, dtype=float)
        return cls(lattice, w.reshape(-1, 1, 1), **kw)

    @classmethod
    def identity(cls, lattice: DyadicLattice, d: int) -> MatrixWeight:
        return cls(lattice, np.broadcast_to(np.eye(d), (lattice.n_cells, d, d)))

    @property
    def d(self) -> int:
        return self.matrices.shape[1]

    @property
    def grid(self) -> np.ndarray:
        return self.matrices.reshape(self.lattice.shape + (self.d, self.d))

    @cached_property
    def sqrt(self) -> np.ndarray:
        return mat_sqrt(self.matrices)

    @cached_property
    def inverse(self) -> np.ndarray:
        if not self.invertible:
            log.warning("using the pseudo-inverse of a singular weight")
        return mat_inv(self.matrices, pseudo=not self.invertible)

    @cached_property
    def inv_sqrt(self) -> np.ndarray:
        return mat_inv_sqrt(self.matrices, pseudo=not self.invertible)

    def inverse_weight(self) -> MatrixWeight:
        return MatrixWeight(self.lattice, self.inverse)

    def scaled(self, c: float) -> MatrixWeight:
        return MatrixWeight(self.lattice, self.matrices * float(c), self.floor * float(c))

    def scalar_values(self) -> np.ndarray:
        if self.d != 1:
            raise DomainError(f"expected a scalar weight, got d={self.d}")
        return self.matrices[:, 0, 0]

    def averages(self, level: int) -> np.ndarray:
        """``<W>_Q`` for every cube of ``level``, flattened to ``(n_Q, d, d)``."""
        avg = level_averages(self.grid, self.lattice, level)
        return avg.reshape(-1, self.d, self.d)

    def apply(self, f: GridFunction, power: str = "one") -> GridFunction:
        """``W(x) f(x)``; ``power`` in {one, sqrt, inverse, inv_sqrt}."""
        table = {"one": self.matrices, "sqrt": self.sqrt,
                 "inverse": self.inverse, "inv_sqrt": self.inv_sqrt}
        if power not in table:
            raise DomainError(f"unknown weight power {power!r}")
        if f.d != self.d:
            raise DomainError(f"weight has d={self.d}, function has d={f.d}")
        return GridFunction(f.lattice, np.einsum("nij,nj->ni", table[power], f.values))
