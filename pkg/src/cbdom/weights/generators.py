"""Built-in weight families."""

from __future__ import annotations

import numpy as np
from scipy.stats import special_ortho_group

from cbdom.dyadic.lattice import DyadicLattice
from cbdom.errors import DomainError
from cbdom.weights.matrix_weight import MatrixWeight


def _radius(lattice: DyadicLattice, x0) -> np.ndarray:
    centers = lattice.cell_centers()
    x0 = np.zeros(lattice.dim) if x0 is None else np.broadcast_to(
        np.asarray(x0, dtype=float), (lattice.dim,))
    r = np.linalg.norm(centers - x0, axis=1)
    return np.maximum(r, 2.0 ** -lattice.max_level)


def power_values(lattice: DyadicLattice, p: float, x0=None) -> np.ndarray:
    """``max(|x - x0|, 2^-J)^p`` at the cell centers."""
    return _radius(lattice, x0) ** p


def identity(lattice: DyadicLattice, d: int = 1) -> MatrixWeight:
    return MatrixWeight.identity(lattice, d)


def scalar_power(lattice: DyadicLattice, p: float, x0=None, d: int = 1) -> MatrixWeight:
    """The power weight, times the identity when ``d > 1``."""
    w = power_values(lattice, p, x0)
    return MatrixWeight(lattice, w[:, None, None] * np.eye(d))


def rotation(theta: np.ndarray) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.stack([np.stack([c, -s], -1), np.stack([s, c], -1)], -2)


def matrix_rotating(lattice: DyadicLattice, p1: float, p2: float,
                    twist: float = 1.0, phase: float = 0.0, x0=None) -> MatrixWeight:
    """``R(theta(x)) diag(w1, w2) R(theta(x))^T`` with power eigenvalues.

    ``theta(x) = twist * pi * x_1 + phase`` turns the eigenvectors across the
    cube while the eigenvalues behave like ``|x - x0|^p1`` and ``|x - x0|^p2``.
    """
    r = _radius(lattice, x0)
    theta = twist * np.pi * lattice.cell_centers()[:, 0] + phase
    R = rotation(theta)
    D = np.zeros((lattice.n_cells, 2, 2))
    D[:, 0, 0] = r ** p1
    D[:, 1, 1] = r ** p2
    return MatrixWeight(lattice, R @ D @ np.swapaxes(R, -1, -2))


def random_log_bounded(lattice: DyadicLattice, d: int, rng: np.random.Generator,
                       bound: float = 1.0) -> MatrixWeight:
    """``O(x) diag(exp(u(x))) O(x)^T`` with ``|u| <= bound`` and random rotations O."""
    if bound < 0:
        raise DomainError("log bound must be nonnegative")
    n = lattice.n_cells
    u = rng.uniform(-bound, bound, size=(n, d))
    if d == 1:
        return MatrixWeight(lattice, np.exp(u)[:, :, None])
    O = special_ortho_group.rvs(d, size=n, random_state=rng)
    O = np.asarray(O).reshape(n, d, d)
    return MatrixWeight(lattice, (O * np.exp(u)[:, None, :]) @ np.swapaxes(O, -1, -2))


def explicit(lattice: DyadicLattice, matrices) -> MatrixWeight:
    m = np.asarray(matrices, dtype=float)
    if m.ndim == 2:
        m = np.broadcast_to(m, (lattice.n_cells,) + m.shape)
    return MatrixWeight(lattice, m)
