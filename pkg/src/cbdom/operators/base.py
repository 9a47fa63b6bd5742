"""Operator interface and the matrix-free norm estimator."""

from __future__ import annotations

import logging
from abc import ABC, abstractmethod
from typing import Callable

import numpy as np
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, eigsh

from cbdom.dyadic.functions import GridFunction
from cbdom.dyadic.lattice import DyadicLattice
from cbdom.errors import ConvergenceError, DomainError

log = logging.getLogger(__name__)

NORM_TOL = 1e-6
NORM_MAX_ITER = 10_000
DENSE_LIMIT = 1 << 10


class Operator(ABC):
    """A linear operator on grid functions, acting componentwise on R^d values."""

    lattice: DyadicLattice

    @abstractmethod
    def apply(self, f: GridFunction) -> GridFunction: ...

    @abstractmethod
    def adjoint_apply(self, f: GridFunction) -> GridFunction: ...

    def __call__(self, f: GridFunction) -> GridFunction:
        return self.apply(f)

    def check_function(self, f: GridFunction) -> None:
        if f.lattice.shape != self.lattice.shape:
            raise DomainError("function and operator live on different grids")

    def matrix(self) -> np.ndarray:
        """Dense scalar matrix of the operator on the finest cells (desk scale only)."""
        n = self.lattice.n_cells
        if n > DENSE_LIMIT:
            raise DomainError(f"refusing to materialize a {n} x {n} operator")
        cols = [self.apply(GridFunction(self.lattice, e)).scalar for e in np.eye(n)]
        return np.stack(cols, axis=1)


class IdentityOperator(Operator):
    def __init__(self, lattice: DyadicLattice):
        self.lattice = lattice

    def apply(self, f: GridFunction) -> GridFunction:
        self.check_function(f)
        return f

    adjoint_apply = apply


def estimate_norm(matvec: Callable[[np.ndarray], np.ndarray],
                  rmatvec: Callable[[np.ndarray], np.ndarray],
                  size: int, tol: float = NORM_TOL, seed: int = 0,
                  maxiter: int = NORM_MAX_ITER) -> float:
    """Largest singular value of a matrix-free operator on R^size.

    Uses Lanczos (``eigsh``) on the normal operator ``A^T A`` from a seeded
    start vector; small problems are solved densely.
    """
    if size <= 0:
        return 0.0
    normal = lambda v: rmatvec(matvec(np.asarray(v, dtype=float).ravel()))  # noqa: E731
    if size <= 8:
        N = np.stack([normal(col) for col in np.eye(size)], axis=1)
        top = float(np.linalg.eigvalsh(0.5 * (N + N.T))[-1])
        return float(np.sqrt(max(top, 0.0)))
    op = LinearOperator((size, size), matvec=normal, dtype=float)
    v0 = np.random.default_rng(seed).standard_normal(size)
    try:
        vals = eigsh(op, k=1, which="LA", v0=v0, tol=tol * 1e-2,
                     maxiter=maxiter, return_eigenvectors=False)
    except ArpackNoConvergence as exc:
        partial = np.asarray(exc.eigenvalues, dtype=float)
        if partial.size:
            lo = float(np.sqrt(max(partial.max(), 0.0)))
        else:
            v = v0 / np.linalg.norm(v0)
            lo = float(np.sqrt(max(v @ normal(v), 0.0)))
        raise ConvergenceError(
            f"norm estimate did not converge in {maxiter} iterations",
            bracket=(lo, float("inf"))) from exc
    return float(np.sqrt(max(float(vals[0]), 0.0)))


def operator_norm(T: Operator, d: int = 1, tol: float = NORM_TOL, seed: int = 0) -> float:
    """Unweighted L^2 norm of ``T`` acting on R^d valued functions."""
    lat = T.lattice
    shape = (lat.n_cells, d)

    def matvec(v):
        return T.apply(GridFunction(lat, v.reshape(shape))).values.ravel()

    def rmatvec(v):
        return T.adjoint_apply(GridFunction(lat, v.reshape(shape))).values.ravel()

    return estimate_norm(matvec, rmatvec, lat.n_cells * d, tol=tol, seed=seed)
