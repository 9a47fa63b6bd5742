"""Matrix-free weighted operator norms."""

from __future__ import annotations

import numpy as np

from cbdom.dyadic.functions import GridFunction
from cbdom.dyadic.lattice import DyadicCube
from cbdom.errors import DomainError
from cbdom.operators.base import NORM_TOL, Operator, estimate_norm
from cbdom.weights.matrix_weight import MatrixWeight


def _check_pair(T: Operator, W: MatrixWeight, V: MatrixWeight) -> None:
    if W.d != V.d:
        raise DomainError(f"weights have different sizes {W.d} and {V.d}")
    if W.lattice.shape != T.lattice.shape or V.lattice.shape != T.lattice.shape:
        raise DomainError("weights and operator live on different grids")


def composite_norm(T: Operator, W: MatrixWeight, V: MatrixWeight,
                   tol: float = NORM_TOL, seed: int = 0) -> float:
    """``|W^{1/2} T V^{1/2}|`` on unweighted ``L^2(R^d)``.

    Lanczos on the normal operator; the adjoint is ``V^{1/2} T* W^{1/2}``.
    """
    _check_pair(T, W, V)
    lat, d = T.lattice, W.d
    shape = (lat.n_cells, d)
    Ws, Vs = W.sqrt, V.sqrt

    def matvec(v):
        g = np.einsum("nij,nj->ni", Vs, v.reshape(shape))
        h = T.apply(GridFunction(lat, g)).values
        return np.einsum("nij,nj->ni", Ws, h).ravel()

    def rmatvec(v):
        g = np.einsum("nij,nj->ni", Ws, v.reshape(shape))
        h = T.adjoint_apply(GridFunction(lat, g)).values
        return np.einsum("nij,nj->ni", Vs, h).ravel()

    return estimate_norm(matvec, rmatvec, lat.n_cells * d, tol=tol, seed=seed)


def averaging_norm(W: MatrixWeight, Q: DyadicCube, tol: float = NORM_TOL,
                   seed: int = 0) -> float:
    """Norm of ``f -> <f>_Q 1_Q`` on ``L^2(W)``.

    Computed as ``|W^{1/2} A_Q W^{-1/2}|`` on unweighted L^2; it equals
    ``|<W>_Q^{1/2} <W^{-1}>_Q^{1/2}|``.
    """
    lat, d = W.lattice, W.d
    cells = lat.cell_indices(Q)
    shape = (lat.n_cells, d)
    Ws, Wis = W.sqrt[cells], W.inv_sqrt[cells]

    def sandwich(left, right, v):
        F = v.reshape(shape)
        mean = np.einsum("nij,nj->i", right, F[cells]) / len(cells)
        out = np.zeros(shape)
        out[cells] = left @ mean
        return out.ravel()

    return estimate_norm(lambda v: sandwich(Ws, Wis, v),
                         lambda v: sandwich(Wis, Ws, v),
                         lat.n_cells * d, tol=tol, seed=seed)
