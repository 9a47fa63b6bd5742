"""Dense symmetric linear algebra for d x d matrices, d <= 4.

All functions accept a single matrix or a stack ``(..., d, d)`` and work on
the whole stack at once.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from cbdom.errors import DomainError, NotInvertibleError, NotPSDError

PSD_TOL = 1e-10
MAX_DIM = 4


def _finite(a) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if not np.all(np.isfinite(a)):
        raise DomainError("matrix has non-finite entries")
    return a


def symmetrize(a) -> np.ndarray:
    a = _finite(a)
    return 0.5 * (a + np.swapaxes(a, -1, -2))


def eig_decompose(a) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues in descending order and orthonormal eigenvectors (columns)."""
    vals, vecs = np.linalg.eigh(symmetrize(a))
    return vals[..., ::-1], vecs[..., ::-1]


def _spectral(a, fn, pseudo: bool, tol: float, invert: bool) -> np.ndarray:
    vals, vecs = eig_decompose(a)
    top = np.maximum(vals[..., :1], 0.0)
    if np.any(vals < -tol * np.maximum(top, 1e-300)):
        raise NotPSDError(f"negative eigenvalue {float(vals.min()):.3e} beyond tolerance")
    vals = np.clip(vals, 0.0, None)
    small = vals <= tol * top
    if invert and not pseudo and np.any(small):
        raise NotInvertibleError("matrix is singular within tolerance")
    if pseudo or invert:
        mapped = np.where(small, 0.0, fn(np.where(small, 1.0, vals)))
    else:
        mapped = fn(vals)
    return (vecs * mapped[..., None, :]) @ np.swapaxes(vecs, -1, -2)


def mat_sqrt(a, pseudo: bool = False, tol: float = PSD_TOL) -> np.ndarray:
    """PSD square root; ``pseudo`` maps eigenvalues below ``tol * lambda_max`` to 0."""
    return _spectral(a, np.sqrt, pseudo, tol, invert=False)


def mat_inv(a, pseudo: bool = False, tol: float = PSD_TOL) -> np.ndarray:
    return _spectral(a, np.reciprocal, pseudo, tol, invert=True)


def mat_inv_sqrt(a, pseudo: bool = False, tol: float = PSD_TOL) -> np.ndarray:
    return _spectral(a, lambda v: 1.0 / np.sqrt(v), pseudo, tol, invert=True)


def op_norm(a) -> np.ndarray | float:
    """Largest singular value, via the eigenvalues of ``A^T A``."""
    a = _finite(a)
    gram = np.swapaxes(a, -1, -2) @ a
    top = np.linalg.eigvalsh(symmetrize(gram))[..., -1]
    out = np.sqrt(np.clip(top, 0.0, None))
    return float(out) if out.ndim == 0 else out


def hs_norm(a) -> np.ndarray | float:
    out = np.sqrt(np.sum(_finite(a) ** 2, axis=(-2, -1)))
    return float(out) if np.ndim(out) == 0 else out


def sandwich_norm_sq(a, b) -> np.ndarray | float:
    """``||A^{1/2} B^{1/2}||^2 = lambda_max(A^{1/2} B A^{1/2})`` for PSD A, B."""
    ra = mat_sqrt(a)
    top = np.linalg.eigvalsh(symmetrize(ra @ symmetrize(b) @ ra))[..., -1]
    out = np.clip(top, 0.0, None)
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True, eq=False)
class SymMatrix:
    """A real symmetric d x d matrix with 1 <= d <= 4."""

    entries: np.ndarray

    def __post_init__(self):
        a = symmetrize(self.entries)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or not 1 <= a.shape[0] <= MAX_DIM:
            raise DomainError(f"expected a square matrix of size <= {MAX_DIM}, got {a.shape}")
        object.__setattr__(self, "entries", a)

    @property
    def d(self) -> int:
        return self.entries.shape[0]

    def eig(self) -> tuple[np.ndarray, np.ndarray]:
        return eig_decompose(self.entries)

    def is_psd(self, tol: float = PSD_TOL) -> bool:
        vals = self.eig()[0]
        return bool(vals[-1] >= -tol * max(vals[0], 0.0))

    def sqrt(self, pseudo: bool = False) -> SymMatrix:
        return SymMatrix(mat_sqrt(self.entries, pseudo=pseudo))

    def inverse(self, pseudo: bool = False) -> SymMatrix:
        return SymMatrix(mat_inv(self.entries, pseudo=pseudo))

    def op_norm(self) -> float:
        return op_norm(self.entries)

    def hs_norm(self) -> float:
        return hs_norm(self.entries)
