"""Sparse square functions, Lerner operators and Carleson sequences.

All objects are summed over a dyadic sparse family or over a Carleson
sequence.  A family counts every member with coefficient 1; a sequence with
masses ``a_Q`` counts ``Q`` with coefficient ``a_Q / |Q|``.

Kernels of the form ``|V(x)^{1/2} W(y)^{1/2}|`` are evaluated per pair of
cells of a cube; for d = 1 they factor as ``v(x) w(y)``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Union

import numpy as np
from scipy import sparse

from cbdom.domination.families import SparseFamily
from cbdom.dyadic.functions import GridFunction, block_sums
from cbdom.dyadic.lattice import DyadicCube, DyadicLattice
from cbdom.errors import DomainError, NotInvertibleError
from cbdom.geometry.smallmat import hs_norm, mat_inv_sqrt, mat_sqrt, op_norm
from cbdom.operators.base import NORM_TOL, estimate_norm
from cbdom.weights.matrix_weight import MatrixWeight

log = logging.getLogger(__name__)

KINDS = (1, 2, 3)
VARIANTS = ("vector", "scalar")

_PAIR_CHUNK = 64


# ---- Carleson sequences ----

@dataclass(eq=False)
class CarlesonSequence:
    """Nonnegative masses ``a_Q`` on dyadic cubes.

    The Carleson constant is ``sup_J |J|^-1 sum_{Q inside J} a_Q``.
    """

    lattice: DyadicLattice
    masses: dict[DyadicCube, float]

    def __post_init__(self):
        self.lattice = self.lattice.full()
        clean = {}
        for Q, a in self.masses.items():
            self.lattice.check_cube(Q)
            a = float(a)
            if not np.isfinite(a) or a < 0:
                raise DomainError(f"Carleson mass {a!r} at {Q} is not a nonnegative number")
            if a > 0:
                clean[Q] = a
        self.masses = dict(sorted(clean.items()))

    @classmethod
    def from_family(cls, family: SparseFamily) -> CarlesonSequence:
        """``a_Q = |Q|`` on the members."""
        if family.enlarged:
            raise DomainError("Carleson sequences live on dyadic cubes, not enlargements")
        return cls(family.lattice, {Q: Q.volume for Q in family.cubes})

    @classmethod
    def random(cls, lattice: DyadicLattice, rng: np.random.Generator,
               density: float = 0.25) -> CarlesonSequence:
        """Each cube carries ``u |Q|`` with probability ``density``, u uniform in [0, 1)."""
        masses = {}
        for Q in lattice.full().all_cubes():
            if rng.random() < density:
                masses[Q] = rng.random() * Q.volume
        return cls(lattice, masses)

    def coefficient(self, Q: DyadicCube) -> float:
        return self.masses.get(Q, 0.0) / Q.volume

    @cached_property
    def constant(self) -> float:
        return self._scan()[0]

    @cached_property
    def witness(self) -> DyadicCube:
        return self._scan()[1]

    def _scan(self) -> tuple[float, DyadicCube]:
        lat = self.lattice
        per_level = [np.zeros((1 << level,) * lat.dim) for level in range(lat.max_level + 1)]
        for Q, a in self.masses.items():
            per_level[Q.level][Q.index] += a
        best, witness = 0.0, lat.root
        total = None
        for level in range(lat.max_level, -1, -1):
            total = per_level[level] if total is None else \
                per_level[level] + block_sums(total, lat.dim, level + 1, level)
            ratio = total * 2.0 ** (lat.dim * level)
            i = int(np.argmax(ratio))
            if ratio.flat[i] > best:
                idx = np.unravel_index(i, ratio.shape)
                best, witness = float(ratio.flat[i]), DyadicCube(level, tuple(int(j) for j in idx))
        return best, witness

    def terms(self) -> list[tuple[DyadicCube, np.ndarray, float]]:
        return [(Q, self.lattice.cell_indices(Q), a / Q.volume)
                for Q, a in self.masses.items()]

    def to_dict(self) -> dict:
        return {"cubes": len(self.masses), "constant": self.constant,
                "witness": {"level": self.witness.level, "index": list(self.witness.index)}}


Summation = Union[SparseFamily, CarlesonSequence]


@dataclass(frozen=True)
class EmbeddingReport:
    lhs: float
    rhs: float
    p: float
    constant: float

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs * (1.0 + 1e-12)

    def to_dict(self) -> dict:
        return {"lhs": self.lhs, "rhs": self.rhs, "p": self.p,
                "constant": self.constant, "holds": self.holds}


def carleson_embedding(a: CarlesonSequence, f: GridFunction, p: float) -> EmbeddingReport:
    """``sum_Q a_Q <f>_Q^p <= (p')^p A |f|_p^p`` for ``f >= 0``."""
    if not 1.0 < p < np.inf:
        raise DomainError(f"exponent p must lie in (1, inf), got {p}")
    f.require_scalar()
    vals = f.scalar
    if np.any(vals < 0):
        raise DomainError("the embedding is stated for nonnegative functions")
    lat = a.lattice
    lhs = 0.0
    for Q, mass in a.masses.items():
        lhs += mass * float(vals[lat.cell_indices(Q)].mean()) ** p
    norm_p = float(np.sum(vals ** p)) * lat.cell_volume
    dual = p / (p - 1.0)
    return EmbeddingReport(lhs, dual ** p * a.constant * norm_p, p, a.constant)


# ---- kernels ----

def _terms(S: Summation) -> list[tuple[DyadicCube, np.ndarray, float]]:
    if isinstance(S, CarlesonSequence):
        return S.terms()
    if S.enlarged:
        raise DomainError("square functions are summed over dyadic families")
    return [(Q, S.lattice.cell_indices(Q), 1.0) for Q in S.cubes]


def _check_weights(W: MatrixWeight, V: MatrixWeight | None, S: Summation,
                   need_v: bool) -> None:
    if need_v and V is None:
        raise DomainError("this object needs the second weight V")
    for M in (W, V):
        if M is None:
            continue
        if M.lattice.shape != S.lattice.shape:
            raise DomainError("weights and family live on different grids")
    if V is not None and V.d != W.d:
        raise DomainError(f"weights have different sizes {W.d} and {V.d}")


def pair_norms(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """``|A_x B_y|`` for every pair of stacked d x d matrices, shape ``(n_x, n_y)``."""
    if A.shape[-1] == 1:
        return np.abs(A[:, 0, 0])[:, None] * np.abs(B[:, 0, 0])[None, :]
    out = np.empty((len(A), len(B)))
    for start in range(0, len(A), _PAIR_CHUNK):
        stop = start + _PAIR_CHUNK
        out[start:stop] = op_norm(A[start:stop, None] @ B[None])
    return out


def _vector_pairs(A: np.ndarray, u: np.ndarray) -> np.ndarray:
    """``|A_x u_y|`` for every pair."""
    return np.linalg.norm(np.einsum("xij,yj->xyi", A, u), axis=-1)


def _avg_inv_sqrt(avg: np.ndarray) -> np.ndarray:
    try:
        return mat_inv_sqrt(avg)
    except NotInvertibleError:
        log.warning("singular average weight: using the pseudo-inverse square root")
        return mat_inv_sqrt(avg, pseudo=True)


def cube_factor(kind: int, W: MatrixWeight, V: MatrixWeight | None,
                cells: np.ndarray) -> np.ndarray:
    """``<W>_Q^{-1/2}`` for kind 2, ``<V>_Q^{1/2}`` for kind 3."""
    if kind == 2:
        return _avg_inv_sqrt(W.matrices[cells].mean(axis=0))
    if kind == 3:
        return mat_sqrt(V.matrices[cells].mean(axis=0))
    raise DomainError(f"kind {kind} has no per-cube factor")


def _magnitudes(f: GridFunction, variant: str, W: MatrixWeight) -> np.ndarray:
    if variant not in VARIANTS:
        raise DomainError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
    if f.lattice.shape != W.lattice.shape:
        raise DomainError("function and weights live on different grids")
    if variant == "vector":
        if f.d != W.d:
            raise DomainError(f"weight has d={W.d}, function has d={f.d}")
        return np.einsum("nij,nj->ni", W.sqrt, f.values)
    return f.pointwise_norm().scalar


# ---- square functions ----

def square_function(kind: int, W: MatrixWeight, S: Summation, f: GridFunction,
                    V: MatrixWeight | None = None, variant: str = "scalar") -> GridFunction:
    """Sparse square function ``S_kind`` (vector variant) or its scalar version.

    kind 1: ``(sum_Q c_Q <|V(x)^{1/2} W^{1/2} f|>_Q^2 1_Q(x))^{1/2}``
    kind 2: ``<W>_Q^{-1/2}`` in place of ``V(x)^{1/2}``
    kind 3: ``<V>_Q^{1/2}`` in place of ``V(x)^{1/2}``

    The scalar variant replaces ``|M W^{1/2} f|`` by ``|M W^{1/2}| |f|``.
    """
    if kind not in KINDS:
        raise DomainError(f"unknown square function kind {kind}")
    _check_weights(W, V, S, need_v=kind != 2)
    lat = W.lattice
    mag = _magnitudes(f, variant, W)
    Ws = W.sqrt
    out = np.zeros(lat.n_cells)
    for _, cells, c in _terms(S):
        if kind == 1:
            Vs = V.sqrt[cells]
            if variant == "vector":
                rows = _vector_pairs(Vs, mag[cells]).mean(axis=1)
            else:
                rows = pair_norms(Vs, Ws[cells]) @ mag[cells] / len(cells)
            out[cells] += c * rows ** 2
            continue
        A = cube_factor(kind, W, V, cells)
        if variant == "vector":
            m = float(np.linalg.norm(mag[cells] @ A.T, axis=1).mean())
        else:
            m = float((op_norm(A @ Ws[cells]) * mag[cells]).mean())
        out[cells] += c * m * m
    return GridFunction(lat, np.sqrt(out))


def lerner_apply(W: MatrixWeight, V: MatrixWeight, S: Summation, f: GridFunction,
                 variant: str = "scalar") -> GridFunction:
    """``sum_Q c_Q <|V(x)^{1/2} W^{1/2} f|>_Q 1_Q(x)``, or with ``|V(x)^{1/2} W^{1/2}| |f|``."""
    _check_weights(W, V, S, need_v=True)
    lat = W.lattice
    mag = _magnitudes(f, variant, W)
    out = np.zeros(lat.n_cells)
    for _, cells, c in _terms(S):
        Vs = V.sqrt[cells]
        if variant == "vector":
            rows = _vector_pairs(Vs, mag[cells]).mean(axis=1)
        else:
            rows = pair_norms(Vs, W.sqrt[cells]) @ mag[cells] / len(cells)
        out[cells] += c * rows
    return GridFunction(lat, out)


def dom_to_scalar(W: MatrixWeight, V: MatrixWeight, S: Summation, f: GridFunction,
                  tol: float = 1e-10) -> dict:
    """Pointwise ``|S_k f| <= S~_k |f|`` for k = 1, 2, 3 and ``|L f| <= L~ |f|``.

    Reports the largest excess ``vector - scalar`` per object.
    """
    out = {}
    for kind in KINDS:
        vec = square_function(kind, W, S, f, V=V, variant="vector").scalar
        sc = square_function(kind, W, S, f, V=V, variant="scalar").scalar
        out[f"S{kind}"] = float(np.max(vec - sc, initial=0.0))
    vec = lerner_apply(W, V, S, f, variant="vector").scalar
    sc = lerner_apply(W, V, S, f, variant="scalar").scalar
    out["L"] = float(np.max(vec - sc, initial=0.0))
    scale = 1.0 + float(np.max(np.abs(sc), initial=0.0))
    return {"excess": out, "holds": all(v <= tol * scale for v in out.values())}


# ---- operator norms ----

def _coo(rows: list, cols: list, vals: list, shape: tuple[int, int]) -> sparse.csr_matrix:
    if not vals:
        return sparse.csr_matrix(shape)
    return sparse.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                             shape=shape).tocsr()


def square_matrix(kind: int, W: MatrixWeight, S: Summation,
                  V: MatrixWeight | None = None) -> sparse.csr_matrix:
    """Linear map whose norm on nonnegative inputs is ``|S~_kind|_{L^2 -> L^2}``.

    Rows are ``sqrt(c_Q / n_Q) sum_y phi_Q(y) f(y)`` for kinds 2 and 3 and
    ``sqrt(c_Q) n_Q^-1 sum_y G(x, y) f(y)`` per ``(Q, x)`` for kind 1; the
    cell volume cancels between both sides.
    """
    if kind not in KINDS:
        raise DomainError(f"unknown square function kind {kind}")
    _check_weights(W, V, S, need_v=kind != 2)
    n = W.lattice.n_cells
    rows, cols, vals = [], [], []
    r = 0
    for _, cells, c in _terms(S):
        k = len(cells)
        if kind == 1:
            G = pair_norms(V.sqrt[cells], W.sqrt[cells]) * (np.sqrt(c) / k)
            rows.append(np.repeat(np.arange(r, r + k), k))
            cols.append(np.tile(cells, k))
            vals.append(G.ravel())
            r += k
        else:
            A = cube_factor(kind, W, V, cells)
            rows.append(np.full(k, r))
            cols.append(cells)
            vals.append(op_norm(A @ W.sqrt[cells]) * np.sqrt(c / k))
            r += 1
    return _coo(rows, cols, vals, (max(r, 1), n))


def square_norm(kind: int, W: MatrixWeight, S: Summation, V: MatrixWeight | None = None,
                tol: float = NORM_TOL, seed: int = 0) -> float:
    M = square_matrix(kind, W, S, V)
    return estimate_norm(lambda v: M @ v, lambda v: M.T @ v, M.shape[1], tol=tol, seed=seed)


def lerner_norm(W: MatrixWeight, V: MatrixWeight, S: Summation,
                tol: float = NORM_TOL, seed: int = 0) -> float:
    """``|L~|_{L^2 -> L^2}``; the kernel is nonnegative so it is attained on ``f >= 0``."""
    _check_weights(W, V, S, need_v=True)
    terms = _terms(S)
    n = W.lattice.n_cells
    if W.d == 1:
        w = np.abs(W.sqrt[:, 0, 0])
        v = np.abs(V.sqrt[:, 0, 0])

        def factored(left, right, x):
            out = np.zeros(n)
            for _, cells, c in terms:
                out[cells] += (c / len(cells)) * left[cells] * (right[cells] @ x[cells])
            return out

        return estimate_norm(lambda x: factored(v, w, x), lambda x: factored(w, v, x),
                             n, tol=tol, seed=seed)
    rows, cols, vals = [], [], []
    for _, cells, c in terms:
        k = len(cells)
        rows.append(np.repeat(cells, k))
        cols.append(np.tile(cells, k))
        vals.append((pair_norms(V.sqrt[cells], W.sqrt[cells]) * (c / k)).ravel())
    K = _coo(rows, cols, vals, (n, n))
    return estimate_norm(lambda x: K @ x, lambda x: K.T @ x, n, tol=tol, seed=seed)


# ---- identities and factorizations ----

def lerner_factorization(W: MatrixWeight, V: MatrixWeight, S: Summation,
                         f: GridFunction, g: GridFunction) -> dict:
    """``(L~ f, g) <= |S~_3 f| |S~_2^V g|`` with ``S~_2^V`` the kind-2 function of V."""
    h = W.lattice.cell_volume
    pairing = h * float(lerner_apply(W, V, S, f).scalar @ g.pointwise_norm().scalar)
    s3 = square_function(3, W, S, f, V=V).l2_norm()
    s2v = square_function(2, V, S, g).l2_norm()
    bound = s3 * s2v
    return {"pairing": pairing, "bound": bound,
            "holds": pairing <= bound * (1.0 + 1e-10) + 1e-300}


def trace_terms(W: MatrixWeight, V: MatrixWeight, Q: DyadicCube) -> tuple[float, float]:
    """``<|<W>_Q^{-1/2} W^{1/2}|_HS^2>_Q`` (equal to d) and ``<|<V>_Q^{1/2} W^{1/2}|_HS^2>_Q``."""
    cells = W.lattice.cell_indices(Q)
    Ws = W.sqrt[cells]
    own = _avg_inv_sqrt(W.matrices[cells].mean(axis=0))
    other = mat_sqrt(V.matrices[cells].mean(axis=0))
    return (float(np.mean(hs_norm(own @ Ws) ** 2)),
            float(np.mean(hs_norm(other @ Ws) ** 2)))


def simple_split_terms(W: MatrixWeight, V: MatrixWeight, family: SparseFamily,
                       f: GridFunction, g: GridFunction) -> dict:
    """Split ``(L~ f, g)`` over a simple family into three sums.

    With ``Q^`` the S-child of Q and ``E_Q = Q \\ Q^`` the pieces are the
    pairs ``(x, y)`` in ``Q x E_Q``, ``E_Q x Q^`` and ``Q^ x Q^``.
    """
    if family.enlarged:
        raise DomainError("the split is defined for dyadic families")
    if not family.is_simple():
        raise DomainError("the three-way split needs a simple family")
    _check_weights(W, V, family, need_v=True)
    lat = family.lattice
    fv = f.pointwise_norm().scalar
    gv = g.pointwise_norm().scalar
    h = lat.cell_volume
    pieces = np.zeros(3)
    total = 0.0
    for Q in family.cubes:
        cells = lat.cell_indices(Q)
        inner = np.zeros(len(cells), dtype=bool)
        for child in family.children(Q):
            inner |= np.isin(cells, lat.cell_indices(child))
        B = pair_norms(V.sqrt[cells], W.sqrt[cells]) * np.outer(gv[cells], fv[cells])
        B *= h / len(cells)
        total += float(B.sum())
        pieces[0] += float(B[:, ~inner].sum())
        pieces[1] += float(B[np.ix_(~inner, inner)].sum())
        pieces[2] += float(B[np.ix_(inner, inner)].sum())
    return {"total": total, "pieces": [float(p) for p in pieces],
            "difference": abs(total - float(pieces.sum()))}
