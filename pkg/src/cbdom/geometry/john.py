"""John ellipsoids of symmetric zonotopes, with net-based sandwich certificates.

The ellipsoid lives in the span E of the generators.  In span coordinates
it is ``{L u : |u| <= 1}`` for a lower-triangular ``L`` with positive
diagonal, whose support function is ``|L^T e|``; the inscribed ellipsoid of
largest volume maximizes ``sum log L_ii`` subject to ``|L^T e| <= h(e)``.
That program is convex in ``L`` and is solved with SLSQP.  Constraints come
from a direction net plus, when affordable, the facet normals of the
zonotope, which make the inclusion exact.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from itertools import combinations

import numpy as np
from scipy.optimize import minimize

from cbdom.errors import CertificateError, DomainError
from cbdom.geometry.nets import direction_net, refinement_net
from cbdom.geometry.smallmat import eig_decompose, mat_sqrt
from cbdom.geometry.zonotope import Zonotope

log = logging.getLogger(__name__)

JOHN_TOL = 1e-5
SPAN_RTOL = 1e-12
MAX_FACET_NORMALS = 50_000


def span_subspace(Z: Zonotope) -> np.ndarray:
    """Orthonormal basis (as columns) of the span of the generators."""
    if Z.m == 0:
        return np.zeros((Z.d, 0))
    vals, vecs = eig_decompose(Z.gram())
    if vals[0] <= 0.0:
        return np.zeros((Z.d, 0))
    keep = vals > SPAN_RTOL * vals[0]
    return vecs[:, keep]


def _distinct_directions(G: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(G, axis=1)
    U = G[norms > 0] / norms[norms > 0, None]
    lead = np.argmax(np.abs(U) > 1e-9, axis=1)
    U = U * np.sign(U[np.arange(len(U)), lead])[:, None]
    return np.unique(np.round(U, 10), axis=0)


def facet_normals(G: np.ndarray, cap: int = MAX_FACET_NORMALS) -> np.ndarray:
    """Unit normals to every hyperplane spanned by k-1 generators (k = G.shape[1]).

    Every facet normal of the zonotope is among them.  Returns an empty array
    when more than ``cap`` candidates would be produced.
    """
    k = G.shape[1]
    U = _distinct_directions(G)
    n = len(U)
    if k == 1 or n < k - 1:
        return np.zeros((0, k))
    count = {2: n, 3: n * (n - 1) // 2}.get(k, n * (n - 1) * (n - 2) // 6)
    if count > cap:
        log.info("skipping %d facet normals (cap %d); net constraints only", count, cap)
        return np.zeros((0, k))
    if k == 2:
        N = np.stack([-U[:, 1], U[:, 0]], axis=1)
    elif k == 3:
        i, j = np.triu_indices(n, 1)
        N = np.cross(U[i], U[j])
    else:
        T = np.array(list(combinations(range(n), 3)))
        rows = U[T]  # (t, 3, 4)
        N = np.stack([(-1) ** c * np.linalg.det(np.delete(rows, c, axis=2))
                      for c in range(4)], axis=1)
    norms = np.linalg.norm(N, axis=1)
    keep = norms > 1e-9
    return N[keep] / norms[keep, None]


@dataclass(frozen=True, eq=False)
class EllipsoidCert:
    """A John ellipsoid ``{M u}`` with its sandwich slacks.

    ``inner_slack = min h(e) / |M e|`` and ``outer_slack = max h(e) / |M e|``
    over the certification directions; inclusion needs inner >= 1/(1+tol),
    the John bound needs outer <= sqrt(dim E) (1+tol).
    """

    M: np.ndarray
    basis: np.ndarray
    M_span: np.ndarray
    inner_slack: float
    outer_slack: float
    net_size: int
    tol: float = JOHN_TOL

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    @property
    def d(self) -> int:
        return self.M.shape[0]

    @property
    def inner_ok(self) -> bool:
        return self.inner_slack * (1.0 + self.tol) >= 1.0

    @property
    def outer_ok(self) -> bool:
        return self.outer_slack <= np.sqrt(self.dim) * (1.0 + self.tol)

    @property
    def ok(self) -> bool:
        return self.inner_ok and self.outer_ok

    def support(self, e) -> np.ndarray | float:
        out = np.linalg.norm(np.asarray(e, dtype=float) @ self.M, axis=-1)
        return float(out) if np.ndim(out) == 0 else out

    def gauge(self, x) -> float:
        """Minkowski gauge of the ellipsoid; ``inf`` off the span."""
        x = np.asarray(x, dtype=float)
        y = self.basis.T @ x
        if np.linalg.norm(x - self.basis @ y) > 1e-12 * (1.0 + np.linalg.norm(x)):
            return float("inf")
        if self.dim == 0:
            return 0.0
        return float(np.linalg.norm(np.linalg.solve(self.M_span, y)))

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "inner_slack": self.inner_slack,
            "outer_slack": self.outer_slack,
            "net_size": self.net_size,
            "ok": self.ok,
        }


def _maximize_logdet(L0: np.ndarray, C: np.ndarray, hC: np.ndarray,
                     maxiter: int = 500) -> np.ndarray:
    k = L0.shape[0]
    rows, cols = np.tril_indices(k)
    diag = rows == cols

    def unpack(theta):
        L = np.zeros((k, k))
        L[rows, cols] = theta
        return L

    def objective(theta):
        grad = np.zeros_like(theta)
        grad[diag] = -1.0 / theta[diag]
        return -np.sum(np.log(theta[diag])), grad

    def constraint(theta):
        P = C @ unpack(theta)
        return hC ** 2 - np.sum(P ** 2, axis=1)

    def constraint_jac(theta):
        P = C @ unpack(theta)
        return -2.0 * P[:, cols] * C[:, rows]

    bounds = [(1e-9, None) if on_diag else (None, None) for on_diag in diag]
    res = minimize(objective, L0[rows, cols], jac=True, method="SLSQP",
                   bounds=bounds,
                   constraints=[{"type": "ineq", "fun": constraint,
                                 "jac": constraint_jac}],
                   options={"maxiter": maxiter, "ftol": 1e-13})
    if not res.success:
        log.warning("John ellipsoid optimizer stopped: %s", res.message)
    L = unpack(res.x)
    if not np.all(np.isfinite(L)) or np.any(np.diag(L) <= 0):
        return L0
    return L


def john_ellipsoid(Z: Zonotope, net: np.ndarray | None = None,
                   tol: float = JOHN_TOL, net_size: int | None = None,
                   strict: bool = False) -> EllipsoidCert:
    """Approximate John ellipsoid of ``Z`` inside the span of its generators.

    ``net`` (unit directions in span coordinates) overrides the default net
    of ``net_size`` directions.  With ``strict`` a failed sandwich raises
    :class:`CertificateError`; otherwise the slacks are just reported.
    """
    if Z.is_zero():
        raise DomainError("the John ellipsoid of the zero body is undefined")
    B = span_subspace(Z)
    k = B.shape[1]
    G = Z.generators @ B
    body = Zonotope(G)

    if k == 1:
        M_span = np.array([[body.support(np.ones(1))]])
        cert = EllipsoidCert(B @ M_span @ B.T, B, M_span, 1.0, 1.0, 1, tol)
        return cert

    if net is None:
        E = direction_net(k, net_size)
    else:
        E = np.asarray(net, dtype=float)
        if E.shape[1] != k:
            E = E @ B
            lengths = np.linalg.norm(E, axis=1)
            E = E[lengths > 1e-9] / lengths[lengths > 1e-9, None]
    normals = facet_normals(G)
    C = np.vstack([E, normals])

    # Work on a body scaled to unit size so the SLSQP tolerances are relative.
    scale = float(np.max(body.support(C)))
    hC = body.support(C) / scale
    L0 = np.linalg.cholesky(body.gram() / scale ** 2 + 1e-15 * np.eye(k))
    L0 *= 0.999 * np.min(hC / np.linalg.norm(C @ L0, axis=1))
    L = _maximize_logdet(L0, C, hC)
    L *= scale * np.min(hC / np.linalg.norm(C @ L, axis=1))

    M_span = mat_sqrt(L @ L.T)
    check = np.vstack([refinement_net(k, net_size), normals])
    ratios = body.support(check) / np.linalg.norm(check @ M_span, axis=1)
    cert = EllipsoidCert(
        M=B @ M_span @ B.T, basis=B, M_span=M_span,
        inner_slack=float(np.min(ratios)), outer_slack=float(np.max(ratios)),
        net_size=len(check), tol=tol,
    )
    if not cert.ok:
        log.warning("John certificate failed: inner %.8f outer %.8f (dim %d)",
                    cert.inner_slack, cert.outer_slack, k)
        if strict:
            raise CertificateError(
                f"John sandwich failed: inner slack {cert.inner_slack:.3e}, "
                f"outer slack {cert.outer_slack:.3e} for dim {k}")
    return cert


def principal_axes(cert: EllipsoidCert) -> list[tuple[np.ndarray, float]]:
    """Axes ``e_k`` and semi-axis lengths ``alpha_k`` of the ellipsoid, padded to d."""
    vals, vecs = eig_decompose(cert.M)
    alphas = np.clip(vals, 0.0, None)
    alphas[cert.dim:] = 0.0
    return [(vecs[:, i], float(alphas[i])) for i in range(cert.d)]
