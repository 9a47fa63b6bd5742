"""Rank-one representation of functions with values in a convex body average.

If ``g(x)`` lies in ``<<f>>_Q`` for every cell x of Q, then
``g(x) = sum_i psi_i(x) <phi_i f>_Q`` with ``|phi_i| <= 1`` and bounded
``psi_i``.  The ``phi_i`` realize the John axes of the body, and the
``psi_i`` are coordinates of ``g(x)`` in that frame.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from cbdom.dyadic.functions import GridFunction
from cbdom.dyadic.lattice import DyadicCube
from cbdom.errors import CertificateError, DomainError
from cbdom.geometry.john import EllipsoidCert, john_ellipsoid, principal_axes
from cbdom.geometry.zonotope import MEMBERSHIP_TOL, OUTSIDE, body_average


@dataclass
class RankOneRepresentation:
    phi: list[GridFunction]
    psi: list[GridFunction]
    vectors: np.ndarray  # (d, d) rows are <phi_i f>_Q
    bound: float
    reconstruction_error: float
    cert: EllipsoidCert | None = field(repr=False)


def rank_one_representation(f: GridFunction, Q: DyadicCube, g: GridFunction,
                            cert: EllipsoidCert | None = None,
                            tol: float = MEMBERSHIP_TOL) -> RankOneRepresentation:
    lat = f.lattice
    if g.d != f.d:
        raise DomainError(f"g has dimension {g.d}, f has {f.d}")
    Z = body_average(f, Q)
    cells = lat.cell_indices(Q)
    d = f.d

    if Z.is_zero():
        if np.any(g.values[cells]):
            raise DomainError(f"g is nonzero on {Q} where <<f>> is the zero body")
        zero = GridFunction.zeros(lat)
        return RankOneRepresentation([zero] * d, [zero] * d, np.zeros((d, d)),
                                     0.0, 0.0, None)

    cert = cert or john_ellipsoid(Z)
    for cell in cells:
        x = g.values[cell]
        if cert.gauge(x) <= 1.0:
            continue
        member = Z.contains(x, tol=tol)
        if member.status == OUTSIDE:
            raise DomainError(
                f"g({lat.cell_cube(int(cell))}) = {x.tolist()} is not in <<f>>_{Q}")
        if not member.inside:
            raise CertificateError(
                f"membership of g({lat.cell_cube(int(cell))}) in <<f>>_{Q} is {member.status}")

    phi, vectors, active = [], np.zeros((d, d)), []
    for i, (axis, alpha) in enumerate(principal_axes(cert)):
        values = np.zeros(lat.n_cells)
        if alpha > 0.0:
            member = Z.contains(alpha * axis, tol=tol)
            if not member.inside:
                raise CertificateError(
                    f"John axis {i} of {Q} is {member.status}, not certified inside the body")
            values[cells] = member.coefficients
            vectors[i] = member.coefficients @ Z.generators
            active.append(i)
        phi.append(GridFunction(lat, values))

    # Coordinates of g in the frame of the realized vectors.
    frame = vectors[active].T
    coords = np.linalg.lstsq(frame, g.values[cells].T, rcond=None)[0]
    psi_values = np.zeros((d, lat.n_cells))
    for row, i in enumerate(active):
        psi_values[i, cells] = coords[row]
    recon = (frame @ coords).T
    error = float(np.max(np.linalg.norm(recon - g.values[cells], axis=1), initial=0.0))
    psi = [GridFunction(lat, psi_values[i]) for i in range(d)]
    bound = float(np.max(np.abs(psi_values), initial=0.0))
    return RankOneRepresentation(phi, psi, vectors, bound, error, cert)
