"""Pointwise verification of ``Tf(x) in C L_S f(x)``."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from cbdom.domination.families import SparseFamily
from cbdom.dyadic.functions import GridFunction
from cbdom.errors import DomainError
from cbdom.geometry.zonotope import INSIDE, MEMBERSHIP_TOL, Zonotope
from cbdom.workers import parallel_map

log = logging.getLogger(__name__)

HISTOGRAM_FLOOR = -16


@dataclass(frozen=True)
class VerificationReport:
    max_residual: float
    worst_cell: int
    residual: GridFunction
    statuses: dict[str, int]
    constant: float

    @property
    def passed(self) -> bool:
        return set(self.statuses) <= {INSIDE}

    def to_dict(self) -> dict:
        return {
            "max_residual": self.max_residual,
            "worst_cell": self.worst_cell,
            "statuses": dict(sorted(self.statuses.items())),
            "constant": self.constant,
            "passed": self.passed,
            "histogram": residual_histogram(self.residual),
        }


def cell_weights(family: SparseFamily, C: float) -> list[tuple[np.ndarray, float]]:
    """Per member: its cells and the generator weight ``C |c| / |Q|``."""
    lat = family.lattice
    out = []
    for Q in family.cubes:
        box = family.region(Q)
        w = C / box.n_cells
        if family.scales is not None:
            w *= family.scales.get(Q, 1.0)
        out.append((lat.cell_indices(box), w))
    return out


def cell_body(f: GridFunction, members: list[tuple[np.ndarray, float]]) -> Zonotope:
    """``sum_{Q containing cell} C <<f>>_Q`` with parallel segments merged.

    Segments along the same value ``f(c)`` add their lengths, so the body has
    one generator per cell ``c`` of the union of the members.
    """
    weights = np.zeros(f.lattice.n_cells)
    for cells, w in members:
        weights[cells] += w
    keep = np.flatnonzero(weights)
    return Zonotope(f.values[keep] * weights[keep, None])


def verify_domination(f: GridFunction, Tf: GridFunction, family: SparseFamily, C: float,
                      tol: float = MEMBERSHIP_TOL, threads: int | None = None
                      ) -> VerificationReport:
    """Membership residual of ``Tf(x)`` in ``C sum_{Q in S, Q contains x} <<f>>_Q``.

    Every finest cell is tested; the residual is the distance to the body
    returned by ``Zonotope.contains``.
    """
    lat = f.lattice
    if Tf.lattice.shape != lat.shape or family.lattice.shape != lat.shape:
        raise DomainError("function, image and family live on different grids")
    if Tf.d != f.d:
        raise DomainError(f"image has dimension {Tf.d}, function has {f.d}")
    weights = cell_weights(family, C)
    by_cell: list[list[int]] = [[] for _ in range(lat.n_cells)]
    for i, (cells, _) in enumerate(weights):
        for c in cells:
            by_cell[c].append(i)

    def one(cell: int):
        x = Tf.values[cell]
        if not np.any(x):
            return INSIDE, 0.0
        members = [weights[i] for i in by_cell[cell]]
        body = cell_body(f, members) if members else Zonotope.zero(f.d)
        cert = body.contains(x, tol=tol)
        return cert.status, cert.residual

    results = parallel_map(one, range(lat.n_cells), threads)
    residual = np.array([r for _, r in results])
    statuses: dict[str, int] = {}
    for status, _ in results:
        statuses[status] = statuses.get(status, 0) + 1
    worst = int(np.argmax(residual)) if residual.size else 0
    report = VerificationReport(float(residual.max(initial=0.0)), worst,
                                GridFunction(lat, residual), statuses, C)
    if not report.passed:
        log.info("inclusion at C=%.6g fails at %d cells (worst residual %.3e at cell %d)",
                 C, lat.n_cells - statuses.get(INSIDE, 0), report.max_residual, worst)
    return report


def residual_histogram(residual: GridFunction) -> list[dict]:
    """Counts of ``log10`` residuals per unit bin; exact zeros go to the floor bin."""
    r = residual.scalar
    with np.errstate(divide="ignore"):
        logs = np.where(r > 0, np.log10(np.where(r > 0, r, 1.0)), HISTOGRAM_FLOOR)
    bins = np.clip(np.floor(logs), HISTOGRAM_FLOOR, None).astype(int)
    values, counts = np.unique(bins, return_counts=True)
    return [{"log10_bin": int(v), "count": int(c)} for v, c in zip(values, counts)]
