"""One generation of the stopping-time construction.

``scalar_stopping_step`` and ``vector_stopping_step`` work for r-separated
Haar shifts on the coarsened lattice of the shift, ``cz_stopping_step`` for a
discrete CZ kernel on the line.  Each step returns the stopping cubes of one
generation and the constant that makes the remainder bounded (scalar) or
contained in a multiple of the convex body average (vector).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from math import ceil, log2

import numpy as np

from cbdom.domination.families import maximal_cubes
from cbdom.dyadic.functions import GridFunction, average, level_averages
from cbdom.dyadic.lattice import DyadicCube, DyadicLattice
from cbdom.errors import DomainError, EscalationError
from cbdom.geometry.john import EllipsoidCert, john_ellipsoid, principal_axes
from cbdom.geometry.zonotope import MEMBERSHIP_TOL, Zonotope, body_average
from cbdom.operators.cz import CZKernel, maximal_mt
from cbdom.operators.haar import HaarShift
from cbdom.workers import parallel_map

log = logging.getLogger(__name__)

MAX_DOUBLINGS = 20


def power_of_two_ceiling(x: float) -> float:
    """Smallest ``2^j >= x`` (``j`` may be negative); 0 for ``x <= 0``."""
    if x <= 0:
        return 0.0
    c = 2.0 ** ceil(log2(x))
    while c < x:
        c *= 2.0
    return c


@dataclass
class ScalarStep:
    cubes: list[DyadicCube]
    constant: float
    threshold: float
    escalations: int
    residual: float
    bound: float
    stopped_volume: float


@dataclass
class VectorStep:
    cubes: list[DyadicCube]
    scale: float
    residual: float
    cert: EllipsoidCert | None = None
    scalar_steps: list[ScalarStep] = field(default_factory=list)
    deviations: list[str] = field(default_factory=list)


# ---- helpers ----

def _level_mask(lattice: DyadicLattice, Q0: DyadicCube, level: int) -> np.ndarray:
    """Cubes of ``level`` inside ``Q0`` as a level-shaped boolean array."""
    mask = np.zeros((1 << level,) * lattice.dim, dtype=bool)
    m = 1 << (level - Q0.level)
    mask[tuple(slice(i * m, (i + 1) * m) for i in Q0.index)] = True
    return mask


def _stop_maximal(lattice: DyadicLattice, Q0: DyadicCube, levels: list[int],
                  flags: dict[int, np.ndarray]) -> list[DyadicCube]:
    """Maximal cubes strictly inside ``Q0`` whose flag is set, coarsest first."""
    J = lattice.max_level
    covered = np.zeros(lattice.shape, dtype=bool)
    out: list[DyadicCube] = []
    for level in levels:
        if level <= Q0.level:
            continue
        taken = level_averages(covered.astype(float), lattice, level) > 0.5
        new = flags[level] & _level_mask(lattice, Q0, level) & ~taken
        if not np.any(new):
            continue
        s = 1 << (J - level)
        for idx in np.argwhere(new):
            Q = DyadicCube(level, tuple(int(i) for i in idx))
            out.append(Q)
            covered[tuple(slice(i * s, (i + 1) * s) for i in Q.index)] = True
    return out


def _stopped_cells(lattice: DyadicLattice, cubes: list[DyadicCube]) -> int:
    return sum(Q.box(lattice.max_level).n_cells for Q in cubes)


def _remainder(T, f: GridFunction, cubes: list[DyadicCube],
               region_of=None) -> np.ndarray:
    """``Tf - sum_{Q in cubes} 1_Q T(f 1_{Q'})`` as an ``(n_cells, d)`` array."""
    lat = T.lattice
    out = np.array(T.apply(f).values)
    for Q in cubes:
        inner = region_of(Q) if region_of else Q
        piece = T.apply(f.restrict(inner)).values
        idx = lat.cell_indices(Q)
        out[idx] -= piece[idx]
    return out


def check_shift(T: HaarShift, Q0: DyadicCube) -> DyadicLattice:
    """The coarsened lattice of ``T``; ``Q0`` must be one of its cubes."""
    sub = T.sublattice()
    sub.check_cube(Q0)
    return sub


def _sub_levels(sub: DyadicLattice, Q0: DyadicCube) -> list[int]:
    return [lv for lv in sub.levels() if lv > Q0.level]


def body_scale(points: np.ndarray, Z: Zonotope, cert: EllipsoidCert | None = None,
               tol: float = MEMBERSHIP_TOL, threads: int | None = None
               ) -> tuple[float, float]:
    """Least power of two ``C`` with every row of ``points`` in ``C Z``.

    A support-function bound gives the starting scale, the ellipsoid gauge
    accepts points without a solve, and ``Zonotope.contains`` decides the
    rest.  Returns ``(C, max residual)``; ``C = 0`` when every point is
    within tolerance of the origin.
    """
    pts = np.asarray(points, dtype=float)
    norms = np.linalg.norm(pts, axis=1)
    live = norms > tol * (1.0 + norms)
    if not np.any(live):
        return 0.0, float(norms.max(initial=0.0))
    if Z.is_zero():
        raise DomainError("nonzero remainder against a zero convex body")
    pts, norms = pts[live], norms[live]
    h = Z.support(pts / norms[:, None])
    spanned = h > 0
    lower = float(np.max(norms[spanned] / h[spanned])) if np.any(spanned) else 1.0
    C = power_of_two_ceiling(lower)
    slack = min(cert.inner_slack, 1.0) if cert is not None else 1.0
    pending = np.arange(len(pts))
    if cert is not None and slack > 0:
        gauges = np.array([cert.gauge(x) for x in pts]) / slack
    else:
        gauges = np.full(len(pts), np.inf)
    residual = 0.0
    for doubling in range(MAX_DOUBLINGS + 1):
        pending = pending[gauges[pending] > C]
        body = Z.scale(C)
        certs = parallel_map(lambda i: body.contains(pts[i], tol=tol), pending, threads)
        failed = np.array([not c.inside for c in certs], dtype=bool)
        residual = max((c.residual for c in certs), default=0.0)
        if not np.any(failed):
            return C, residual
        pending = pending[failed]
        C *= 2.0
    raise EscalationError(
        f"body scale exceeded 2^{MAX_DOUBLINGS} times its lower bound "
        f"({len(pending)} points still outside)")


# ---- scalar step ----

def scalar_stopping_step(T: HaarShift, f: GridFunction, Q0: DyadicCube,
                         eps: float, verify: bool = True) -> ScalarStep:
    """Stopping cubes for a scalar ``f`` supported on ``Q0``.

    A cube R of the coarsened lattice strictly inside ``Q0`` stops when the
    partial sum of the shift over levels from ``level(Q0)`` up to (excluding)
    ``level(R)`` exceeds ``tau`` on R, or when ``<|f|>_R > 2 <|f|>_{Q0} / eps``.
    ``tau`` starts at ``2 <|f|>_{Q0} / eps`` and doubles until the maximal
    stopped cubes cover at most ``eps |Q0|``.  With ``verify`` the remainder
    bound ``C eps^-1 <|f|>_{Q0}`` is checked on Q0, doubling C if needed.
    """
    f.require_scalar()
    if not 0.0 < eps < 1.0:
        raise DomainError(f"eps must lie in (0, 1), got {eps}")
    sub = check_shift(T, Q0)
    lat = T.lattice
    J = lat.max_level
    mean_abs = float(average(f.pointwise_norm(), Q0)[0])
    if mean_abs == 0.0 or T.is_zero():
        return ScalarStep([], 0.0, 0.0, 0, 0.0, 0.0, 0.0)

    levels = _sub_levels(sub, Q0)
    tails: dict[int, np.ndarray] = {}
    big_avg: dict[int, np.ndarray] = {}
    partial = np.zeros(lat.shape)
    active = [lv for lv in T.active_levels if lv >= Q0.level]
    abs_grid = np.abs(f.grid[..., 0])
    k = 0
    for level in levels:
        # partial is constant on cubes of ``level``: T is separated.
        while k < len(active) and active[k] < level:
            partial = partial + T.level_term(f, active[k])[..., 0]
            k += 1
        tails[level] = np.abs(level_averages(partial, lat, level))
        big_avg[level] = level_averages(abs_grid, lat, level) > 2.0 * mean_abs / eps

    tau0 = 2.0 * mean_abs / eps
    tau, escalations = tau0, 0
    q0_cells = Q0.box(J).n_cells
    while True:
        flags = {lv: (tails[lv] > tau) | big_avg[lv] for lv in levels}
        G = _stop_maximal(lat, Q0, levels, flags)
        stopped = _stopped_cells(lat, G)
        if stopped <= eps * q0_cells:
            break
        escalations += 1
        if escalations > MAX_DOUBLINGS:
            raise EscalationError(
                f"stopping threshold for {Q0} exceeded 2^{MAX_DOUBLINGS} times its start")
        tau *= 2.0
    if escalations:
        log.info("%s: threshold doubled %d times (tau %.6g)", Q0, escalations, tau)

    constant = tau * eps / mean_abs
    residual, bound = 0.0, constant * mean_abs / eps
    if verify:
        rem = np.abs(_remainder(T, f, G)[lat.cell_indices(Q0), 0])
        residual = float(rem.max(initial=0.0))
        doublings = 0
        while residual > bound * (1.0 + 1e-12):
            doublings += 1
            if doublings > MAX_DOUBLINGS:
                raise EscalationError(f"remainder bound on {Q0} could not be met")
            constant *= 2.0
            bound = constant * mean_abs / eps
    return ScalarStep(G, constant, tau, escalations, residual, bound,
                      stopped / q0_cells)


def covering_stability(T: HaarShift, f: GridFunction, Q0: DyadicCube, eps: float,
                       G: list[DyadicCube], G_bar: list[DyadicCube],
                       constant: float) -> dict:
    """Check the remainder bound for a coarser disjoint family ``G_bar``.

    ``G_bar`` must cover ``G`` (every cube of G inside a cube of G_bar) and
    consist of disjoint cubes inside ``Q0``.
    """
    f.require_scalar()
    for i, R in enumerate(G_bar):
        if not Q0.contains(R):
            raise DomainError(f"{R} is not inside {Q0}")
        for S in G_bar[i + 1:]:
            if R.contains(S) or S.contains(R):
                raise DomainError(f"covering family overlaps: {R} and {S}")
    for Q in G:
        if not any(R.contains(Q) for R in G_bar):
            raise DomainError(f"{Q} is not covered by the coarser family")
    lat = T.lattice
    mean_abs = float(average(f.pointwise_norm(), Q0)[0])
    bound = constant * mean_abs / eps if mean_abs else 0.0
    rem = np.abs(_remainder(T, f, list(G_bar))[lat.cell_indices(Q0), 0])
    residual = float(rem.max(initial=0.0))
    return {
        "residual": residual,
        "bound": bound,
        "holds": residual <= bound * (1.0 + 1e-12) + 1e-12,
    }


# ---- vector step ----

def _axis_steps(T: HaarShift, f: GridFunction, Q0: DyadicCube, eps: float,
                axes: list[np.ndarray], threads: int | None) -> list[ScalarStep]:
    return parallel_map(
        lambda e: scalar_stopping_step(T, f.component(e), Q0, eps, verify=False),
        axes, threads)


def vector_stopping_step(T: HaarShift, f: GridFunction, Q0: DyadicCube, delta: float,
                         tol: float = MEMBERSHIP_TOL, net_size: int | None = None,
                         threads: int | None = None) -> VectorStep:
    """Stopping cubes for an R^d valued ``f`` supported on ``Q0``.

    Runs the scalar step along the principal axes of the John ellipsoid of
    ``<<f>>_{Q0}`` with ``eps = delta / d``, keeps the maximal cubes of the
    union and finds the least power of two C with
    ``Tf - sum_G 1_Q T(f 1_Q)`` in ``C <<f>>_{Q0}`` at every cell of Q0.
    """
    if not 0.0 < delta < 1.0:
        raise DomainError(f"delta must lie in (0, 1), got {delta}")
    check_shift(T, Q0)
    lat = T.lattice
    Z = body_average(f, Q0)
    if Z.is_zero():
        return VectorStep([], 0.0, 0.0)
    cert = john_ellipsoid(Z, net_size=net_size)
    axes = [e for e, alpha in principal_axes(cert)[:cert.dim]]
    eps = delta / f.d
    steps = _axis_steps(T, f, Q0, eps, axes, threads)
    G = maximal_cubes(Q for step in steps for Q in step.cubes)
    rem = _remainder(T, f, G)[lat.cell_indices(Q0)]
    scale, residual = body_scale(rem, Z, cert, tol=tol, threads=threads)
    deviations = []
    if f.d > 1:
        deviations.append(f"axis steps use eps = delta/d = {eps!r}")
    return VectorStep(G, scale, residual, cert, steps, deviations)


# ---- CZ step ----

@dataclass
class CZStep:
    cubes: list[DyadicCube]
    scale: float
    residual: float
    threshold: float
    escalations: int
    exceptional_cells: int


def cz_stopping_step(K: CZKernel, f: GridFunction, Q0: DyadicCube, eps: float,
                     tol: float = MEMBERSHIP_TOL, net_size: int | None = None,
                     threads: int | None = None) -> CZStep:
    """One step of the CZ construction on ``Q0`` for ``f`` supported on 3Q0.

    The exceptional set ``E = {M_T f > c<|f|>} u {|f| > c<|f|>}`` inside Q0,
    averages over ``3Q0``, has ``c`` doubled until ``|E| <= 2^-N-1 eps |Q0|``;
    the stopping cubes are the maximal cubes inside Q0 with
    ``<1_E>_Q > 2^-N-1``.  The remainder
    ``Tf - sum_G 1_Q T(f 1_{3Q})`` must lie in ``C <<f>>_{3Q0}`` on Q0.
    """
    lat = K.lattice
    N, J = lat.dim, lat.max_level
    box0 = lat.enlarge(Q0)
    Z = body_average(f, box0)
    if Z.is_zero():
        return CZStep([], 0.0, 0.0, 0.0, 0, 0)
    mean_abs = float(average(f.pointwise_norm(), box0)[0])
    q0_cells = Q0.box(J).n_cells
    inside = np.zeros(lat.n_cells, dtype=bool)
    inside[lat.cell_indices(Q0)] = True
    mt = maximal_mt(K, f, region=Q0.box(J)).scalar
    size = np.linalg.norm(f.values, axis=1)
    c = 2.0 ** (N + 2) / eps
    escalations = 0
    while True:
        E = inside & ((mt > c * mean_abs) | (size > c * mean_abs))
        if E.sum() <= 2.0 ** (-N - 1) * eps * q0_cells:
            break
        escalations += 1
        if escalations > MAX_DOUBLINGS:
            raise EscalationError(f"exceptional set on {Q0} would not shrink")
        c *= 2.0
    grid = E.reshape(lat.shape).astype(float)
    levels = list(range(Q0.level + 1, J + 1))
    flags = {lv: level_averages(grid, lat, lv) > 2.0 ** (-N - 1) for lv in levels}
    G = _stop_maximal(lat, Q0, levels, flags)
    rem = _remainder(K, f, G, region_of=lat.enlarge)[lat.cell_indices(Q0)]
    cert = john_ellipsoid(Z, net_size=net_size)
    scale, residual = body_scale(rem, Z, cert, tol=tol, threads=threads)
    return CZStep(G, scale, residual, c * mean_abs, escalations, int(E.sum()))
