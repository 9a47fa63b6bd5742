"""Muckenhoupt-type characteristics of scalar and matrix weights.

Every characteristic is an exhaustive scan over all dyadic cubes, done one
level at a time with batched d x d algebra.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from cbdom.dyadic.functions import GridFunction, level_averages, maximal_profile
from cbdom.dyadic.lattice import DyadicCube, DyadicLattice
from cbdom.errors import DomainError, NotInvertibleError, PreconditionError
from cbdom.geometry.nets import direction_net
from cbdom.geometry.smallmat import sandwich_norm_sq
from cbdom.weights.matrix_weight import MatrixWeight
from cbdom.workers import parallel_map

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class CharacteristicReport:
    value: float
    witness: DyadicCube
    direction: np.ndarray | None = None
    net_size: int | None = None
    lower_bound: bool = False

    def to_dict(self) -> dict:
        out = {
            "value": self.value,
            "witness": {"level": self.witness.level, "index": list(self.witness.index)},
            "lower_bound": self.lower_bound,
        }
        if self.direction is not None:
            out["direction"] = [float(x) for x in self.direction]
        if self.net_size is not None:
            out["net_size"] = self.net_size
        return out


@dataclass(frozen=True)
class ReverseHolderReport:
    holds: bool
    worst_ratio: float
    witness: DyadicCube
    delta: float
    delta_cap: float
    within_precondition: bool = True
    notes: list[str] = field(default_factory=list)


def _cube_at(lattice: DyadicLattice, level: int, flat: int) -> DyadicCube:
    idx = np.unravel_index(int(flat), (1 << level,) * lattice.dim)
    return DyadicCube(level, tuple(int(i) for i in idx))


def _scan(lattice: DyadicLattice, per_level) -> tuple[float, DyadicCube]:
    """Maximize ``per_level(level)`` (a flat per-cube array) over all levels."""
    best, witness = -np.inf, lattice.root
    for level in range(lattice.max_level + 1):
        vals = np.asarray(per_level(level)).ravel()
        i = int(np.argmax(vals))
        if vals[i] > best:
            best, witness = float(vals[i]), _cube_at(lattice, level, i)
    return best, witness


def _ratio(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    """``num / den`` with ``0 / 0 = 1``."""
    out = np.ones_like(num, dtype=float)
    pos = den > 0
    out[pos] = num[pos] / den[pos]
    out[~pos & (num > 0)] = np.inf
    return out


def _scalar_values(w) -> tuple[np.ndarray, DyadicLattice]:
    if isinstance(w, MatrixWeight):
        return w.scalar_values(), w.lattice
    return w.scalar, w.lattice


# ---- Matrix characteristics ----

def a2_matrix(W: MatrixWeight) -> CharacteristicReport:
    """``sup_Q |<W>_Q^{1/2} <W^{-1}>_Q^{1/2}|^2``."""
    if not W.invertible:
        raise NotInvertibleError("the matrix A2 characteristic needs an invertible weight")
    Winv = W.inverse_weight()
    value, witness = _scan(W.lattice, lambda level: sandwich_norm_sq(
        W.averages(level), Winv.averages(level)))
    return CharacteristicReport(value, witness)


def a2_two_weight(W: MatrixWeight, V: MatrixWeight) -> CharacteristicReport:
    """``sup_Q |<W>_Q^{1/2} <V>_Q^{1/2}|^2``."""
    if W.d != V.d or W.lattice.shape != V.lattice.shape:
        raise DomainError("two-weight characteristic needs weights on the same grid and d")
    value, witness = _scan(W.lattice, lambda level: sandwich_norm_sq(
        W.averages(level), V.averages(level)))
    return CharacteristicReport(value, witness)


def a2_scalar(w: GridFunction | MatrixWeight) -> CharacteristicReport:
    """``sup_Q <w>_Q <w^{-1}>_Q`` for a positive scalar weight."""
    vals, lat = _scalar_values(w)
    if np.any(vals <= 0):
        raise NotInvertibleError("scalar A2 needs a strictly positive weight")
    grid = vals.reshape(lat.shape)
    value, witness = _scan(lat, lambda level: level_averages(grid, lat, level)
                           * level_averages(1.0 / grid, lat, level))
    return CharacteristicReport(value, witness)


# ---- A-infinity ----

def a_infty_scalar(w: GridFunction | MatrixWeight) -> CharacteristicReport:
    """``sup_Q <M_Q w>_Q / <w>_Q`` with ``0/0 = 1``."""
    vals, lat = _scalar_values(w)
    if np.any(vals < 0):
        raise DomainError("A-infinity needs a nonnegative weight")
    if not np.any(vals):
        raise DomainError("A-infinity of the zero weight is undefined")
    grid = vals.reshape(lat.shape)
    profile = maximal_profile(grid, lat)
    value, witness = _scan(lat, lambda level: _ratio(
        level_averages(profile[level], lat, level), level_averages(grid, lat, level)))
    return CharacteristicReport(value, witness)


def direction_weight(W: MatrixWeight, e) -> GridFunction:
    """``w_e(x) = (W(x) e, e)``."""
    e = np.asarray(e, dtype=float)
    if e.shape != (W.d,) or abs(np.linalg.norm(e) - 1.0) > 1e-9:
        raise DomainError(f"direction must be a unit vector in R^{W.d}")
    vals = np.einsum("i,nij,j->n", e, W.matrices, e)
    return GridFunction(W.lattice, np.clip(vals, 0.0, None))


def a_infty_scalar_matrix(W: MatrixWeight, net: np.ndarray | None = None,
                          threads: int | None = None) -> CharacteristicReport:
    """Net lower bound for ``sup_e [w_e]_{A_infty}``."""
    net = direction_net(W.d) if net is None else np.asarray(net, dtype=float)
    if len(net) == 0:
        raise DomainError("direction net is empty")
    net = net / np.linalg.norm(net, axis=1, keepdims=True)

    def one(e):
        w_e = direction_weight(W, e)
        if not np.any(w_e.values):
            return CharacteristicReport(1.0, W.lattice.root, e)
        rep = a_infty_scalar(w_e)
        return CharacteristicReport(rep.value, rep.witness, e)

    reports = parallel_map(one, net, threads)
    best = max(range(len(reports)), key=lambda i: reports[i].value)
    rep = reports[best]
    return CharacteristicReport(rep.value, rep.witness, rep.direction,
                                net_size=len(net), lower_bound=True)


def maximal_integral_ratio(w: GridFunction | MatrixWeight, Q: DyadicCube) -> float:
    """``int_Q M_Q w / int_Q w`` (at most ``4 [w]_{A_2}``)."""
    vals, lat = _scalar_values(w)
    lat.full().check_cube(Q)
    grid = vals.reshape(lat.shape)
    box = Q.box(lat.max_level)
    local = DyadicLattice(lat.dim, lat.max_level - Q.level)
    sub = grid[box.slices]
    top = maximal_profile(sub, local)[0]
    total = float(sub.sum())
    return float(top.sum()) / total if total > 0 else 1.0


# ---- Reverse Hölder ----

def reverse_holder_check(w: GridFunction | MatrixWeight, delta: float,
                         strict: bool = True) -> ReverseHolderReport:
    """``max_Q <w^{1+delta}>_Q / <w>_Q^{1+delta}`` against the constant 2.

    The inequality is only claimed for ``0 < delta <= 2^{-N-1} / [w]_{A_infty}``;
    outside that range ``strict`` raises, otherwise the check runs and the
    report is flagged.
    """
    vals, lat = _scalar_values(w)
    a_inf = a_infty_scalar(w).value
    cap = 2.0 ** (-lat.dim - 1) / a_inf
    notes = []
    within = 0.0 < delta <= cap * (1.0 + 1e-12)
    if not within:
        msg = f"delta {delta:.6g} outside (0, {cap:.6g}]"
        if strict:
            raise PreconditionError(msg)
        log.warning("reverse Hoelder check out of range: %s", msg)
        notes.append(msg)
    grid = vals.reshape(lat.shape)
    powered = grid ** (1.0 + delta)
    value, witness = _scan(lat, lambda level: _ratio(
        level_averages(powered, lat, level),
        level_averages(grid, lat, level) ** (1.0 + delta)))
    return ReverseHolderReport(value <= 2.0, value, witness, delta, cap, within, notes)
