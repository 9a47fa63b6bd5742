"""Invariant suite behind ``cbdom selftest``.

Every check builds its own small inputs from a fixed seed and returns a
:class:`Check`.  A check that raises is recorded as failed with the error
text, so one broken module does not hide the others.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from cbdom.domination.engine import dominate_shift
from cbdom.domination.families import SparseFamily, make_simple_sparse
from cbdom.domination.verify import verify_domination
from cbdom.dyadic.functions import GridFunction, average
from cbdom.dyadic.lattice import DyadicCube, DyadicLattice
from cbdom.errors import CbdomError
from cbdom.estimates.norms import averaging_norm
from cbdom.estimates.square import CarlesonSequence, carleson_embedding, trace_terms
from cbdom.geometry.john import john_ellipsoid
from cbdom.geometry.nets import direction_net
from cbdom.geometry.representation import rank_one_representation
from cbdom.geometry.smallmat import mat_sqrt, op_norm
from cbdom.geometry.zonotope import body_average
from cbdom.operators.haar import martingale_transform, random_shift
from cbdom.weights.characteristics import a2_matrix
from cbdom.weights.generators import random_log_bounded
from cbdom.weights.matrix_weight import MatrixWeight

log = logging.getLogger(__name__)

SEED = 20240611


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str = ""

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "detail": self.detail}


def _rng(offset: int = 0) -> np.random.Generator:
    return np.random.default_rng([SEED, offset])


# ---- Lattice and averages ----

def check_partition() -> Check:
    lat = DyadicLattice(2, 4)
    for Q in lat.all_cubes():
        cells = set(lat.cell_indices(Q).tolist())
        below = [set(lat.cell_indices(R).tolist()) for R in Q.children()] \
            if Q.level < lat.max_level else [cells]
        if set().union(*below) != cells or sum(len(b) for b in below) != len(cells):
            return Check("partition", False, f"children of {Q} do not tile it")
    total = lat.cell_volume * lat.n_cells
    return Check("partition", total == 1.0, f"total volume {total!r}")


def check_average_tower() -> Check:
    lat = DyadicLattice(1, 8)
    f = GridFunction(lat, _rng(1).normal(size=(lat.n_cells, 2)))
    worst = 0.0
    for Q in lat.cubes(3):
        kids = np.mean([average(f, R) for R in Q.children()], axis=0)
        worst = max(worst, float(np.abs(kids - average(f, Q)).max()))
    return Check("average_tower", worst <= 1e-13, f"max deviation {worst:.2e}")


# ---- Convex bodies ----

def check_body_duality() -> Check:
    lat = DyadicLattice(1, 5)
    f = GridFunction(lat, _rng(2).normal(size=(lat.n_cells, 2)))
    Z = body_average(f, lat.root)
    net = direction_net(2, 256)
    if not np.allclose(Z.support(net), Z.support(-net)):
        return Check("body_duality", False, "support function is not symmetric")
    inside = [Z.contains(0.9 * Z.support_point(e)).inside for e in net[::16]]
    outside = [Z.contains(1.01 * Z.support_point(e)).inside for e in net[::16]]
    ok = all(inside) and not any(outside)
    return Check("body_duality", ok, f"{sum(inside)} inside, {sum(outside)} outside")


def check_john_sandwich() -> Check:
    lat = DyadicLattice(1, 5)
    f = GridFunction(lat, _rng(3).normal(size=(lat.n_cells, 3)))
    cert = john_ellipsoid(body_average(f, lat.root))
    return Check("john_sandwich", cert.ok,
                 f"inner {cert.inner_slack:.6f}, outer {cert.outer_slack:.6f}")


def check_rank_one() -> Check:
    lat = DyadicLattice(1, 4)
    rng = _rng(4)
    f = GridFunction(lat, rng.normal(size=(lat.n_cells, 2)))
    Z = body_average(f, lat.root)
    g = GridFunction.constant(lat, 0.5 * Z.support_point(np.array([1.0, 0.0])))
    rep = rank_one_representation(f, lat.root, g)
    return Check("rank_one", rep.reconstruction_error <= 1e-8,
                 f"reconstruction error {rep.reconstruction_error:.2e}")


# ---- Weights ----

def check_identity_a2() -> Check:
    lat = DyadicLattice(1, 6)
    value = a2_matrix(MatrixWeight.identity(lat, 2)).value
    return Check("identity_a2", abs(value - 1.0) <= 1e-12, f"[I]_A2 = {value!r}")


def check_averaging_norm() -> Check:
    lat = DyadicLattice(1, 5)
    W = random_log_bounded(lat, 2, _rng(5))
    Q = lat.cubes(1)[0]
    cells = lat.cell_indices(Q)
    A = W.matrices[cells].mean(axis=0)
    B = W.inverse[cells].mean(axis=0)
    exact = float(op_norm(mat_sqrt(A) @ mat_sqrt(B)))
    measured = averaging_norm(W, Q)
    ok = abs(measured - exact) <= 1e-6 * max(exact, 1.0)
    return Check("averaging_norm", ok, f"measured {measured:.8f}, closed form {exact:.8f}")


def check_trace_identity() -> Check:
    lat = DyadicLattice(1, 5)
    W = random_log_bounded(lat, 3, _rng(6))
    first, _ = trace_terms(W, W.inverse_weight(), lat.root)
    return Check("trace_identity", abs(first - 3.0) <= 1e-10, f"identity term {first!r}")


# ---- Operators ----

def check_shift_adjoint() -> Check:
    lat = DyadicLattice(1, 7)
    rng = _rng(7)
    T = random_shift(lat, 1, rng)
    f = GridFunction(lat, rng.normal(size=lat.n_cells))
    g = GridFunction(lat, rng.normal(size=lat.n_cells))
    lhs = float(np.sum(T.apply(f).values * g.values))
    rhs = float(np.sum(f.values * T.adjoint_apply(g).values))
    gap = abs(lhs - rhs)
    return Check("shift_adjoint", gap <= 1e-9 * (1.0 + abs(lhs)), f"gap {gap:.2e}")


# ---- Domination ----

def check_domination() -> Check:
    lat = DyadicLattice(1, 6)
    rng = _rng(8)
    T = martingale_transform(lat, rng)
    f = GridFunction(lat, rng.normal(size=(lat.n_cells, 2)))
    res = dominate_shift(T, f, 0.5)
    report = verify_domination(f, T.apply(f), res.family, res.constant)
    return Check("domination", report.passed,
                 f"{len(res.family)} cubes, C={res.constant:.4g}, eps={res.achieved_eps:.4g}")


def check_simple_family() -> Check:
    lat = DyadicLattice(2, 5)
    S = make_simple_sparse(lat, 5)
    eps = S.check("eps").value
    ok = S.is_simple() and abs(eps - 0.25) <= 1e-12
    return Check("simple_family", ok, f"eps {eps!r}")


def check_carleson_embedding() -> Check:
    lat = DyadicLattice(1, 7)
    rng = _rng(9)
    a = CarlesonSequence.random(lat, rng)
    f = GridFunction(lat, rng.uniform(0.0, 1.0, size=lat.n_cells))
    reports = [carleson_embedding(a, f, p) for p in (1.5, 2.0, 3.0)]
    worst = max(r.lhs / r.rhs for r in reports)
    return Check("carleson_embedding", all(r.holds for r in reports),
                 f"worst lhs/rhs {worst:.4f}")


def check_family_carleson() -> Check:
    lat = DyadicLattice(1, 6)
    S = SparseFamily(lat, [DyadicCube(0, (0,)), DyadicCube(1, (0,)), DyadicCube(1, (1,))])
    a = CarlesonSequence.from_family(S)
    value = S.check("dyadic_carleson").value
    return Check("family_carleson", abs(value - a.constant) <= 1e-12,
                 f"family {value!r}, sequence {a.constant!r}")


CHECKS = (
    check_partition,
    check_average_tower,
    check_body_duality,
    check_john_sandwich,
    check_rank_one,
    check_identity_a2,
    check_averaging_norm,
    check_trace_identity,
    check_shift_adjoint,
    check_domination,
    check_simple_family,
    check_carleson_embedding,
    check_family_carleson,
)


def run_checks(names: list[str] | None = None) -> list[Check]:
    results = []
    for fn in CHECKS:
        name = fn.__name__.removeprefix("check_")
        if names and name not in names:
            continue
        try:
            result = fn()
        except (CbdomError, ValueError, np.linalg.LinAlgError) as exc:
            result = Check(name, False, f"{type(exc).__name__}: {exc}")
        log.info("selftest %s: %s %s", result.name,
                 "ok" if result.passed else "FAILED", result.detail)
        results.append(result)
    return results
