"""Measured squared norms against the characteristic products of the bounds.

Every bound is taken with its absolute constant set to 1, so a report only
says how large the hidden constant has to be for one instance.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from cbdom.domination.families import SparseFamily, make_simple_sparse
from cbdom.errors import DomainError
from cbdom.estimates.norms import composite_norm
from cbdom.estimates.square import CarlesonSequence, Summation, lerner_norm, square_norm
from cbdom.operators.base import NORM_TOL, Operator
from cbdom.weights.characteristics import a2_two_weight, a_infty_scalar_matrix
from cbdom.weights.matrix_weight import MatrixWeight

log = logging.getLogger(__name__)

TARGETS = ("S2", "S3", "S1", "lerner", "simple_lerner", "theorem")

__all__ = ["TARGETS", "BoundRatioReport", "bound_ratio", "make_simple_sparse"]


@dataclass(frozen=True)
class BoundRatioReport:
    target: str
    measured_norm_sq: float
    bound_value: float
    characteristics: dict[str, float] = field(default_factory=dict)
    witness: str = "operator norm"

    @property
    def ratio(self) -> float:
        if self.bound_value <= 0:
            return 0.0 if self.measured_norm_sq == 0 else float("inf")
        return self.measured_norm_sq / self.bound_value

    def to_dict(self) -> dict:
        return {
            "target": self.target,
            "measured_norm_sq": self.measured_norm_sq,
            "bound_value": self.bound_value,
            "ratio": self.ratio,
            "characteristics": dict(sorted(self.characteristics.items())),
            "witness": self.witness,
        }


def _carleson_constant(S: Summation) -> float:
    if isinstance(S, CarlesonSequence):
        return S.constant
    check = S.certificates.get("dyadic_carleson")
    if check is None:
        raise DomainError(
            "the family carries no dyadic Carleson certificate; run certify() first")
    return check.value


def bound_ratio(target: str, W: MatrixWeight, V: MatrixWeight | None = None,
                S: Summation | None = None, T: Operator | None = None,
                net: np.ndarray | None = None, tol: float = NORM_TOL, seed: int = 0,
                threads: int | None = None, known: dict[str, float] | None = None
                ) -> BoundRatioReport:
    """Ratio of a measured squared norm to its bound's characteristic product.

    ===============  ==================================  ===========================================
    target           measured                            bound (constant 1)
    ===============  ==================================  ===========================================
    S2               ``|S~_2|^2``                        ``lam 2^N d [W]_sc``
    S3, S1           ``|S~_3|^2``, ``|S~_1|^2``          ``lam 2^N d [W,V] [W]_sc``
    lerner           ``|L~|^2``                          ``(lam 2^N d)^2 [W,V] [W]_sc [V]_sc``
    simple_lerner    ``|L~|^2`` on a simple family       ``2^N d [W,V] ([W]_sc^1/2 + [V]_sc^1/2)^2``
    theorem          ``|W^{1/2} T V^{1/2}|^2``           ``[W,V] [W]_sc [V]_sc``
    ===============  ==================================  ===========================================

    ``known`` holds characteristics computed earlier (keys ``W_sc``, ``V_sc``,
    ``WV_a2``); it is filled in place with the ones computed here.
    """
    if target not in TARGETS:
        raise DomainError(f"unknown bound target {target!r}; expected one of {TARGETS}")
    N, d = W.lattice.dim, W.d
    if target != "S2" and V is None:
        raise DomainError(f"target {target} needs the second weight V")
    if target == "theorem":
        if T is None:
            raise DomainError("the theorem target needs an operator")
    elif S is None:
        raise DomainError(f"target {target} needs a sparse family or Carleson sequence")

    chars = known if known is not None else {}
    if "W_sc" not in chars:
        chars["W_sc"] = a_infty_scalar_matrix(W, net=net, threads=threads).value
    if V is not None:
        if "WV_a2" not in chars:
            chars["WV_a2"] = a2_two_weight(W, V).value
        if target in ("lerner", "simple_lerner", "theorem") and "V_sc" not in chars:
            chars["V_sc"] = a_infty_scalar_matrix(V, net=net, threads=threads).value

    if target == "theorem":
        measured = composite_norm(T, W, V, tol=tol, seed=seed) ** 2
        bound = chars["WV_a2"] * chars["W_sc"] * chars["V_sc"]
    elif target == "simple_lerner":
        if not isinstance(S, SparseFamily) or not S.is_simple():
            raise DomainError("simple_lerner needs a simple sparse family")
        measured = lerner_norm(W, V, S, tol=tol, seed=seed) ** 2
        bound = 2.0 ** N * d * chars["WV_a2"] * (
            np.sqrt(chars["W_sc"]) + np.sqrt(chars["V_sc"])) ** 2
    else:
        lam = _carleson_constant(S)
        chars["lambda"] = lam
        base = lam * 2.0 ** N * d
        if target == "S2":
            measured = square_norm(2, W, S, tol=tol, seed=seed) ** 2
            bound = base * chars["W_sc"]
        elif target in ("S3", "S1"):
            measured = square_norm(int(target[1]), W, S, V=V, tol=tol, seed=seed) ** 2
            bound = base * chars["WV_a2"] * chars["W_sc"]
        else:
            measured = lerner_norm(W, V, S, tol=tol, seed=seed) ** 2
            bound = base ** 2 * chars["WV_a2"] * chars["W_sc"] * chars["V_sc"]

    report = BoundRatioReport(target, float(measured), float(bound), dict(chars))
    log.info("bound ratio %s: measured %.6g / bound %.6g = %.6g",
             target, report.measured_norm_sq, report.bound_value, report.ratio)
    return report
