"""The operator zoo: Haar shifts, paraproducts, martingale transforms, CZ kernels."""

from cbdom.operators.base import IdentityOperator, Operator, estimate_norm, operator_norm
from cbdom.operators.cz import CZKernel, cz_apply, maximal_mt, sharp_truncation
from cbdom.operators.haar import (
    HaarShift,
    martingale_transform,
    random_shift,
    separate,
    truncate_shift,
)
from cbdom.operators.paraproduct import make_paraproduct


def apply_shift(T: HaarShift, f):
    return T.apply(f)


__all__ = [
    "CZKernel",
    "HaarShift",
    "IdentityOperator",
    "Operator",
    "apply_shift",
    "cz_apply",
    "estimate_norm",
    "make_paraproduct",
    "martingale_transform",
    "maximal_mt",
    "operator_norm",
    "random_shift",
    "separate",
    "sharp_truncation",
    "truncate_shift",
]
