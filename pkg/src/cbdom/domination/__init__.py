"""Sparse families and the convex body domination engines."""

from cbdom.domination.engine import DominationResult, dominate_cz, dominate_shift
from cbdom.domination.families import (
    FamilyCheck,
    SparseFamily,
    check_family,
    make_simple_sparse,
    maximal_cubes,
    verify_weak_sets,
)
from cbdom.domination.stopping import (
    body_scale,
    covering_stability,
    cz_stopping_step,
    power_of_two_ceiling,
    scalar_stopping_step,
    vector_stopping_step,
)
from cbdom.domination.verify import VerificationReport, verify_domination

__all__ = [
    "DominationResult",
    "FamilyCheck",
    "SparseFamily",
    "VerificationReport",
    "body_scale",
    "check_family",
    "covering_stability",
    "cz_stopping_step",
    "dominate_cz",
    "dominate_shift",
    "make_simple_sparse",
    "maximal_cubes",
    "power_of_two_ceiling",
    "scalar_stopping_step",
    "vector_stopping_step",
    "verify_domination",
    "verify_weak_sets",
]
