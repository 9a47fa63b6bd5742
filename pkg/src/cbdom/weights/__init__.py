"""Matrix weights and their characteristics."""

from cbdom.weights.characteristics import (
    CharacteristicReport,
    ReverseHolderReport,
    a2_matrix,
    a2_scalar,
    a2_two_weight,
    a_infty_scalar,
    a_infty_scalar_matrix,
    direction_weight,
    maximal_integral_ratio,
    reverse_holder_check,
)
from cbdom.weights.matrix_weight import MatrixWeight

__all__ = [
    "CharacteristicReport",
    "MatrixWeight",
    "ReverseHolderReport",
    "a2_matrix",
    "a2_scalar",
    "a2_two_weight",
    "a_infty_scalar",
    "a_infty_scalar_matrix",
    "direction_weight",
    "maximal_integral_ratio",
    "reverse_holder_check",
]
