"""Matrix-weighted norm estimates built on sparse square functions."""

from cbdom.estimates.bounds import TARGETS, BoundRatioReport, bound_ratio, make_simple_sparse
from cbdom.estimates.norms import averaging_norm, composite_norm
from cbdom.estimates.probes import (
    ProbeResult,
    SearchResult,
    counterexample_search,
    power_weight_probe,
)
from cbdom.estimates.square import (
    CarlesonSequence,
    EmbeddingReport,
    carleson_embedding,
    dom_to_scalar,
    lerner_apply,
    lerner_factorization,
    lerner_norm,
    simple_split_terms,
    square_function,
    square_norm,
    trace_terms,
)

__all__ = [
    "TARGETS",
    "BoundRatioReport",
    "CarlesonSequence",
    "EmbeddingReport",
    "ProbeResult",
    "SearchResult",
    "averaging_norm",
    "bound_ratio",
    "carleson_embedding",
    "composite_norm",
    "counterexample_search",
    "dom_to_scalar",
    "lerner_apply",
    "lerner_factorization",
    "lerner_norm",
    "make_simple_sparse",
    "power_weight_probe",
    "simple_split_terms",
    "square_function",
    "square_norm",
    "trace_terms",
]
