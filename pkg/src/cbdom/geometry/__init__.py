"""Small-matrix algebra and convex geometry: zonotopes, John ellipsoids."""

from cbdom.geometry.john import (
    EllipsoidCert,
    john_ellipsoid,
    principal_axes,
    span_subspace,
)
from cbdom.geometry.representation import rank_one_representation
from cbdom.geometry.zonotope import MembershipCertificate, Zonotope, body_average

__all__ = [
    "EllipsoidCert",
    "MembershipCertificate",
    "Zonotope",
    "body_average",
    "john_ellipsoid",
    "principal_axes",
    "rank_one_representation",
    "span_subspace",
]
