"""Dyadic paraproducts as generalized Haar shifts."""

from __future__ import annotations

import logging

import numpy as np

from cbdom.dyadic.functions import GridFunction, group_children, martingale_differences
from cbdom.errors import DomainError
from cbdom.operators.base import NORM_TOL, operator_norm
from cbdom.operators.haar import HaarShift

log = logging.getLogger(__name__)


def paraproduct_kernels(b: GridFunction, r: int) -> dict[int, np.ndarray]:
    """Blocks of ``Pi f = sum_Q <f>_Q sum_{R in ch^r Q} Delta_R b``.

    On ``S_a x S_b`` (``S`` in ``ch^{r+1} Q``) the kernel is
    ``Delta_{parent(S_a)} b / |Q|`` on S_a, the same for every column.
    """
    b.require_scalar()
    lat = b.lattice
    N, J = lat.dim, lat.max_level
    k = 1 << (N * (r + 1))
    kernels = {}
    for level in range(0, J - r):
        diffs = martingale_differences(b, level + r)[..., 0]
        D = group_children(diffs, N, level, r + 1)
        kernels[level] = np.repeat(D[:, :, None], k, axis=2) * 2.0 ** (N * level)
    return kernels


def make_paraproduct(b: GridFunction, r: int, normalize: bool = True,
                     tol: float = NORM_TOL, seed: int = 0) -> HaarShift:
    """The order-r paraproduct with symbol ``b``.

    With ``normalize`` the symbol is rescaled so that the estimated norm is
    at most ``2^{-Nr/2}`` and every block obeys ``|K_Q| <= 1/|Q|``.
    """
    if r < 0:
        raise DomainError("paraproduct order must be nonnegative")
    T = HaarShift(b.lattice, r, paraproduct_kernels(b, r), big=False, kind="paraproduct")
    if T.is_zero():
        log.warning("paraproduct symbol has no martingale differences; zero operator")
        T.notes.append("degenerate: zero operator")
        return T
    if not normalize:
        return T
    N = b.lattice.dim
    norm = operator_norm(T, tol=tol, seed=seed)
    peak = max(float(np.abs(K).max()) * 2.0 ** (-N * lv) for lv, K in T.kernels.items())
    scale = min(2.0 ** (-N * r / 2) / norm, 1.0 / peak)
    log.info("paraproduct norm %.6g, kernel peak %.6g, symbol scale %.6g", norm, peak, scale)
    scaled = {lv: K * scale for lv, K in T.kernels.items()}
    out = HaarShift(b.lattice, r, scaled, big=False, kind="paraproduct")
    out.notes.append(f"symbol scale {scale!r}")
    return out
