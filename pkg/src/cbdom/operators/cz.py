"""Discrete truncated Calderon-Zygmund kernels on the line.

The kernel is a convolution kernel ``K(x, y) = k(x - y)`` evaluated at cell
centers and set to zero for displacements below ``cutoff`` cells.  The
default profile ``k(t) = 1/t`` gives a truncated discrete Hilbert transform:
``Tf(c) = sum_{|m| >= 3} f(c - m) / m``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.signal import convolve, fftconvolve

from cbdom.dyadic.functions import GridFunction
from cbdom.dyadic.lattice import DyadicLattice, GridBox
from cbdom.errors import DomainError
from cbdom.operators.base import Operator

log = logging.getLogger(__name__)

DIRECT_WINDOW = 32


def hilbert_profile(t: np.ndarray) -> np.ndarray:
    return 1.0 / t


PROFILES: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "hilbert": hilbert_profile,
}


@dataclass(eq=False)
class CZKernel(Operator):
    lattice: DyadicLattice
    profile: Callable[[np.ndarray], np.ndarray] = hilbert_profile
    cutoff: int = 3
    name: str = "cz_hilbert"

    def __post_init__(self):
        if self.lattice.dim != 1:
            raise DomainError("discrete CZ kernels are implemented for N=1 only")
        if self.cutoff < 1:
            raise DomainError("kernel cutoff must be at least one cell")
        self.lattice = self.lattice.full()

    @property
    def h(self) -> float:
        return 2.0 ** -self.lattice.max_level

    def weight(self, m: np.ndarray) -> np.ndarray:
        """``|c'| K`` at integer cell displacements ``m``; zero inside the cutoff."""
        m = np.asarray(m)
        out = np.zeros(m.shape)
        far = np.abs(m) >= self.cutoff
        out[far] = self.h * self.profile(m[far] * self.h)
        return out

    def kernel_matrix(self) -> np.ndarray:
        """Dense ``|c'| K(c, c')`` (oracle use)."""
        n = self.lattice.n_cells
        idx = np.arange(n)
        return self.weight(idx[:, None] - idx[None, :])

    def _apply_weights(self, values: np.ndarray, w_full: np.ndarray) -> np.ndarray:
        # w_full[t + n - 1] holds the weight at displacement t.
        n = values.shape[0]
        out = np.empty_like(values)
        for j in range(values.shape[1]):
            out[:, j] = convolve(w_full, values[:, j], mode="full", method="auto")[n - 1:2 * n - 1]
        return out

    def _full_weights(self, adjoint: bool = False, radius: int = 0) -> np.ndarray:
        n = self.lattice.n_cells
        t = np.arange(-(n - 1), n)
        w = self.weight(-t if adjoint else t)
        if radius:
            w[np.abs(t) <= radius] = 0.0
        return w

    def apply(self, f: GridFunction) -> GridFunction:
        self.check_function(f)
        return GridFunction(self.lattice, self._apply_weights(f.values, self._full_weights()))

    def adjoint_apply(self, f: GridFunction) -> GridFunction:
        self.check_function(f)
        return GridFunction(self.lattice,
                            self._apply_weights(f.values, self._full_weights(adjoint=True)))

    def truncated_apply(self, f: GridFunction, radius: int) -> GridFunction:
        """``sum_{|c - c'| > radius cells} |c'| K(c, c') f(c')``."""
        self.check_function(f)
        return GridFunction(self.lattice,
                            self._apply_weights(f.values, self._full_weights(radius=radius)))

    def local_terms(self, f: GridFunction, level: int,
                    region: GridBox | None = None) -> tuple[np.ndarray, np.ndarray]:
        """``T(1_{3Q} f)`` on each cube Q of ``level``.

        Returns ``(q, values)`` where ``q`` are the cube indices considered
        (those meeting ``region``) and ``values`` has shape ``(len(q), s, d)``
        with ``s`` the cube side in cells.
        """
        n = self.lattice.n_cells
        s = n >> level
        q_lo, q_hi = 0, 1 << level
        if region is not None:
            q_lo, q_hi = region.lo[0] // s, -(-region.hi[0] // s)
        q = np.arange(q_lo, q_hi)
        padded = np.pad(f.values, ((s, s), (0, 0)))
        windows = sliding_window_view(padded, 3 * s, axis=0)[::s][q_lo:q_hi]  # (q, d, 3s)
        if s <= DIRECT_WINDOW:
            i = np.arange(s)[:, None] + s
            j = np.arange(3 * s)[None, :]
            local = np.einsum("ij,qdj->qid", self.weight(i - j), windows)
        else:
            t = np.arange(-(2 * s - 1), 2 * s)
            wl = self.weight(t)
            conv = fftconvolve(windows, wl[None, None, :], mode="full", axes=2)
            local = np.swapaxes(conv[..., 3 * s - 1:4 * s - 1], 1, 2)
        return q, local

    # ---- envelope ----

    def envelope(self) -> dict:
        """Measured size and grid-scale Lipschitz constants of the kernel.

        ``size = max |K(x,y)| |x-y|``; ``smoothness`` is the best constant in
        ``|K(x,y) - K(x',y)| <= C (|x-x'| / |x-y|) |x-y|^{-1}`` over cell
        pairs with ``|x-x'| <= |x-y|/2``, both displacements outside the cutoff.
        """
        n = self.lattice.n_cells
        m = np.arange(self.cutoff, n)
        m = np.concatenate([-m[::-1], m])
        K = self.weight(m) / self.h
        dist = np.abs(m) * self.h
        size = float(np.max(np.abs(K) * dist, initial=0.0))
        smooth = 0.0
        for shift in range(1, n // 2 + 1):
            ok = (np.abs(m) >= 2 * shift) & (np.abs(m - shift) >= self.cutoff)
            if not np.any(ok):
                continue
            mm = m[ok]
            diff = np.abs(self.weight(mm) - self.weight(mm - shift)) / self.h
            d = np.abs(mm) * self.h
            ratio = diff * d / (shift / np.abs(mm))
            smooth = max(smooth, float(ratio.max()))
        return {"size": size, "smoothness": smooth, "modulus": "lipschitz", "dini": 1.0}


def cz_apply(K: CZKernel, f: GridFunction) -> GridFunction:
    return K.apply(f)


def _cell_norms(values: np.ndarray) -> np.ndarray:
    return np.linalg.norm(values, axis=-1)


def maximal_mt(K: CZKernel, f: GridFunction, region: GridBox | None = None) -> GridFunction:
    """``M_T f(x) = max_{Q containing x} max_{xi in Q} |T(1_{outside 3Q} f)(xi)|``.

    Uses ``T(1_{outside 3Q} f) = Tf - T(1_{3Q} f)`` with the local term from
    a windowed convolution; vector values are measured in the Euclidean norm.
    With ``region`` only cells in that box are evaluated (zero elsewhere).
    """
    K.check_function(f)
    lat = K.lattice
    n, J = lat.n_cells, lat.max_level
    Tf = K.apply(f).values
    out = np.zeros(n)
    for level in range(J + 1):
        s = n >> level
        q, local = K.local_terms(f, level, region)
        cells = (q[:, None] * s + np.arange(s)[None, :])
        far = _cell_norms(Tf[cells] - local)  # (q, s)
        peak = far.max(axis=1)
        out[cells] = np.maximum(out[cells], peak[:, None])
    if region is not None:
        mask = np.zeros(n, dtype=bool)
        mask[region.lo[0]:region.hi[0]] = True
        out[~mask] = 0.0
    return GridFunction(lat, out)


def sharp_truncation(K: CZKernel, f: GridFunction) -> GridFunction:
    """``T# f(x) = max over radii 2^j cells of |sum_{|x-y| > radius} K f|``."""
    K.check_function(f)
    out = np.zeros(K.lattice.n_cells)
    for j in range(K.lattice.max_level + 1):
        out = np.maximum(out, _cell_norms(K.truncated_apply(f, 1 << j).values))
    return GridFunction(K.lattice, out)
