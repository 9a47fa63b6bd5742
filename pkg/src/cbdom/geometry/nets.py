"""Direction nets on the unit sphere of R^k, k <= 4."""

from __future__ import annotations

import numpy as np
from scipy.stats import norm, qmc

from cbdom.errors import DomainError

DEFAULT_NET_SIZES = {2: 720, 3: 2048, 4: 8192}

_GOLDEN = (1 + 5 ** 0.5) / 2


def direction_net(k: int, size: int | None = None, offset: float = 0.0,
                  seed: int = 0) -> np.ndarray:
    """Unit directions as a ``(size, k)`` array.

    Only half of the sphere matters for symmetric bodies, but the nets for
    k >= 3 cover the whole sphere.  ``offset`` (in units of one net step)
    shifts the k=2 and k=3 nets so a second, independent net can be drawn;
    k=4 uses ``seed`` for the scrambled Halton sequence instead.
    """
    if k == 1:
        return np.ones((1, 1))
    size = size or DEFAULT_NET_SIZES.get(k)
    if size is None or size < 1:
        raise DomainError(f"no direction net for dimension {k}")
    if k == 2:
        theta = np.pi * (np.arange(size) + offset) / size
        return np.stack([np.cos(theta), np.sin(theta)], axis=1)
    if k == 3:
        i = np.arange(size) + 0.5
        z = 1.0 - 2.0 * i / size
        phi = 2 * np.pi * (i / _GOLDEN + offset / size)
        rho = np.sqrt(np.clip(1.0 - z * z, 0.0, None))
        return np.stack([rho * np.cos(phi), rho * np.sin(phi), z], axis=1)
    if k == 4:
        sampler = qmc.Halton(d=4, scramble=True, seed=seed)
        u = np.clip(sampler.random(size), 1e-12, 1 - 1e-12)
        pts = norm.ppf(u)
        return pts / np.linalg.norm(pts, axis=1, keepdims=True)
    raise DomainError(f"direction nets exist for k <= 4, got {k}")


def refinement_net(k: int, size: int | None = None) -> np.ndarray:
    """A denser net disjoint from :func:`direction_net` (used for certification)."""
    base = size or DEFAULT_NET_SIZES.get(k, 1)
    return direction_net(k, 4 * base if k > 1 else None, offset=0.5, seed=7919)


def random_directions(rng: np.random.Generator, n: int, d: int) -> np.ndarray:
    v = rng.standard_normal((n, d))
    return v / np.linalg.norm(v, axis=1, keepdims=True)
