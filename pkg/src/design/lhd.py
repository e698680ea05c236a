"""
Random Latin hypercube designs.

Each one-dimensional projection holds exactly one point per stratum
[(i−1)/n, i/n); strata are permuted independently per dimension and each
point is uniform within its cell.
"""

import numpy as np

from src.design import Box, Design, DesignKind, Provenance
from src.errors import InvalidArgumentError


def _generator(rng: np.random.Generator | int) -> tuple[np.random.Generator, int]:
    if isinstance(rng, np.random.Generator):
        return rng, 0
    return np.random.default_rng(int(rng)), int(rng)


def lhd_points(n: int, d: int, rng: np.random.Generator) -> np.ndarray:
    """Raw n×d Latin hypercube in [0,1)^d."""
    if n < 1 or d < 1:
        raise InvalidArgumentError(f"LHD needs n >= 1 and d >= 1, got n={n}, d={d}")
    strata = np.stack([rng.permutation(n) for _ in range(d)], axis=1)
    return (strata + rng.uniform(size=(n, d))) / n


def lhd(n: int, d: int, rng: np.random.Generator | int, seed: int | None = None) -> Design:
    """
    Random n×d LHD.

    ``rng`` is a Generator or an integer seed; the recorded seed is the
    integer when one is given, else ``seed`` (default 0).
    """
    gen, used = _generator(rng)
    return Design(lhd_points(n, d, gen), Provenance(DesignKind.LHD), seed if seed is not None else used)


def lhd_in_box(n: int, box: Box, rng: np.random.Generator | int, seed: int | None = None) -> Design:
    """An lhd(n, d) mapped affinely onto ``box``; every point is a member of the box."""
    if not isinstance(box, Box):
        raise InvalidArgumentError("lhd_in_box needs a Box")
    gen, used = _generator(rng)
    pts = box.from_local(lhd_points(n, box.d, gen))
    # Rounding in lo + u·w can land exactly on an open upper face.
    open_hi = np.where(box.hi >= 1.0, box.hi, np.nextafter(box.hi, box.lo))
    pts = np.clip(pts, box.lo, open_hi)
    return Design(pts, Provenance(DesignKind.LHD), seed if seed is not None else used)


__all__ = ['lhd_points', 'lhd', 'lhd_in_box']
