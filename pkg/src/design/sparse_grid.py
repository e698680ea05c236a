"""
Nested sparse-grid designs.

The level-η design in d dimensions is the union, over index vectors k with
Σk_j = η (k_j ≥ 1), of the tensor products of one-dimensional component
designs X_{k_1} × … × X_{k_d}. Component designs are nested, so the union
equals the disjoint union over Σk_j ≤ η of tensor products of each level's
*new* points; that is how the design is assembled here.

Component levels: 1 → {0.5}; 2 → adds {0, 1}; k ≥ 3 → adds one symmetric
dyadic pair {x, 1 − x}, taking x = 1/4, then 1/8, 3/8, then 1/16, 3/16, 5/16,
7/16, … (one refinement depth at a time). All points are exact binary
fractions, so nesting holds bit-for-bit.
"""

import itertools
from functools import lru_cache

import numpy as np

from config import ROUND_DECIMALS, MAX_KRONECKER_POINTS
from src.core.kernel import CorrelationParams, cross_correlation
from src.design import Design, DesignKind, Provenance
from src.errors import InvalidArgumentError


def _dyadic_left_points():
    depth = 2
    while True:
        for i in range(1, 2 ** (depth - 1), 2):
            yield i / 2 ** depth
        depth += 1


@lru_cache(maxsize=None)
def _new_points(level: int) -> tuple[float, ...]:
    if level == 1:
        return (0.5,)
    if level == 2:
        return (0.0, 1.0)
    x = next(itertools.islice(_dyadic_left_points(), level - 3, None))
    return (x, 1.0 - x)


def component_design(level: int) -> np.ndarray:
    """Sorted one-dimensional component design of size 2·level − 1."""
    if int(level) != level or level < 1:
        raise InvalidArgumentError(f"component level must be an integer >= 1, got {level}")
    pts = [p for k in range(1, int(level) + 1) for p in _new_points(k)]
    return np.sort(np.asarray(pts))


def _compositions_up_to(d: int, total: int):
    """All k ∈ ℕ^d with k_j ≥ 1 and Σk_j ≤ total."""
    if d == 1:
        for k in range(1, total + 1):
            yield (k,)
        return
    for k in range(1, total - (d - 1) + 1):
        for rest in _compositions_up_to(d - 1, total - k):
            yield (k,) + rest


def sparse_grid_size(d: int, eta: int) -> int:
    """
    Closed-form design size: Σ over k with Σk_j ≤ η of Π c(k_j), with
    c(1) = 1 and c(k) = 2 new points for every later level.
    """
    if d < 1 or eta < d:
        raise InvalidArgumentError(f"sparse grid needs d >= 1 and eta >= d, got d={d}, eta={eta}")
    # poly[s] = number of points contributed by index vectors with Σk = s
    per_dim = np.zeros(eta + 1, dtype=object)
    per_dim[1] = 1
    per_dim[2:] = 2
    poly = np.zeros(eta + 1, dtype=object)
    poly[0] = 1
    for _ in range(d):
        nxt = np.zeros(eta + 1, dtype=object)
        for s in range(eta + 1):
            if poly[s]:
                for k in range(1, eta + 1 - s):
                    nxt[s + k] += poly[s] * per_dim[k]
        poly = nxt
    return int(sum(poly[: eta + 1]))


def sparse_grid(d: int, eta: int) -> Design:
    """Level-η sparse-grid design in [0,1]^d, rows in lexicographic order."""
    if int(d) != d or int(eta) != eta or d < 1 or eta < d:
        raise InvalidArgumentError(f"sparse grid needs integer eta >= d >= 1, got d={d}, eta={eta}")
    blocks = [
        np.array(list(itertools.product(*(_new_points(k) for k in ks))))
        for ks in _compositions_up_to(int(d), int(eta))
    ]
    pts = np.round(np.vstack(blocks), ROUND_DECIMALS)
    pts = np.unique(pts, axis=0)
    return Design(pts, Provenance(DesignKind.SPARSE_GRID, eta=int(eta)), seed=0)


def full_grid(components) -> np.ndarray:
    """Cartesian product of the component sets, last dimension varying fastest."""
    return np.array(list(itertools.product(*[np.asarray(c, dtype=float) for c in components])))


def full_grid_kronecker_check(components, params: CorrelationParams, points=None,
                              atol: float = 1e-12, inv_atol: float = 1e-8) -> bool:
    """
    Check R(grid) = ⊗_j R_j and that ⊗_j R_j⁻¹ inverts it.

    ``points`` defaults to the canonical product ordering (the one np.kron
    uses). A caller-supplied ordering must be a permutation of the grid; any
    ordering other than the canonical one makes the check fail.
    """
    comps = [np.asarray(c, dtype=np.float64) for c in components]
    if len(comps) != params.d:
        raise InvalidArgumentError(f"{len(comps)} component sets for theta of length {params.d}")
    for j, c in enumerate(comps):
        if c.ndim != 1 or c.size == 0 or not np.all(np.isfinite(c)):
            raise InvalidArgumentError(f"component {j} is not a finite 1-D point set")
        if np.unique(np.round(c, ROUND_DECIMALS)).size != c.size:
            raise InvalidArgumentError(f"component {j} has duplicate points")
    total = int(np.prod([c.size for c in comps]))
    if total > MAX_KRONECKER_POINTS:
        raise InvalidArgumentError(f"full grid has {total} points; limit is {MAX_KRONECKER_POINTS}")

    grid = full_grid(comps)
    if points is None:
        pts = grid
    else:
        pts = np.asarray(points, dtype=np.float64)
        if pts.shape != grid.shape:
            raise InvalidArgumentError(f"points shape {pts.shape} is not the grid shape {grid.shape}")
        as_set = np.unique(np.round(pts, ROUND_DECIMALS), axis=0)
        if not np.array_equal(as_set, np.unique(np.round(grid, ROUND_DECIMALS), axis=0)):
            raise InvalidArgumentError("points are not the full grid of the given components")

    R_full = cross_correlation(pts, pts, params)
    factors = [
        cross_correlation(c[:, None], c[:, None], CorrelationParams([params.theta[j]]))
        for j, c in enumerate(comps)
    ]
    kron = factors[0]
    kron_inv = np.linalg.inv(factors[0])
    for Rj in factors[1:]:
        kron = np.kron(kron, Rj)
        kron_inv = np.kron(kron_inv, np.linalg.inv(Rj))

    if np.max(np.abs(R_full - kron)) > atol:
        return False
    return bool(np.max(np.abs(R_full @ kron_inv - np.eye(total))) <= inv_atol)


__all__ = [
    'component_design', 'sparse_grid', 'sparse_grid_size', 'full_grid',
    'full_grid_kronecker_check',
]
