"""
Choosing the split dimension for a region, and splitting it.

For each dimension j the region is cut (hypothetically) at its midpoint.
With sub-region response means m⁽¹⁾, m⁽²⁾ and variances v⁽¹⁾, v⁽²⁾:

    V_between = Σ_ℓ (m⁽ℓ⁾ − m̄)²,   m̄ = ½(m⁽¹⁾ + m⁽²⁾)
    V_within  = ½ Σ_ℓ v⁽ℓ⁾

and the chosen dimension minimizes V_within / V_between. Variances are the
unbiased sample variance (ddof=1), so every side needs at least two points.
"""

import logging

import numpy as np

from config import MIN_SPLIT_SIDE_POINTS
from src.ape import Partition, Region, SplitEntry
from src.errors import InvalidArgumentError, NoValidSplitError

logger = logging.getLogger("APE")


def split_ratios(region: Region, design_points, y,
                 min_side: int = MIN_SPLIT_SIDE_POINTS) -> np.ndarray:
    """
    Per-dimension V_within / V_between for the region's midpoint splits.

    Invalid dimensions (zero width, or a side with fewer than ``min_side``
    points) are NaN; V_between = 0 gives +inf.
    """
    X = np.atleast_2d(np.asarray(design_points, dtype=np.float64))[region.point_indices]
    values = np.asarray(y, dtype=np.float64).ravel()[region.point_indices]
    ratios = np.full(region.box.d, np.nan)
    for j in range(region.box.d):
        if region.box.width[j] <= 0.0:
            continue
        upper = X[:, j] >= region.box.midpoint(j)
        sides = (values[~upper], values[upper])
        if min(s.size for s in sides) < max(min_side, 2):
            continue
        means = np.array([s.mean() for s in sides])
        variances = np.array([s.var(ddof=1) for s in sides])
        between = float(np.sum((means - means.mean()) ** 2))
        within = 0.5 * float(np.sum(variances))
        ratios[j] = within / between if between > 0.0 else np.inf
    return ratios


def choose_split_dimension(region: Region, design_points, y,
                           min_side: int = MIN_SPLIT_SIDE_POINTS) -> int:
    """
    Dimension j* minimizing V_within / V_between, lowest index on ties.

    When every valid dimension has V_between = 0 the widest valid dimension is
    taken instead (lowest index on ties). Raises NoValidSplitError when no
    dimension leaves ``min_side`` points on both sides.
    """
    ratios = split_ratios(region, design_points, y, min_side)
    valid = ~np.isnan(ratios)
    if not np.any(valid):
        raise NoValidSplitError(
            f"no midpoint split leaves >= {min_side} points per side "
            f"({region.n_points} points in region)"
        )
    finite = valid & np.isfinite(ratios)
    if np.any(finite):
        return int(np.argmin(np.where(finite, ratios, np.inf)))
    widths = np.where(valid, region.box.width, -np.inf)
    logger.debug(f"all between-variances are zero; widest dimension {int(np.argmax(widths))}")
    return int(np.argmax(widths))


def split_region(partition: Partition, k: int, j: int, design_points,
                 iteration: int = 0) -> Partition:
    """
    Split region k at the midpoint of dimension j, in place.

    The lower child replaces region k; the upper child is appended as region K.
    Points are reassigned by the half-open rule, so a point on the cut goes up.
    Cached errors and models of both children are cleared.
    """
    if not 0 <= k < partition.K:
        raise InvalidArgumentError(f"region id {k} out of range (K={partition.K})")
    region = partition.regions[k]
    lower_box, upper_box = region.box.split(j)
    X = np.atleast_2d(np.asarray(design_points, dtype=np.float64))
    idx = region.point_indices
    in_upper = upper_box.contains(X[idx]) if idx.size else np.zeros(0, dtype=bool)

    partition.regions[k] = Region(lower_box, idx[~in_upper])
    partition.regions.append(Region(upper_box, idx[in_upper]))
    partition.split_log.append(SplitEntry(iteration, k, j, region.box.midpoint(j)))
    return partition


__all__ = ['split_ratios', 'choose_split_dimension', 'split_region']
