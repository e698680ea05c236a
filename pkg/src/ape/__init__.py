"""
Adaptive Partitioning Emulator types.

    Region     box + member point indices + cached CV error + local GP
    Partition  regions exactly covering [0,1]^d, plus the split log
    ApeConfig  run settings (validated on construction)

Operations live in submodules:
    src.ape.cv     leave-one-out error scores
    src.ape.split  split-dimension choice and region splitting
    src.ape.loop   the sequential loop, partitioned prediction, exports
"""

import enum
from dataclasses import dataclass, field

import numpy as np

from config import DEFAULT_N0, DEFAULT_N, DEFAULT_SEED
from src.core import FitConfig, TrainedGP, TrendBasis, TrendKind
from src.design import Box
from src.errors import InvalidArgumentError


class LooMode(enum.Enum):
    CLOSED_FORM = "closed-form"   # one θ̂ per region, residuals from R⁻¹
    FULL_REFIT = "full-refit"     # θ re-optimized for every held-out point


class ErrorMeasure(enum.Enum):
    MSE = "mse"
    MAX_ABS = "max-abs"


@dataclass(frozen=True)
class ApeConfig:
    """
    n0: initial design size (also half the per-split top-up target 2·n0)
    N:  stop once the total design size reaches N
    max_iterations / tolerance: optional extra stopping rules (off when None)
    """

    n0: int = DEFAULT_N0
    N: int = DEFAULT_N
    error_measure: ErrorMeasure = ErrorMeasure.MSE
    seed: int = DEFAULT_SEED
    fit: FitConfig = field(default_factory=FitConfig)
    loo_mode: LooMode = LooMode.CLOSED_FORM
    trend: TrendKind = TrendKind.CONSTANT
    max_iterations: int | None = None
    tolerance: float | None = None
    parallel_children: bool = False

    def __post_init__(self):
        for name, kind in (('error_measure', ErrorMeasure), ('loo_mode', LooMode), ('trend', TrendKind)):
            value = getattr(self, name)
            if isinstance(value, str):
                object.__setattr__(self, name, kind(value.lower()))
        if self.n0 < 1:
            raise InvalidArgumentError("n0 must be >= 1")
        if self.N < self.n0:
            raise InvalidArgumentError(f"N ({self.N}) must be >= n0 ({self.n0})")
        if self.max_iterations is not None and self.max_iterations < 0:
            raise InvalidArgumentError("max_iterations must be >= 0")
        if self.tolerance is not None and self.tolerance < 0.0:
            raise InvalidArgumentError("tolerance must be >= 0")

    def basis(self, d: int) -> TrendBasis:
        return TrendBasis(self.trend, d)

    def validate_for(self, d: int) -> None:
        """n0 must leave room for the trend plus two LOO degrees of freedom."""
        need = self.basis(d).p + 2
        if self.n0 < need:
            raise InvalidArgumentError(f"n0={self.n0} is below the fit minimum {need} for d={d}")


@dataclass
class Region:
    """
    One cell of the partition. ``model`` is fitted in the box's local
    coordinates; ``cv_error`` is None until first evaluated.
    """

    box: Box
    point_indices: np.ndarray
    cv_error: float | None = None
    model: TrainedGP | None = None

    def __post_init__(self):
        self.point_indices = np.asarray(self.point_indices, dtype=np.int64)

    @property
    def n_points(self) -> int:
        return self.point_indices.size


@dataclass(frozen=True)
class SplitEntry:
    iteration: int
    region_id: int
    dim: int
    value: float


@dataclass
class Partition:
    regions: list[Region]
    split_log: list[SplitEntry] = field(default_factory=list)

    @classmethod
    def whole_domain(cls, d: int, point_indices) -> "Partition":
        return cls([Region(Box.unit(d), point_indices)])

    @property
    def K(self) -> int:
        return len(self.regions)

    @property
    def d(self) -> int:
        return self.regions[0].box.d

    def locate(self, x) -> int:
        """Id of the unique region containing x (upper domain faces inclusive)."""
        x = np.asarray(x, dtype=np.float64).ravel()
        if x.size != self.d:
            raise InvalidArgumentError(f"point has d={x.size}, partition has d={self.d}")
        if not np.all(np.isfinite(x)) or np.any(x < 0.0) or np.any(x > 1.0):
            raise InvalidArgumentError(f"{x.tolist()} is outside [0,1]^{self.d}")
        for k, region in enumerate(self.regions):
            if region.box.contains(x)[0]:
                return k
        raise InvalidArgumentError(f"no region contains {x.tolist()} (partition is not a cover)")

    def errors(self) -> list[float | None]:
        return [r.cv_error for r in self.regions]

    def audit(self, points) -> list[str]:
        """
        Validity problems, empty when the partition is valid: volumes sum to
        1, boxes are pairwise disjoint, and every design point is indexed by
        exactly the one region whose box contains it.
        """
        problems = []
        total = sum(r.box.volume for r in self.regions)
        if abs(total - 1.0) > 1e-12:
            problems.append(f"region volumes sum to {total!r}")
        for a in range(self.K):
            for b in range(a + 1, self.K):
                lo = np.maximum(self.regions[a].box.lo, self.regions[b].box.lo)
                hi = np.minimum(self.regions[a].box.hi, self.regions[b].box.hi)
                if np.all(hi > lo):
                    problems.append(f"regions {a} and {b} overlap")
        points = np.atleast_2d(np.asarray(points, dtype=np.float64))
        owner = np.full(points.shape[0], -1)
        for k, region in enumerate(self.regions):
            idx = region.point_indices
            if np.any(owner[idx] >= 0):
                problems.append(f"region {k} re-indexes points already owned by another region")
            owner[idx] = k
            inside = region.box.contains(points[idx]) if idx.size else np.array([], dtype=bool)
            if not np.all(inside):
                problems.append(f"region {k} indexes {int((~inside).sum())} point(s) outside its box")
        if np.any(owner < 0):
            problems.append(f"{int((owner < 0).sum())} design point(s) belong to no region")
        return problems


__all__ = ['LooMode', 'ErrorMeasure', 'ApeConfig', 'Region', 'SplitEntry', 'Partition']
