"""
Design and region types shared by the generators, the APE loop and the CLI.

Generators live in submodules:
    src.design.lhd          random Latin hypercubes (global / inside a box)
    src.design.sparse_grid  nested sparse-grid designs and the Kronecker check
    src.design.io           CSV + JSON-sidecar serialization
"""

import enum
from dataclasses import dataclass, field

import numpy as np

from src.errors import InvalidArgumentError


class DesignKind(enum.Enum):
    LHD = "lhd"
    SPARSE_GRID = "sparse-grid"
    APE = "ape"
    EXTERNAL = "external"     # loaded from a file without a sidecar


@dataclass(frozen=True)
class Provenance:
    kind: DesignKind
    eta: int | None = None          # sparse-grid level parameter
    iteration: int | None = None    # APE iteration that produced the design

    def to_dict(self) -> dict:
        return {'kind': self.kind.value, 'eta': self.eta, 'iteration': self.iteration}

    @classmethod
    def from_dict(cls, data: dict) -> "Provenance":
        return cls(DesignKind(data['kind']), data.get('eta'), data.get('iteration'))


@dataclass
class Design:
    """Ordered n×d points in [0,1]^d with how they were generated."""

    points: np.ndarray
    provenance: Provenance = field(default_factory=lambda: Provenance(DesignKind.EXTERNAL))
    seed: int = 0

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] < 1:
            raise InvalidArgumentError(f"design points must be n×d, got shape {pts.shape}")
        if not np.all(np.isfinite(pts)) or np.any(pts < 0.0) or np.any(pts > 1.0):
            raise InvalidArgumentError("design points must lie in [0,1]^d")
        self.points = pts

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]


@dataclass(frozen=True)
class Box:
    """
    Axis-aligned box inside [0,1]^d.

    Membership is half-open, [lo, hi), except that a face lying on the domain
    edge (hi_j == 1) is closed. Boxes of a partition therefore cover the
    domain with every point in exactly one box.
    """

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lo, dtype=np.float64).ravel().copy()
        hi = np.asarray(self.hi, dtype=np.float64).ravel().copy()
        if lo.shape != hi.shape or lo.size == 0:
            raise InvalidArgumentError("box lo/hi must be equal-length non-empty vectors")
        if np.any(lo >= hi):
            raise InvalidArgumentError(f"degenerate box: lo={lo} hi={hi}")
        if np.any(lo < 0.0) or np.any(hi > 1.0):
            raise InvalidArgumentError("box must be contained in [0,1]^d")
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, 'lo', lo)
        object.__setattr__(self, 'hi', hi)

    @classmethod
    def unit(cls, d: int) -> "Box":
        return cls(np.zeros(d), np.ones(d))

    @property
    def d(self) -> int:
        return self.lo.size

    @property
    def width(self) -> np.ndarray:
        return self.hi - self.lo

    @property
    def volume(self) -> float:
        return float(np.prod(self.width))

    def midpoint(self, j: int) -> float:
        return 0.5 * (self.lo[j] + self.hi[j])

    def contains(self, X) -> np.ndarray:
        """Boolean membership mask for the rows of X."""
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        upper_ok = np.where(self.hi >= 1.0, X <= self.hi, X < self.hi)
        return np.all((X >= self.lo) & upper_ok, axis=1)

    def split(self, j: int) -> tuple["Box", "Box"]:
        """Halve along dimension j: lower [lo_j, mid), upper [mid, hi_j]."""
        if not 0 <= j < self.d:
            raise InvalidArgumentError(f"split dimension {j} out of range for d={self.d}")
        mid = self.midpoint(j)
        if not (self.lo[j] < mid < self.hi[j]):
            raise InvalidArgumentError(f"box has zero width in dimension {j}")
        lower_hi = self.hi.copy()
        lower_hi[j] = mid
        upper_lo = self.lo.copy()
        upper_lo[j] = mid
        return Box(self.lo, lower_hi), Box(upper_lo, self.hi)

    def to_local(self, X) -> np.ndarray:
        """Map points of the box onto the unit box."""
        return (np.asarray(X, dtype=np.float64) - self.lo) / self.width

    def from_local(self, U) -> np.ndarray:
        """Map unit-box points into the box."""
        return self.lo + np.asarray(U, dtype=np.float64) * self.width

    def to_dict(self) -> dict:
        return {'lo': self.lo.tolist(), 'hi': self.hi.tolist()}


__all__ = ['DesignKind', 'Provenance', 'Design', 'Box']
