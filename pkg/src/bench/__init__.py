"""
Benchmark harness: run configuration and the CLI command implementations.

    src.bench.commands  design / fit / ape / report
    src.bench.sweep     the whole protocol for one function, cells in parallel
"""

import enum
from dataclasses import dataclass, field
from pathlib import Path

from config import DEFAULT_N_TEST, DEFAULT_SEED, default_output_dir
from src.ape import ApeConfig
from src.design import DesignKind
from src.errors import InvalidArgumentError


class Method(enum.Enum):
    STANDARD_GP = "StandardGP"   # one global GP on an LHD
    APE = "APE"
    SGD_FIT = "SGDFit"           # one global GP on a sparse-grid design


@dataclass(frozen=True)
class RunConfig:
    """
    What one benchmark run fits, on which designs, against which test set.

    ``sizes`` are LHD sizes (StandardGP) or APE checkpoints; ``etas`` are
    sparse-grid levels (SGDFit). ``design_kind`` is the provenance of a
    supplied design file, when there is one.
    """

    function: str
    method: Method
    sizes: tuple[int, ...] = ()
    etas: tuple[int, ...] = ()
    ape: ApeConfig | None = None
    design_kind: DesignKind | None = None
    n_test: int = DEFAULT_N_TEST
    seed: int = DEFAULT_SEED
    output_dir: Path = field(default_factory=default_output_dir)

    def __post_init__(self):
        if isinstance(self.method, str):
            object.__setattr__(self, 'method', Method(self.method))
        object.__setattr__(self, 'sizes', tuple(int(s) for s in self.sizes))
        object.__setattr__(self, 'etas', tuple(int(e) for e in self.etas))
        object.__setattr__(self, 'output_dir', Path(self.output_dir))

        if not self.function:
            raise InvalidArgumentError("function name is required")
        for name, values in (('sizes', self.sizes), ('etas', self.etas)):
            if any(v < 1 for v in values):
                raise InvalidArgumentError(f"{name} must be positive, got {list(values)}")
            if any(a >= b for a, b in zip(values, values[1:])):
                raise InvalidArgumentError(f"{name} must be strictly increasing, got {list(values)}")
        if self.n_test < 2:
            raise InvalidArgumentError("n_test must be >= 2")
        if self.seed < 0:
            raise InvalidArgumentError("seed must be >= 0")

        if self.method is Method.SGD_FIT:
            if self.design_kind not in (None, DesignKind.SPARSE_GRID):
                raise InvalidArgumentError(
                    f"SGDFit needs a sparse-grid design, got a {self.design_kind.value} design"
                )
        elif self.method is Method.STANDARD_GP:
            if self.design_kind is DesignKind.APE:
                raise InvalidArgumentError("StandardGP cannot be fitted on an APE design")
        elif self.ape is None:
            raise InvalidArgumentError("APE runs need an ApeConfig")


__all__ = ['Method', 'RunConfig']
