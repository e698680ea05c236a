"""Exception hierarchy shared by every subsystem."""

import numpy as np


class EmulatorError(Exception):
    """Base class for all errors raised by this package."""


class InvalidArgumentError(EmulatorError, ValueError):
    """Bad shape, bad range or non-finite input."""


class IllConditionedError(EmulatorError, np.linalg.LinAlgError):
    """Correlation matrix could not be factorized, even after jitter escalation."""

    def __init__(self, message: str, jitter: float):
        super().__init__(message)
        self.jitter = jitter

    def __str__(self) -> str:
        return f"{self.args[0]} (last jitter tried: {self.jitter:.1e})"

    def __reduce__(self):
        return type(self), (self.args[0], self.jitter)


class DegenerateTrendError(EmulatorError):
    """F^T R^-1 F is singular: trend coefficients are not identifiable."""


class InsufficientDataError(EmulatorError):
    """Too few points for the requested fit or cross-validation."""


class NoValidSplitError(EmulatorError):
    """Every candidate split dimension leaves a side with too few points."""


class DegenerateTestSetError(EmulatorError):
    """Test-set responses have zero spread, so scaled metrics are undefined."""


class EvaluationError(EmulatorError):
    """Target function could not be evaluated.

    When raised out of the APE loop, ``partial`` holds the ApeResult built so
    far (trace, partition and design up to the failing iteration).
    """

    def __init__(self, message: str, partial=None):
        super().__init__(message)
        self.partial = partial


class RecordParseError(EmulatorError):
    """Malformed record / design CSV; ``line`` is the 1-based file line."""

    def __init__(self, message: str, line: int | None = None):
        super().__init__(message)
        self.line = line

    def __str__(self) -> str:
        where = f" (line {self.line})" if self.line is not None else ""
        return f"{self.args[0]}{where}"

    def __reduce__(self):
        return type(self), (self.args[0], self.line)


__all__ = [
    'EmulatorError', 'InvalidArgumentError', 'IllConditionedError',
    'DegenerateTrendError', 'InsufficientDataError', 'NoValidSplitError',
    'DegenerateTestSetError', 'EvaluationError', 'RecordParseError',
]
