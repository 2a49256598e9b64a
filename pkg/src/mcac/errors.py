"""Exception types shared across the package.

Everything raised on purpose derives from SolverError so the CLI can map
solver failures to exit code 1 without catching unrelated bugs.
"""


class SolverError(Exception):
    """Base class for all errors this package raises deliberately."""


class NonFiniteFieldError(SolverError):
    """A field contains NaN or Inf; reports the first offending flat index."""

    def __init__(self, index: int, value: float):
        self.index = index
        self.value = value
        super().__init__(f"non-finite value {value!r} at flat index {index}")


class GridMismatchError(SolverError):
    """Two fields that must share a grid do not."""


class DegenerateDenominator(SolverError):
    """The multiplier denominator fell below the safety threshold."""


class ImaginaryResidueTooLarge(SolverError):
    """Inverse transform of nominally-real data had a large imaginary part."""


class GridTooLargeForOracle(SolverError):
    """Refusing to assemble a dense operator for a big grid."""


class NonIntegerStepCount(SolverError):
    """t_end is not an integer multiple of the step size."""


class NonNestedGrids(SolverError):
    """Benchmark grid is not an integer refinement of a study grid."""


class NonPositiveError(SolverError):
    """A convergence-rate input error is zero or negative."""


class BadMagic(SolverError):
    """Snapshot file does not start with the expected magic bytes."""


class TruncatedFile(SolverError):
    """Snapshot file ended before its declared payload."""


class SizeMismatch(SolverError):
    """Snapshot payload length disagrees with its declared sizes."""


class ConfigError(SolverError):
    """A run configuration is malformed; message names the offending field."""
