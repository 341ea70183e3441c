"""Exception hierarchy shared across the package.

The CLI maps these onto its exit codes: DataError -> 2, NumericError -> 3;
anything argument-shaped is a usage error -> 1.
"""


class CvrDetectError(Exception):
    """Base class for all package errors."""


class DataError(CvrDetectError):
    """Missing, malformed, or inconsistent input data."""


class FormatError(DataError):
    """A binary artifact (CVRT tensor, checkpoint) violates its format."""


class NumericError(CvrDetectError):
    """A numeric invariant was violated (NaN/Inf, divergent training)."""


def assert_finite(arr, what: str) -> None:
    """Raise NumericError if arr contains NaN or Inf. Never clips silently."""
    import numpy as np

    if not np.all(np.isfinite(arr)):
        bad = int(np.size(arr) - np.count_nonzero(np.isfinite(arr)))
        raise NumericError(f"non-finite values in {what}: {bad} of {np.size(arr)} entries")
