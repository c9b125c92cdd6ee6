"""Exception hierarchy.

Every error carries an ``exit_code`` so the CLI can map failures onto its
exit-code contract without a lookup table.
"""


class FractalLabError(Exception):
    """Base class for all library errors."""

    exit_code = 4


class InputError(FractalLabError, ValueError):
    """Bad user input: invalid parameters, malformed files, mismatched grids."""

    exit_code = 2


class InvalidParameterError(InputError):
    pass


class GridMismatchError(InputError):
    pass


class ScalingTooLargeError(InputError):
    pass


class BaseEqualsGermError(InputError):
    pass


class EndpointMismatchError(InputError):
    pass


class JoinConditionError(InputError):
    pass


class DeltaTooSmallError(InputError):
    pass


class DegenerateFitError(InputError):
    pass


class InvalidRatioError(InputError):
    pass


class InsufficientResolutionError(InputError):
    pass


class DimensionMismatchError(InputError):
    pass


class ProblemFileError(InputError):
    """Problem-file parse failure; ``location`` names the offending field."""

    def __init__(self, location, message):
        self.location = location
        super().__init__(f"{location}: {message}")


class NumericalError(FractalLabError):
    exit_code = 3


class NoConvergenceError(NumericalError):
    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class InvariantViolation(FractalLabError, AssertionError):
    """An internal invariant failed; indicates a bug rather than bad input."""

    exit_code = 4
