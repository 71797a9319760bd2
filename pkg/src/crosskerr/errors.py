"""Exception hierarchy.

Two families matter to callers (and to the CLI exit codes): a bad input
(:class:`ValidationError`) and a computation that could not be carried out
for valid inputs (:class:`NumericalError`).
"""


class CrossKerrError(Exception):
    """Base class for all package errors."""


class ValidationError(CrossKerrError, ValueError):
    """Input rejected before any numerics ran."""


class NumericalError(CrossKerrError, ArithmeticError):
    """Valid input, but the requested quantity does not exist or failed to converge."""


class InvalidParameterError(ValidationError):
    pass


class GridError(ValidationError):
    pass


class StepTooLargeError(ValidationError):
    pass


class StatisticsError(ValidationError):
    pass


class SingularTransformationError(NumericalError):
    pass


class DegenerateDecayError(NumericalError):
    pass


class AboveThresholdError(NumericalError):
    """Parameters at or beyond the parametric-oscillation threshold."""


class NoSolutionError(NumericalError):
    pass


class UndefinedMeasureError(NumericalError):
    pass


class DivergenceError(NumericalError):
    def __init__(self, message, last_iterate=None):
        super().__init__(message)
        self.last_iterate = last_iterate


class ResolventSingularError(NumericalError):
    pass


class InstabilityError(NumericalError):
    pass


class PhaseUndefinedError(NumericalError):
    pass
