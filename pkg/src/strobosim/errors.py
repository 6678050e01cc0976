"""Exception hierarchy.

The CLI maps :class:`ValidationError` to exit code 1 and
:class:`NumericalInvariantError` to exit code 2.
"""


class StrobosimError(Exception):
    """Base class for all package errors."""


class ValidationError(StrobosimError, ValueError):
    """Bad user input: parameters, configs, files."""


class GridOverflowError(ValidationError):
    """A state does not fit inside the grid."""


class ResolutionError(ValidationError):
    """The grid spacing cannot resolve the requested field."""


class NumericalInvariantError(StrobosimError, ArithmeticError):
    """A computed field violates an invariant (normalization, Hermiticity, ...)."""


class HermiticityError(NumericalInvariantError):
    pass


class NormDriftError(NumericalInvariantError):
    """Normalization drifted beyond tolerance during a protocol run.

    Attributes:
        step_log: the log of steps executed up to and including the failing one.
    """

    def __init__(self, message, step_log=()):
        super().__init__(message)
        self.step_log = list(step_log)
