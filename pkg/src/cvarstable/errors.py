"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: validation problems exit with 2,
numeric/sampler failures with 3, I/O problems with 4.
"""


class CvarStableError(Exception):
    """Base class for all package errors."""


class ValidationError(CvarStableError):
    """Bad user input: parameter domains, shapes, config values."""


class ParameterError(ValidationError):
    """A distribution or model parameter is outside its domain."""


class ShapeError(ValidationError):
    """Matrix or series dimensions do not conform."""


class NumericError(CvarStableError):
    """A numeric operation produced an unusable result."""


class ConditioningError(NumericError):
    """A matrix required by an estimator is singular or near-singular."""

    def __init__(self, message, cond=None):
        if cond is not None:
            message = f"{message} (condition number {cond:.3e})"
        super().__init__(message)
        self.cond = cond


class EstimationError(NumericError):
    """An estimator could not produce a usable estimate."""


class SamplerError(NumericError):
    """An MCMC chain reached an unusable state."""

    def __init__(self, message, iteration=None):
        if iteration is not None:
            message = f"{message} (iteration {iteration})"
        super().__init__(message)
        self.iteration = iteration


class AbcStallError(SamplerError):
    """An ABC chain went too long without accepting any proposal."""
