"""Exceptions raised by the mixed renewal library."""


class MixedRenewalError(Exception):
    """Base class for library errors."""


class MomentUndefinedError(MixedRenewalError, ValueError):
    """A requested moment does not exist for the given hyperparameters."""


class UnsupportedModelError(MixedRenewalError, NotImplementedError):
    """The operation has no implementation for this model variant."""


class InfiniteRenewalError(MixedRenewalError, ArithmeticError):
    """The mixed renewal function is infinite for this model."""


class SeriesConvergenceError(MixedRenewalError, ArithmeticError):
    """A truncated series did not reach its tolerance."""


class IllConditionedError(MixedRenewalError, ArithmeticError):
    """Partial-fraction coefficients grew beyond the usable range."""


class HorizonError(MixedRenewalError, ArithmeticError):
    """A simulated sequence could not cover the requested horizon."""


class DivergentIntegrandError(MixedRenewalError, ArithmeticError):
    """The latent-parameter integrand is unbounded on the integration range."""


class FitFailureError(MixedRenewalError, ArithmeticError):
    """Maximum likelihood estimation failed."""


class PartitionLimitError(MixedRenewalError, ValueError):
    """Requested partition size is above the configured cap."""


class DataFormatError(MixedRenewalError, ValueError):
    """Input data could not be parsed."""

    def __init__(self, message: str, line: int | None = None) -> None:
        """Store the offending line number."""
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
