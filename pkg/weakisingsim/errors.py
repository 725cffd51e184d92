"""Exception hierarchy for weakisingsim.

Every error raised on purpose by the package derives from WeakIsingError.
The CLI maps the two families onto exit codes: argument/config problems
exit with 2, numerical and measurement failures with 3.
"""


class WeakIsingError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class InvalidArgumentError(WeakIsingError, ValueError):
    """An argument lies outside the domain of the operation."""

    exit_code = 2


class ConfigError(InvalidArgumentError):
    """Run configuration could not be validated or an output would be overwritten."""


class OutOfValidityError(WeakIsingError, ValueError):
    """A closed-form approximation is evaluated outside its range of validity."""

    exit_code = 3


class MeasurementInconsistencyError(WeakIsingError):
    """The requested measurement outcome has (numerically) zero probability."""

    exit_code = 3


class ImpossibleOutcomeError(MeasurementInconsistencyError):
    """Dense-state Kraus application annihilated the state."""


class NumericalFailureError(WeakIsingError, ArithmeticError):
    """A numerical invariant was violated beyond tolerance."""

    exit_code = 3


class FitFailureError(NumericalFailureError):
    """A least-squares fit could not be performed."""


class SingularParameterError(NumericalFailureError):
    """A closed-form expression hit a vanishing denominator."""
