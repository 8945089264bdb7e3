"""Exception types shared across the package."""


class SensorSchedError(Exception):
    """Base class for all package-specific errors."""


class NotPositiveDefiniteError(SensorSchedError):
    """A matrix required to be symmetric positive definite is not."""


class DimensionMismatchError(SensorSchedError):
    """Operands have inconsistent dimensions."""


class WrongFormError(SensorSchedError):
    """The prior is not stored in the representation this operation needs."""


class InvalidParamsError(SensorSchedError):
    """Bad sensor parameters, or a sensor evaluated at a singular point."""


class TooLargeError(SensorSchedError):
    """Exhaustive enumeration would exceed the configured cap."""


class OracleInconsistencyError(SensorSchedError):
    """The entropy oracle returned a gain pattern that monotonicity forbids."""


class ConfigError(SensorSchedError):
    """A scenario config failed validation; the message names the field."""
