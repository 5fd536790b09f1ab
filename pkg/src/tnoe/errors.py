"""Exception types raised by the package."""


class TnoeError(Exception):
    """Base class for all package errors."""


class ModelParseError(TnoeError):
    pass


class ModelValidationError(TnoeError):
    """Raised when a model violates an invariant. ``field`` names the culprit."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field


class DimensionMismatch(TnoeError):
    pass


class StepUnstable(TnoeError):
    """Numerical blow-up during propagation; ``block`` names the offending amplitude block."""

    def __init__(self, message, block=None, x=None):
        super().__init__(message)
        self.block = block
        self.x = x


class DegenerateConstraint(TnoeError):
    """The particle-number constraint can no longer fix the chemical potential."""


class NonPositiveZ(TnoeError):
    pass


class NonPositiveTemperature(TnoeError):
    pass


class BasisCapExceeded(TnoeError):
    pass


class NoConvergence(TnoeError):
    pass


class NyquistError(TnoeError):
    def __init__(self, message, required_dtau=None):
        super().__init__(message)
        self.required_dtau = required_dtau
