"""Exception hierarchy shared by every module of the package."""


class PolytensionError(Exception):
    """Base class for all package errors."""


class ConfigurationError(PolytensionError, ValueError):
    """Invalid parameters, inconsistent grid/mode choices or malformed configs."""

    def __init__(self, message, path=None):
        self.path = path
        if path:
            message = f"{path}: {message}"
        super().__init__(message)


class GeometryError(PolytensionError):
    """A metric failed to be symmetric positive definite."""

    def __init__(self, message, point=None):
        self.point = point
        super().__init__(message)


class ChartExitError(GeometryError):
    """A map or point left the admissible chart domain of the target."""


class NumericalError(PolytensionError, ArithmeticError):
    """Non-finite values in a field or integrand."""

    def __init__(self, message, node=None):
        self.node = node
        super().__init__(message)


class PerturbationError(PolytensionError):
    """A finite-difference perturbation could not be kept admissible."""
