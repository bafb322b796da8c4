"""Exception types shared across the package."""


class RegnetsError(Exception):
    """Base class for all package errors."""


class GridError(RegnetsError):
    """Invalid grid parameters or grid mismatch between operands."""


class ResolutionError(RegnetsError):
    """Grid spacing too coarse to resolve the requested scale."""

    def __init__(self, message, required_points=None):
        super().__init__(message)
        self.required_points = required_points


class UnsupportedOrderError(RegnetsError):
    """Derivative / Sobolev order beyond the supported range."""


class PositivityError(RegnetsError):
    """A quantity that must be strictly positive is not."""


class BoxTooSmallError(RegnetsError):
    """Domain box does not contain a required support set."""

    def __init__(self, message, required_half_width=None):
        super().__init__(message)
        self.required_half_width = required_half_width


class SolverError(RegnetsError):
    """Linear solve failed to reach the requested residual."""


class ReferenceError_(RegnetsError):
    """Fine reference solution failed its self-convergence check."""


class ConfigError(RegnetsError):
    """Experiment configuration failed schema validation."""

    def __init__(self, message, line=None):
        super().__init__(message)
        self.line = line
