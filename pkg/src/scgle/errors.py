"""Exception types raised across the package."""


class ScgleError(Exception):
    """Base class for all package errors."""


class ParseError(ScgleError):
    pass


class ValidationError(ScgleError):
    pass


class MissingMode(ScgleError, KeyError):
    pass


class InvalidResolution(ScgleError, ValueError):
    pass


class ShapeMismatch(ScgleError, ValueError):
    pass


class ResolutionMismatch(ScgleError, ValueError):
    pass


class DiagnosticBlowup(ScgleError, FloatingPointError):
    """Raised when the L2 norm of a trajectory leaves the sane range."""

    def __init__(self, step: int, norm: float):
        super().__init__(f"norm_l2={norm!r} at step {step} exceeds blowup threshold")
        self.step = step
        self.norm = norm


class InsufficientLevels(ScgleError, ValueError):
    pass


class DegeneratePoints(ScgleError, ValueError):
    pass
