"""Exception hierarchy shared by the solvers and the CLI."""


class CvarMdpError(Exception):
    """Base class for all package errors."""


class InvalidModelError(CvarMdpError, ValueError):
    """Model or configuration data violates a structural invariant."""

    def __init__(self, message, violations=()):
        super().__init__(message)
        self.violations = list(violations)


class DimensionError(CvarMdpError, ValueError):
    """Array or policy shapes do not match the model."""


class NotErgodicError(CvarMdpError):
    """The policy-induced chain lacks a unique recurrent class."""


class SingularSystemError(CvarMdpError):
    """A linear solve failed or left a residual above tolerance."""


class NonConvergenceError(CvarMdpError):
    """An iterative solver exceeded its iteration cap."""
