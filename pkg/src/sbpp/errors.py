"""Exception hierarchy shared by all modules.

Validation failures (bad parameters, malformed configs) map to CLI exit
code 2; runtime numerical failures map to exit code 3.
"""


class SbppError(Exception):
    """Base class for all package errors."""


class ParameterError(SbppError, ValueError):
    """Invalid parameter or configuration value."""


class NumericalError(SbppError, RuntimeError):
    """A numerical procedure failed at runtime."""


class BracketError(NumericalError):
    """A root/shooting bracket could not be established."""


class IntegrationError(NumericalError):
    """ODE integration failed (e.g. step-size underflow)."""

    def __init__(self, message, last_state=None):
        super().__init__(message)
        self.last_state = last_state


class ProjectionUndefinedError(NumericalError):
    """Nehari projection requested for a field with no positive part."""


class NonDescentError(NumericalError):
    """Line search failed to produce descent; carries the last iterate."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class BarycenterUndefinedError(NumericalError):
    """Circular-mean barycenter has no well-defined direction."""


class ConsistencyError(NumericalError):
    """An internal cross-check (e.g. reduced-energy identity) failed."""
