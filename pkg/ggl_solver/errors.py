"""Exceptions raised by the solvers and the data layer."""


class GglError(Exception):
    """Base class for every error raised by ggl_solver."""


class SolverError(GglError):
    """A solver could not finish; carries whatever it had recorded."""

    def __init__(self, message: str, trace=None, diagnostics: dict | None = None):
        """Initialize the solver error."""
        super().__init__(message)
        self.trace = trace
        self.diagnostics: dict = diagnostics or {}


class ConvergenceError(SolverError):
    """The iteration cap was hit before the tolerance was met."""

    def __init__(self, message: str, trace=None, diagnostics: dict | None = None, last_iterate=None):
        """Initialize the convergence error with the last iterate."""
        super().__init__(message, trace, diagnostics)
        self.last_iterate = last_iterate


class ProblemFileError(GglError, OSError):
    """A problem, manifest or result file could not be read or written."""

    def __init__(self, message: str, paths: list[str] | None = None):
        """Initialize the file error."""
        super().__init__(message)
        self.paths: list[str] = paths or []


class DataValidationError(GglError, ValueError):
    """Input matrices violate symmetry, semidefiniteness or shape requirements."""
