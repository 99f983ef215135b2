"""Exception hierarchy shared by every module."""


class GlobinvError(Exception):
    """Base class for all errors raised by this package."""


class DimensionMismatch(GlobinvError, ValueError):
    pass


class SolverFailure(GlobinvError):
    """A numerical route could not produce an answer.

    ``t`` and ``position`` locate the failure along the integration path
    when known; they are filled in by the integrator if the raiser did not.
    """

    kind = "solver_failure"

    def __init__(self, message, t=None, position=None):
        super().__init__(message)
        self.t = t
        self.position = position


class SingularJacobian(SolverFailure):
    kind = "singular_jacobian"


class PathDiverged(SolverFailure):
    kind = "path_diverged"


class MaxStepsExceeded(SolverFailure):
    kind = "max_steps_exceeded"


class ToleranceNotMet(SolverFailure):
    kind = "tolerance_not_met"


class ParseError(GlobinvError):
    def __init__(self, message, line, column):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column
        self.expected = message


class DomainError(GlobinvError, ArithmeticError):
    """Expression evaluated outside the domain of one of its functions."""

    def __init__(self, message, point=None):
        if point is not None:
            message = f"{message} at x = {list(point)}"
        super().__init__(message)
        self.point = point
