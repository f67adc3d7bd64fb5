"""Exception hierarchy shared by every hydrocascade module."""


class HydroError(Exception):
    """Base class for all errors raised by hydrocascade."""


class ValidationError(HydroError, ValueError):
    """A model or scenario violates a structural invariant."""


class CycleDetected(ValidationError):
    pass


class BoundViolation(ValidationError):
    pass


class DanglingReference(ValidationError):
    pass


class MissingGauge(ValidationError):
    pass


class OutOfRange(HydroError, ValueError):
    """Argument outside the span of a gauge curve."""


class NegativeDelay(HydroError, ValueError):
    pass


class LengthMismatch(HydroError, ValueError):
    pass


class HorizonZero(HydroError, ValueError):
    pass


class MissingKe(HydroError, KeyError):
    pass


class BadBounds(HydroError, ValueError):
    pass


class SolverStall(HydroError, RuntimeError):
    """The simplex loop failed to terminate or lost feasibility numerically."""


class NodeLimitExceeded(HydroError, RuntimeError):
    pass


class NotOptimal(HydroError):
    pass


class InternalError(HydroError, RuntimeError):
    pass


class InfeasibleSchedule(HydroError):
    """No schedule satisfies the constraints; ``diagnosis`` holds readable hints."""

    def __init__(self, message, diagnosis=()):
        super().__init__(message)
        self.diagnosis = list(diagnosis)


class UnboundedModel(HydroError):
    pass


class ParseError(HydroError, ValueError):
    def __init__(self, message, path=None, line=None):
        where = ""
        if path is not None:
            where = f"{path}:{line}: " if line is not None else f"{path}: "
        super().__init__(where + message)
        self.path = path
        self.line = line


class ColumnMismatch(ParseError):
    pass
