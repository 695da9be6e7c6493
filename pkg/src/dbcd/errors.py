"""Exception hierarchy shared by all modules."""


class DBCDError(Exception):
    """Base class for every error raised by this package."""


class ParameterError(DBCDError, ValueError):
    pass


class PartitionError(ParameterError):
    pass


class StrongConvexityError(ParameterError):
    pass


class CurvatureError(ParameterError):
    pass


class DegenerateBlockError(ParameterError):
    """A block with zero curvature (empty column or row) has no prox step."""


class BudgetError(DBCDError):
    """Exhaustive enumeration would exceed the configured outcome budget."""


class TopologyError(ParameterError):
    pass


class InvariantViolation(DBCDError, RuntimeError):
    pass


class ResidualDriftError(InvariantViolation):
    pass


class DivergenceError(DBCDError, ArithmeticError):
    pass


class InstanceParseError(DBCDError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
