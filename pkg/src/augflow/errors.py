"""Exception hierarchy shared by every solver stage."""


class FlowError(Exception):
    """Base class for all errors raised by this package."""


class ContractViolation(FlowError, ValueError):
    """An operation was called with inputs outside its precondition."""


class SingularResistance(FlowError):
    """A residual capacity hit zero, so a resistance or arc potential is undefined."""

    def __init__(self, arc: int, message: str | None = None):
        self.arc = arc
        super().__init__(message or f"zero residual capacity on arc {arc}")


class UnroutableDemand(FlowError):
    """A demand vector has nonzero net mass inside some connected component."""


class TheoryViolation(FlowError):
    """A runtime check of a proven bound failed; signals a bug or numerical breakdown."""


class IterationLimit(FlowError):
    """The solver used its whole iteration budget without finishing."""


class ArcBudgetExceeded(TheoryViolation):
    """Boosting would grow the arc count past the allowed budget."""


class DimacsParseError(FlowError, ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        where = f"line {line}: " if line is not None else ""
        super().__init__(where + message)
