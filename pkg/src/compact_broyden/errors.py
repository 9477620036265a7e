"""Exception hierarchy shared by every module of the package."""


class CompactBroydenError(Exception):
    """Base class for all package errors."""


class DimensionMismatch(CompactBroydenError, ValueError):
    pass


class CurvatureTooSmall(CompactBroydenError, ValueError):
    """Raised when ``|y^T s|`` is negligible relative to ``||y|| ||s||``."""


class NumericalError(CompactBroydenError, ArithmeticError):
    """A numerical failure tied (optionally) to one update step.

    Parameters
    ----------
    reason : str
        Human readable description.
    step : int, optional
        Index ``j`` of the pair whose update failed.
    """

    def __init__(self, reason, step=None):
        self.reason = reason
        self.step = step
        if step is None:
            super().__init__(reason)
        else:
            super().__init__(f"step {step}: {reason}")


class DegenerateDenominator(NumericalError):
    pass


class Sr1Undefined(NumericalError):
    pass


class NearSingularUpdate(NumericalError):
    """A numeric phi sits on top of the SR1 value; mark the step SR1 instead."""


class SingularMiddleMatrix(NumericalError):
    pass


class NumericalBreakdown(NumericalError):
    pass


class ResampleLimitExceeded(NumericalError):
    pass


class PairFileError(CompactBroydenError):
    pass


class ParseError(PairFileError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class SchemaError(PairFileError):
    pass
