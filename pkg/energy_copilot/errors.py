"""
Exception hierarchy shared by every module.

Input problems derive from ValueError so callers that only know the standard
library still catch them.
"""


class EnergyCopilotError(Exception):
    """Base class for all toolkit errors."""


class InvalidInput(EnergyCopilotError, ValueError):
    """Arguments violate an operation's preconditions."""


class EmptyInput(InvalidInput):
    pass


class LengthMismatch(InvalidInput):
    pass


class ZeroActualValue(InvalidInput):
    pass


class TooFewSamples(InvalidInput):
    pass


class NonMonotoneTimestamps(InvalidInput):
    pass


class RankDeficientDesign(EnergyCopilotError):
    """The power regressors cannot be separated by the available observations."""

    def __init__(self, message: str, columns: list[str] | None = None):
        super().__init__(message)
        self.columns = columns or []


class DegenerateData(EnergyCopilotError):
    """Training samples carry no feature variation but conflicting targets."""


class NoConvergence(EnergyCopilotError):
    """The dual solver hit its iteration cap before reaching the KKT tolerance."""

    def __init__(self, message: str, max_iter: int, n_iter: int | None = None):
        super().__init__(message)
        self.max_iter = max_iter
        self.n_iter = n_iter


class AllGridPointsFailed(EnergyCopilotError):
    """Every hyperparameter point of a grid search raised during training."""

    def __init__(self, message: str, failures: list[tuple[object, str]]):
        super().__init__(message)
        self.failures = failures


class Infeasible(EnergyCopilotError):
    """No configuration satisfies the constraints."""

    def __init__(self, bound: str, detail: str):
        super().__init__(f"no configuration satisfies the constraints; tightest bound {bound}: {detail}")
        self.bound = bound
        self.detail = detail


class DataFormatError(EnergyCopilotError):
    """A file does not follow its published schema."""


class ParseError(DataFormatError):
    def __init__(self, line: int, reason: str, path: str | None = None):
        where = f"{path}:{line}" if path else f"line {line}"
        super().__init__(f"{where}: {reason}")
        self.line = line
        self.reason = reason
        self.path = path


class SchemaMismatch(DataFormatError):
    pass


class VersionMismatch(DataFormatError):
    pass
