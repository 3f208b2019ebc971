"""Error hierarchy shared by the pipeline stages.

Every error carries the stage that raised it and the process exit code the
command line maps it to.
"""

from __future__ import annotations


class RealizationError(Exception):
    code = 3

    def __init__(self, message: str, stage: str = ""):
        super().__init__(message)
        self.stage = stage

    def __str__(self) -> str:
        msg = super().__str__()
        return f"[{self.stage}] {msg}" if self.stage else msg


class HypothesisViolation(RealizationError):
    """The input set is outside the class the construction applies to."""
    code = 2


class DisconnectedGamma(HypothesisViolation):
    pass


class IsolatedPoint(HypothesisViolation):
    pass


class NumericalFailure(RealizationError):
    code = 3


class Unresolved(NumericalFailure):
    """Raster topology did not stabilise under refinement."""


class NoCycle(NumericalFailure):
    pass


class NGViolation(NumericalFailure):
    pass


class TracingError(NumericalFailure):
    pass


class TransitionError(NumericalFailure):
    pass


class SpecError(RealizationError):
    """Malformed input document (also used for I/O failures)."""
    code = 4

    def __init__(self, message: str, stage: str = "parse", line: int | None = None,
                 column: int | None = None):
        if line is not None:
            message = f"line {line}, column {column}: {message}"
        super().__init__(message, stage)
        self.line = line
        self.column = column


class ScheduleExhausted(NumericalFailure):
    pass
