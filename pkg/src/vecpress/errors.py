"""Exception hierarchy. Every data-level failure maps to a DataError subclass
so the CLI can translate it to a single documented exit code."""


class VecpressError(Exception):
    """Base class for all package errors."""


class DataError(VecpressError):
    """Invalid input data or file contents (CLI exit code 2)."""


class DimMismatch(DataError):
    pass


class IdCountMismatch(DataError):
    pass


class CorruptRecord(DataError):
    pass


class NonFiniteValue(DataError):
    pass


class IoFailure(DataError):
    pass


class MalformedRow(DataError):
    pass


class DuplicateJudgment(DataError):
    pass


class DuplicateId(DataError):
    pass


class NegativeGrade(DataError):
    pass


class RankGap(DataError):
    pass


class JsonParseError(DataError):
    pass


class EmptySet(DataError):
    pass


class MethodMismatch(DataError):
    pass


class ShapeMismatch(DataError):
    pass


class NonFiniteGradient(DataError):
    pass


class TooFewRows(DataError):
    pass


class EmptyCorpus(DataError):
    pass


class NoRelevant(DataError):
    pass


class EmptyQrels(DataError):
    pass


class GridMismatch(DataError):
    pass


class ConfigError(DataError):
    pass


class ArmFailure(VecpressError):
    """Wraps a module error with the name of the experiment arm it occurred in."""

    def __init__(self, arm: str, cause: Exception):
        super().__init__(f"arm '{arm}' failed: {cause}")
        self.arm = arm
        self.cause = cause
