"""Exception hierarchy.

Errors fall into three families, each mapped to its own CLI exit code:
ingestion problems (:class:`IngestError`), invalid configuration
(:class:`ConfigError`) and numerical failures (:class:`NumericError`).
"""


class CodaError(ValueError):
    """Base class for every error raised by the package."""

    exit_code = 1


class IngestError(CodaError):
    exit_code = 2


class ConfigError(CodaError):
    exit_code = 3


class NumericError(CodaError):
    exit_code = 4


# ingestion
class ParseError(IngestError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DuplicateCell(IngestError):
    pass


class MissingCell(IngestError):
    pass


class NegativeDeaths(IngestError):
    pass


# configuration / shape contracts
class AlphaOutOfRange(ConfigError):
    pass


class PartCountTooSmall(ConfigError):
    pass


class LengthMismatch(ConfigError):
    pass


class ShapeMismatch(ConfigError):
    pass


class InsufficientYears(ConfigError):
    pass


class TooFewYears(ConfigError):
    pass


class EmptySamples(ConfigError):
    pass


# numerics
class YearWithZeroTotal(NumericError):
    pass


class AllZeroVector(NumericError):
    pass


class NegativeEntry(NumericError):
    pass


class NonPositivePerturbation(NumericError):
    pass


class ZeroInColumn(NumericError):
    pass


class AllPartsDropped(NumericError):
    pass


class NonPositiveComponent(NumericError):
    pass


class AllZeroRow(NumericError):
    pass


class AllComponentsClamped(NumericError):
    pass


class NonPositiveRate(NumericError):
    pass


class PipelineError(CodaError):
    """A stage failure inside the forecasting pipeline.

    Carries the stage name and inherits the exit code of the underlying
    error so the CLI can report the right family.
    """

    def __init__(self, stage, cause):
        self.stage = stage
        self.cause = cause
        self.exit_code = getattr(cause, "exit_code", 1)
        super().__init__(f"[{stage}] {type(cause).__name__}: {cause}")
