"""Exception hierarchy.

Every error raised on purpose by the package derives from :class:`FsstabError`.
The CLI maps the three families below to exit codes 2, 3 and 4.
"""


class FsstabError(Exception):
    """Base class for all package errors."""


class ConfigError(FsstabError, ValueError):
    """Invalid configuration, hyperparameter or argument."""


class BoundsError(ConfigError):
    """An integer argument (usually ``k``) is outside its valid range."""


class DataError(FsstabError, ValueError):
    """Input data violates a contract."""


class SchemaError(DataError):
    pass


class FormatError(DataError):
    pass


class EmptyDataError(DataError):
    pass


class DegenerateSampleError(DataError):
    """A resample could not be drawn with both classes present."""


class StratificationError(DataError):
    pass


class TrainingError(DataError):
    """A model cannot be trained on the supplied data (e.g. a single class)."""


class ShapeError(DataError):
    pass


class NumericError(FsstabError, ArithmeticError):
    """A numeric quantity is undefined or a computation failed."""


class UndefinedAUCError(NumericError, ValueError):
    pass


class DomainError(NumericError, ValueError):
    pass


class GenerationError(NumericError):
    pass


class PipelineStageError(FsstabError):
    """Wraps the error that aborted a pipeline run, naming the stage."""

    def __init__(self, stage, cause):
        self.stage = stage
        self.cause = cause
        super().__init__(f"pipeline stage '{stage}' failed: {cause}")


def exit_code_for(exc):
    """CLI exit code for an exception raised by the package."""
    if isinstance(exc, PipelineStageError):
        return exit_code_for(exc.cause)
    if isinstance(exc, ConfigError):
        return 2
    if isinstance(exc, DataError):
        return 3
    if isinstance(exc, NumericError):
        return 4
    return 1
