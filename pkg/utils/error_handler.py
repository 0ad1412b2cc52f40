from enum import Enum

from utils.exceptions import (
    AlignmentParseError,
    AlignmentRangeError,
    ConfigurationError,
    ConlluParseError,
    CorpusStructureError,
    CountMismatchError,
    LineCountMismatchError,
    MorphemeExhaustionError,
    MorphSuiteException,
    ScoreFileError,
    ValidationError,
)


class ErrorCategory(Enum):
    INPUT = ("Input error", 2)
    IO = ("I/O error", 3)
    VALIDATION = ("Validation error", 4)
    UNKNOWN = ("Unknown error", 1)

    @property
    def label(self) -> str:
        return self.value[0]

    @property
    def exit_code(self) -> int:
        return self.value[1]


_INPUT_ERRORS = (
    ConfigurationError,
    ConlluParseError,
    CorpusStructureError,
    AlignmentParseError,
    AlignmentRangeError,
    CountMismatchError,
    LineCountMismatchError,
    MorphemeExhaustionError,
    ScoreFileError,
)


def categorize(error: BaseException) -> ErrorCategory:
    if isinstance(error, ValidationError):
        return ErrorCategory.VALIDATION
    if isinstance(error, _INPUT_ERRORS):
        return ErrorCategory.INPUT
    if isinstance(error, OSError):
        return ErrorCategory.IO
    return ErrorCategory.UNKNOWN


class ErrorHandler:
    def __init__(self, logger):
        self.logger = logger

    def handle_error(self, error: BaseException, category: ErrorCategory = None) -> int:
        """Log the error with its context and return the process exit code."""
        category = category or categorize(error)
        context = {}
        if isinstance(error, MorphSuiteException):
            context = dict(error.context)
            if error.error_code:
                context["error_code"] = error.error_code
        self.logger.error(
            category.label,
            error=str(error),
            error_type=type(error).__name__,
            exit_code=category.exit_code,
            **context,
        )
        return category.exit_code
