"""Custom exceptions for the morphsuite toolkit."""

class MorphSuiteException(Exception):
    """Base exception for morphsuite errors."""

    def __init__(self, message: str, error_code: str = None, **kwargs):
        super().__init__(message)
        self.message = message
        self.error_code = error_code
        self.context = kwargs

class ConlluParseError(MorphSuiteException):
    """Raised when a CoNLL-U line cannot be parsed."""
    pass

class CorpusStructureError(MorphSuiteException):
    """Raised when a parsed sentence violates the tree invariants."""
    pass

class AlignmentParseError(MorphSuiteException):
    """Raised when an alignment line is not Pharaoh formatted."""
    pass

class AlignmentRangeError(MorphSuiteException):
    """Raised when an alignment index points outside its sentence."""
    pass

class CountMismatchError(MorphSuiteException):
    """Raised when parallel inputs disagree in length."""
    pass

class MorphemeExhaustionError(MorphSuiteException):
    """Raised when no admissible morpheme can be drawn for a slot."""
    pass

class ConfigurationError(MorphSuiteException):
    """Raised when configuration is invalid."""
    pass

class InventoryMismatchError(ConfigurationError):
    """Raised when the inventory does not cover the configured patterns."""
    pass

class LineCountMismatchError(MorphSuiteException):
    """Raised when system outputs are not line-parallel with the test set."""
    pass

class ScoreFileError(MorphSuiteException):
    """Raised when a fluency score file is malformed."""
    pass

class ValidationError(MorphSuiteException):
    """Raised when emitted outputs fail validation."""
    pass
