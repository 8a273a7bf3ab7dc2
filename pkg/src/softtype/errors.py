"""Exception hierarchy shared by every softtype module."""


class SoftTypeError(Exception):
    """Base class for all errors raised by softtype."""


class MalformedConstraintError(SoftTypeError):
    pass


class DimensionError(SoftTypeError):
    pass


class DomainError(SoftTypeError):
    pass


class EnumerationCapError(SoftTypeError):
    pass


class ParseError(SoftTypeError):
    """Syntax error carrying a 1-based source location."""

    def __init__(self, message, line, column, path=None):
        self.message = message
        self.line = line
        self.column = column
        self.path = path
        where = f"{path}:" if path else ""
        super().__init__(f"{where}{line}:{column}: {message}")


class ConstraintGenerationError(SoftTypeError):
    pass


class MatrixFormatError(SoftTypeError):
    pass


class CheckpointError(SoftTypeError):
    pass


class TrainingDivergedError(SoftTypeError):
    pass


class PipelineError(SoftTypeError):
    pass
