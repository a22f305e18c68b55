"""Exception hierarchy.

Every error carries the CLI exit code it maps to, so the command-line
driver never has to keep its own lookup table.
"""


class KormError(Exception):
    exit_code = 1

    def __init__(self, message, **details):
        super().__init__(message)
        self.message = message
        self.details = details

    def to_dict(self):
        return {"error": type(self).__name__, "message": self.message, "details": self.details}


class ConfigError(KormError, ValueError):
    exit_code = 2


class RangeError(ConfigError):
    pass


class ConstraintError(ConfigError):
    pass


class DataError(KormError, ValueError):
    exit_code = 3


class ParseError(DataError):
    pass


class EncodingError(DataError):
    pass


class ShapeError(DataError):
    pass


class DimensionError(DataError):
    pass


class InsufficientDataError(DataError):
    pass


class RunAborted(KormError, RuntimeError):
    exit_code = 4


class DegenerateLowerBoundError(RunAborted):
    pass


class ProgressError(RunAborted):
    pass
