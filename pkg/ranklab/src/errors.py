"""Exception hierarchy.

Every error carries the exit code the command-line driver maps it to:

    2  usage / configuration
    3  file I/O
    4  validation (data or model identification)
    5  numerical (precision loss, non-convergence)
"""


class RanklabError(Exception):
    exit_code = 1


class UsageError(RanklabError, ValueError):
    exit_code = 2


class ConfigError(UsageError):
    pass


class DataIOError(RanklabError, OSError):
    exit_code = 3


class ValidationError(RanklabError, ValueError):
    exit_code = 4


class InconsistentTimestampError(ValidationError):
    pass


class IdentificationError(ValidationError):
    def __init__(self, covariate: str, message: str | None = None):
        self.covariate = covariate
        super().__init__(
            message
            or f"covariate '{covariate}' does not vary within any choice set and is not identified"
        )


class DegenerateClusterError(ValidationError):
    pass


class NumericalError(RanklabError, ArithmeticError):
    exit_code = 5


class PrecisionLossError(NumericalError):
    pass


class ExactMethodCapError(NumericalError):
    pass


class NonFiniteIndexError(NumericalError):
    pass


class ConvergenceError(NumericalError):
    pass


class NormalizationError(NumericalError):
    pass
