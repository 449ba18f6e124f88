"""Exception types. ``exit_code`` is what the CLI returns when one escapes."""


class LipsampleError(Exception):
    exit_code = 2


class ConfigError(LipsampleError, ValueError):
    exit_code = 2


class ModelFormatError(ConfigError):
    """A model, domain or dataset file failed validation. ``where`` names the field."""

    def __init__(self, message, where=None):
        self.where = where
        super().__init__(f"{where}: {message}" if where else message)


class DimensionMismatch(LipsampleError, ValueError):
    exit_code = 3


class NonFiniteInput(LipsampleError, ValueError):
    exit_code = 3


class NonFiniteMatrix(LipsampleError, ValueError):
    exit_code = 3


class NonFiniteValue(LipsampleError, ValueError):
    exit_code = 3


class UnsupportedNormPair(LipsampleError, ValueError):
    exit_code = 3


class PartitionTooLarge(LipsampleError, ValueError):
    exit_code = 3


class GridTooLarge(LipsampleError, ValueError):
    exit_code = 3


class DivergedLoss(LipsampleError, ArithmeticError):
    exit_code = 3
