"""Exception hierarchy shared by all dwa modules.

Three branches map onto the CLI exit codes: ConfigError (2), DataError (3)
and NumericalError (4).
"""


class DwaError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(DwaError):
    """Invalid or inconsistent configuration."""


class DataError(DwaError):
    """Invalid, missing or inconsistent data."""


class NumericalError(DwaError):
    """Numerical failure (non-finite values, impossible computation)."""


# -- configuration ----------------------------------------------------------

class InvalidConfig(ConfigError):
    pass


class UnknownConfigKey(ConfigError):
    pass


class InvalidDims(ConfigError):
    pass


# -- corpus / io ------------------------------------------------------------

class MissingFile(DataError):
    pass


class IoError(DataError):
    pass


class MalformedRow(DataError):
    def __init__(self, file: str, line: int, reason: str):
        self.file = str(file)
        self.line = line
        self.reason = reason
        super().__init__(f"{file}:{line}: {reason}")


class DimensionMismatch(DataError):
    pass


class PortionOutOfRange(DataError):
    pass


class EmptySplit(DataError):
    pass


class EmptyGlobalSplit(DataError):
    pass


class EmptyPersonalSplit(DataError):
    pass


class UnlabeledSpan(DataError):
    pass


# -- segmentation / metrics -------------------------------------------------

class InvalidSpan(DataError):
    pass


class LengthMismatch(DataError):
    pass


class EmptyInput(DataError):
    pass


# -- augmentation -----------------------------------------------------------

class PoolTooSmall(DataError):
    pass


class FingerprintMismatch(DataError):
    pass


class MissingPool(ConfigError):
    pass


# -- training ---------------------------------------------------------------

class EmptyBatch(DataError):
    pass


class EmptySet(DataError):
    pass
