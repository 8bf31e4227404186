"""Exception hierarchy shared across the package."""


class MadregError(Exception):
    """Base class for all errors raised by madreg."""


class InvalidDimensionsError(MadregError, ValueError):
    pass


class DimensionMismatchError(MadregError, ValueError):
    pass


class RankDeficientError(MadregError, ValueError):
    pass


class SolverFailure(MadregError, RuntimeError):
    pass


class ZeroMADError(MadregError, ValueError):
    """Raised when the fit interpolates every observation."""


class CorrectionTooLargeError(MadregError, ValueError):
    """Raised when a bias correction factor reaches 1 or more."""


class DegenerateSampleError(MadregError, ValueError):
    pass


class NegativeGapError(MadregError, ValueError):
    pass


class InsufficientDataError(MadregError, ValueError):
    pass


class ConfigError(MadregError, ValueError):
    pass


class SimulationError(MadregError, RuntimeError):
    """Raised when too many replicates of a cell failed.

    The partially failed table is attached as ``table`` so callers can still
    persist it.
    """

    def __init__(self, message, table=None):
        super().__init__(message)
        self.table = table
