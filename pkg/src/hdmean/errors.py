"""Exception types raised by the tests, generators and the harness."""


class HDMeanError(Exception):
    """Base class for all package errors."""


class InsufficientSampleError(HDMeanError, ValueError):
    """Too few observations for the requested statistic."""


class DegenerateDataError(HDMeanError, ValueError):
    """The data leave the statistic undefined (zero variance estimate)."""


class ShapeError(HDMeanError, ValueError):
    """Inputs with incompatible shapes."""


class ConfigError(HDMeanError, ValueError):
    """Invalid simulation or command line configuration."""
