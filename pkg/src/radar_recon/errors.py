"""Exception types shared across the package."""


class RadarReconError(Exception):
    """Base class for all package errors."""


class ConfigurationError(RadarReconError, ValueError):
    pass


class ShapeError(RadarReconError, ValueError):
    pass


class MeasurementError(RadarReconError):
    """A measurement (e.g. a beamwidth crossing) could not be made."""


class UnsupportedExtrapolationError(RadarReconError):
    """Raised when interpolation is asked to estimate channels outside the input hull."""


class NumericFault(RadarReconError, FloatingPointError):
    pass


class UsageError(RadarReconError, RuntimeError):
    pass


class FormatError(RadarReconError, ValueError):
    """Corrupt or unrecognised on-disk container."""


class UndefinedMetricError(RadarReconError, ValueError):
    pass
