"""
Error types shared by the simulation apps
"""


class WeakMeasurementError(Exception):
    """Base class for every domain error raised by the simulation apps"""


class NonHermitian(WeakMeasurementError, ValueError):
    """Matrix fails the conjugate-symmetry check"""


class DimensionTooLarge(WeakMeasurementError, ValueError):
    """Matrix dimension exceeds the dense-solver cap"""
