"""
Errors raised by classical states and measurements
"""
from apps.linalg.exceptions import WeakMeasurementError


class LengthMismatch(WeakMeasurementError, ValueError):
    """Phase function and state live on point sets of different size"""


class InvalidClassicalState(WeakMeasurementError, ValueError):
    """Weights are negative or do not sum to one"""


class InvalidPostselector(WeakMeasurementError, ValueError):
    """Postselector values (or spectrum) leave the interval [0, 1]"""


class ZeroSelectionRate(WeakMeasurementError, ZeroDivisionError):
    """The rate of postselection ⟨Π⟩ vanishes"""
