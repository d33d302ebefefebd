"""
Errors raised by Monte Carlo experiments
"""
from apps.linalg.exceptions import WeakMeasurementError


class NoAcceptedRuns(WeakMeasurementError, RuntimeError):
    """Postselection discarded every run"""


class Unconverged(WeakMeasurementError, RuntimeError):
    """Too many trajectories missed the collapse criterion by t_final"""

    def __init__(self, message, fraction=None):
        super().__init__(message)
        self.fraction = fraction
