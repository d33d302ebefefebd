"""
Errors raised by density operators, quantum measurement and weak values
"""
from apps.classical.exceptions import InvalidPostselector, ZeroSelectionRate
from apps.linalg.exceptions import WeakMeasurementError

__all__ = [
    'DimMismatch',
    'InvalidDensityOperator',
    'InvalidPostselector',
    'MixedPrePostState',
    'OrthogonalPrePost',
    'ZeroSelectionRate',
]


class DimMismatch(WeakMeasurementError, ValueError):
    """State and observable act on spaces of different dimension"""


class InvalidDensityOperator(WeakMeasurementError, ValueError):
    """Matrix is not a unit-trace nonnegative Hermitian operator"""


class OrthogonalPrePost(WeakMeasurementError, ZeroDivisionError):
    """Pre- and postselected states are orthogonal, weak value undefined"""


class MixedPrePostState(WeakMeasurementError, ValueError):
    """Complex weak value needs pure pre- and postselected states"""
