"""
Errors raised by the time-continuous measurement integrators
"""
from apps.linalg.exceptions import WeakMeasurementError


class InvalidConfig(WeakMeasurementError, ValueError):
    """Integrator configuration violates its constraints"""

    def __init__(self, errors):
        self.errors = dict(errors)
        message = "; ".join(f"{field}: {text}" for field, text in self.errors.items())
        super().__init__(message)


class StepUnstable(WeakMeasurementError, ArithmeticError):
    """Integration step too large for the Euler–Maruyama update"""
