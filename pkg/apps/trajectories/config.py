from dataclasses import dataclass
from functools import cached_property
from math import sqrt

import numpy as np

from .exceptions import InvalidConfig

# dt may not exceed g2 / STABILITY_RATIO
STABILITY_RATIO = 10.0


@dataclass(frozen=True)
class ContinuousMeasurementConfig:
    """
    Time grid of a continuous measurement at rate constant g² = σ²/ν.

    ``record_every`` thins the stored snapshots; the final time is always
    recorded.
    """
    g2: float
    dt: float
    t_final: float
    record_every: int = 1

    def __post_init__(self):
        errors = {}
        if not self.g2 > 0:
            errors['g2'] = "must be positive"
        if not self.dt > 0:
            errors['dt'] = "must be positive"
        elif self.g2 > 0 and self.dt > self.g2 / STABILITY_RATIO:
            errors['dt'] = f"must not exceed g2/{STABILITY_RATIO:g} = {self.g2 / STABILITY_RATIO:g}"
        if not self.t_final > 0:
            errors['t_final'] = "must be positive"
        if int(self.record_every) != self.record_every or self.record_every < 1:
            errors['record_every'] = "must be a positive integer"
        if errors:
            raise InvalidConfig(errors)

    @property
    def g(self):
        return sqrt(self.g2)

    @cached_property
    def n_steps(self):
        return max(1, int(round(self.t_final / self.dt)))

    @cached_property
    def record_indices(self):
        """Step indices at which snapshots are stored, 0 and n_steps included"""
        indices = np.arange(0, self.n_steps + 1, int(self.record_every))
        if indices[-1] != self.n_steps:
            indices = np.append(indices, self.n_steps)
        return indices

    @property
    def times(self):
        return self.record_indices * self.dt

    def refined(self, factor):
        """Same horizon and recorded times on a grid ``factor`` times finer"""
        return ContinuousMeasurementConfig(
            g2=self.g2,
            dt=self.dt / factor,
            t_final=self.t_final,
            record_every=int(self.record_every) * factor,
        )
