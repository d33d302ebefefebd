"""
Stored trajectories and their CSV form
"""
import csv
from dataclasses import dataclass

import numpy as np

from apps.classical.states import ClassicalState


def format_float(x):
    """17 significant digits, enough to round-trip a double"""
    return format(float(x), ".17g")


@dataclass
class TrajectoryRecord:
    """
    Snapshots of one measured trajectory.

    ``alpha`` is the primitive function α_t of the measurement outcome,
    ``states`` holds ClassicalState or DensityOperator snapshots at ``times``.
    """
    times: np.ndarray
    alpha: np.ndarray
    states: list
    wiener_seed: int | None = None
    min_purity: float | None = None
    max_clip: float = 0.0
    unstable_steps: int = 0

    def __post_init__(self):
        if len(self.times) != len(self.alpha) or len(self.times) != len(self.states):
            raise ValueError("times, alpha and states must have equal length")
        if self.alpha[0] != 0:
            raise ValueError("alpha must start at 0")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")

    @property
    def is_classical(self):
        return isinstance(self.states[0], ClassicalState)

    @property
    def final_state(self):
        return self.states[-1]

    def header(self):
        """t, alpha, then the state entries in row-major order"""
        columns = ['t', 'alpha']
        if self.is_classical:
            columns += [f'rho_{i + 1}' for i in range(len(self.states[0]))]
        else:
            dim = self.states[0].dim
            for i in range(dim):
                for j in range(dim):
                    columns += [f'rho_{i}{j}_re', f'rho_{i}{j}_im']
        return columns

    def rows(self):
        for t, a, state in zip(self.times, self.alpha, self.states):
            if self.is_classical:
                entries = [format_float(w) for w in state.weights]
            else:
                entries = []
                for z in state.entries.ravel():
                    entries += [format_float(z.real), format_float(z.imag)]
            yield [format_float(t), format_float(a), *entries]

    def to_csv(self, stream):
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(self.header())
        writer.writerows(self.rows())
