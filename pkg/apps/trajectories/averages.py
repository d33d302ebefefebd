"""
Seeded trajectory ensembles and their averages

Trajectory j of an ensemble with master seed s draws its Wiener increments
from SeededRng(derive_run_seed(s, j)). Ensembles are integrated in fixed
blocks, so the numbers do not depend on the thread count.
"""
import logging
from dataclasses import dataclass

import numpy as np

from apps.ensemble.streams import DEFAULT_BLOCK_SIZE, map_blocks, run_generators

from .decoherence import decoherence_evolve
from .integrators import TrajectoryBatch, integrate_classical_batch, integrate_quantum_batch

logger = logging.getLogger(__name__)

MIN_ENSEMBLE = 100
# deviations below this count as agreement where the standard error vanishes
EXACT_TOL = 1e-12


def quantum_ensemble(rho0, obs, cfg, n_traj, seed, threads=1,
                     block_size=DEFAULT_BLOCK_SIZE, scheme='euler') -> TrajectoryBatch:
    def integrate(block):
        return integrate_quantum_batch(rho0, obs, cfg, run_generators(seed, block), scheme=scheme)

    logger.info(f"integrating {n_traj} quantum trajectories (seed={seed}, threads={threads})")
    return TrajectoryBatch.concatenate(map_blocks(integrate, n_traj, threads, block_size))


def classical_ensemble(state0, f, cfg, n_traj, seed, threads=1,
                       block_size=DEFAULT_BLOCK_SIZE) -> TrajectoryBatch:
    def integrate(block):
        return integrate_classical_batch(state0, f, cfg, run_generators(seed, block))

    logger.info(f"integrating {n_traj} classical trajectories (seed={seed}, threads={threads})")
    return TrajectoryBatch.concatenate(map_blocks(integrate, n_traj, threads, block_size))


def _stderr(samples):
    return samples.std(axis=0, ddof=1) / np.sqrt(samples.shape[0])


def _within(deviation, stderr, k):
    return np.abs(deviation) <= np.maximum(k * stderr, EXACT_TOL)


@dataclass
class EnsembleAverageReport:
    """
    Ensemble mean of the recorded states against a reference, elementwise.

    Real and imaginary parts carry separate standard errors; ``stderr_im``
    is None for classical weights.
    """
    times: np.ndarray
    mean: np.ndarray
    reference: np.ndarray
    stderr_re: np.ndarray
    stderr_im: np.ndarray | None
    n_traj: int
    seed: int

    @property
    def deviation(self):
        return self.mean - self.reference

    @property
    def max_deviation(self):
        return float(np.max(np.abs(self.deviation)))

    @property
    def max_z(self):
        """Largest |deviation| / stderr, skipping exact entries (stderr 0 or |deviation| ≤ EXACT_TOL)"""
        parts = [(self.deviation.real, self.stderr_re)]
        if self.stderr_im is not None:
            parts.append((self.deviation.imag, self.stderr_im))
        worst = 0.0
        for deviation, stderr in parts:
            resolved = (stderr > 0) & (np.abs(deviation) > EXACT_TOL)
            if np.any(resolved):
                worst = max(worst, float(np.max(np.abs(deviation[resolved]) / stderr[resolved])))
        return worst

    def passes(self, k=3.0):
        """Every entry within k standard errors (or EXACT_TOL where stderr is 0)"""
        ok = np.all(_within(self.deviation.real, self.stderr_re, k))
        if self.stderr_im is not None:
            ok = ok and np.all(_within(self.deviation.imag, self.stderr_im, k))
        return bool(ok)

    @property
    def offdiag_magnitude(self):
        """|E[ρ₀₁]| at each recorded time (quantum reports only)"""
        return np.abs(self.mean[:, 0, 1])


def ensemble_average_check(rho0, obs, cfg, n_traj, seed, threads=1,
                           block_size=DEFAULT_BLOCK_SIZE, scheme='euler') -> EnsembleAverageReport:
    """
    Average n_traj quantum trajectories at each recorded time and compare
    with the exact decoherence solution.
    """
    if n_traj < MIN_ENSEMBLE:
        raise ValueError(f"n_traj must be at least {MIN_ENSEMBLE}")
    batch = quantum_ensemble(rho0, obs, cfg, n_traj, seed, threads, block_size, scheme)
    reference = np.array([decoherence_evolve(rho0, obs, cfg.g2, t).entries for t in batch.times])
    report = EnsembleAverageReport(
        times=batch.times,
        mean=batch.states.mean(axis=0),
        reference=reference,
        stderr_re=_stderr(batch.states.real),
        stderr_im=_stderr(batch.states.imag),
        n_traj=n_traj,
        seed=seed,
    )
    logger.info(f"quantum ensemble average: max deviation {report.max_deviation:.3e}, "
                f"max z {report.max_z:.2f}")
    return report


def classical_ensemble_average_check(state0, f, cfg, n_traj, seed, threads=1,
                                     block_size=DEFAULT_BLOCK_SIZE) -> EnsembleAverageReport:
    """Ensemble-averaged weights against the initial weights"""
    if n_traj < MIN_ENSEMBLE:
        raise ValueError(f"n_traj must be at least {MIN_ENSEMBLE}")
    batch = classical_ensemble(state0, f, cfg, n_traj, seed, threads, block_size)
    return classical_average_report(batch, state0, seed)


def classical_average_report(batch, state0, seed) -> EnsembleAverageReport:
    """Martingale check of an already integrated classical batch"""
    reference = np.tile(state0.weights, (len(batch.times), 1))
    report = EnsembleAverageReport(
        times=batch.times,
        mean=batch.states.mean(axis=0),
        reference=reference,
        stderr_re=_stderr(batch.states),
        stderr_im=None,
        n_traj=batch.n_traj,
        seed=seed,
    )
    logger.info(f"classical ensemble average: max deviation {report.max_deviation:.3e}, "
                f"max z {report.max_z:.2f}")
    return report
