"""
Time-continuous measurement by Euler–Maruyama integration

Classical (Kushner–Stratonovich):
    dα = ⟨A⟩ dt + g dW,      dρ = g⁻¹ (A − ⟨A⟩) ρ dW
Quantum:
    dα = ⟨Â⟩ dt + g dW,      dρ̂ = −(8g²)⁻¹ [Â,[Â,ρ̂]] dt + g⁻¹ ((Âρ̂ + ρ̂Â)/2 − ⟨Â⟩ρ̂) dW

Both integrators work on whole batches of trajectories at once. Trajectory k
of a batch only ever touches row k of every array and draws its increments
from its own generator, so integrating it alone gives the same numbers as
integrating it inside an ensemble.

The quantum update is carried out in the eigenbasis of Â, where the double
commutator and the anticommutator act elementwise; snapshots are rotated back
before they are stored.
"""
import logging
from dataclasses import dataclass

import numpy as np

from apps.classical.exceptions import LengthMismatch
from apps.classical.states import ClassicalState
from apps.linalg.spectral import hermitize
from apps.quantum.measurement import as_observable, check_dims
from apps.quantum.states import DensityOperator

from .exceptions import StepUnstable
from .records import TrajectoryRecord

logger = logging.getLogger(__name__)

CHUNK_STEPS = 512
MAX_TRACE_DRIFT = 0.1
UNSTABLE_STEP_FRACTION = 0.01
REPAIR_WARNING = 1e-2
SCHEMES = ('euler', 'kraus')


def wiener_increments(rng, n_steps, dt):
    """ΔW_k ~ N(0, dt), k = 0 … n_steps − 1"""
    return np.sqrt(dt) * rng.standard_normal(n_steps)


def coarsen_increments(dW, factor):
    """Sum ``factor`` consecutive increments: the same Wiener path on a coarser grid"""
    dW = np.asarray(dW, dtype=float)
    n = dW.shape[-1]
    if factor < 1 or n % factor:
        raise ValueError(f"cannot coarsen {n} increments by {factor}")
    return dW.reshape(*dW.shape[:-1], n // factor, factor).sum(axis=-1)


def _batch_size(source):
    if isinstance(source, np.ndarray):
        if source.ndim != 2:
            raise ValueError("explicit increments must have shape (n_traj, n_steps)")
        return source.shape[0]
    return len(source)


def _increment_chunks(source, n_steps, dt):
    """Yield blocks of ΔW with shape (steps, n_traj)"""
    if isinstance(source, np.ndarray):
        if source.shape[1] < n_steps:
            raise ValueError(f"{source.shape[1]} increments for {n_steps} steps")
        for start in range(0, n_steps, CHUNK_STEPS):
            stop = min(start + CHUNK_STEPS, n_steps)
            yield np.ascontiguousarray(source[:, start:stop].T)
        return
    scale = np.sqrt(dt)
    for start in range(0, n_steps, CHUNK_STEPS):
        size = min(CHUNK_STEPS, n_steps - start)
        block = np.stack([scale * rng.standard_normal(size) for rng in source])
        yield np.ascontiguousarray(block.T)


def _source_seeds(source):
    if isinstance(source, np.ndarray):
        return None
    return [getattr(rng, 'seed', None) for rng in source]


def _weighted_sum(rows, values):
    # column-by-column so each row is summed in the same order at any batch size
    total = rows[:, 0] * values[0]
    for i in range(1, len(values)):
        total = total + rows[:, i] * values[i]
    return total


def _diagonal_sum(stack, values=None):
    total = stack[:, 0, 0].real * (1.0 if values is None else values[0])
    for i in range(1, stack.shape[-1]):
        total = total + stack[:, i, i].real * (1.0 if values is None else values[i])
    return total


def _clip_qubit(stack):
    p = stack[:, 0, 0].real
    q = stack[:, 1, 1].real
    half_trace = 0.5 * (p + q)
    radius = np.sqrt((0.5 * (p - q)) ** 2 + np.abs(stack[:, 0, 1]) ** 2)
    lower = half_trace - radius
    clipped = np.clip(-lower, 0.0, None)
    bad = lower < 0
    if np.any(bad):
        upper = half_trace[bad] + radius[bad]
        # λ₊P₊ with P₊ = (ρ − λ₋I)/(λ₊ − λ₋)
        shifted = stack[bad] - lower[bad][:, None, None] * np.eye(2)
        stack = stack.copy()
        stack[bad] = shifted * (upper / (2.0 * radius[bad]))[:, None, None]
    return stack, clipped


def clip_negative_spectrum(stack):
    """
    Set negative eigenvalues of each Hermitian matrix in ``stack`` to zero.

    Returns (repaired stack, magnitude of the most negative eigenvalue per
    matrix, 0 where none was negative).
    """
    if stack.shape[-1] == 2:
        return _clip_qubit(stack)
    values, vectors = np.linalg.eigh(stack)
    lowest = values[:, 0]
    clipped = np.clip(-lowest, 0.0, None)
    bad = lowest < 0
    if np.any(bad):
        kept = np.clip(values[bad], 0.0, None)
        basis = vectors[bad]
        stack = stack.copy()
        stack[bad] = (basis * kept[:, None, :]) @ np.conj(np.swapaxes(basis, -1, -2))
    return stack, clipped


@dataclass
class TrajectoryBatch:
    """
    Snapshots of a batch of trajectories at ``times``.

    ``states`` has shape (n_traj, n_times, n) for classical weights and
    (n_traj, n_times, d, d) for density matrices.
    """
    times: np.ndarray
    alpha: np.ndarray
    states: np.ndarray
    seeds: list | None
    max_clip: np.ndarray
    unstable_steps: np.ndarray
    min_purity: np.ndarray | None = None
    max_trace_drift: np.ndarray | None = None
    points: tuple | None = None

    @property
    def is_classical(self):
        return self.states.ndim == 3

    @property
    def n_traj(self):
        return self.states.shape[0]

    @property
    def final_states(self):
        return self.states[:, -1]

    def record(self, index):
        """TrajectoryRecord of trajectory ``index``"""
        if self.is_classical:
            states = [ClassicalState(w, self.points) for w in self.states[index]]
        else:
            states = [DensityOperator(rho) for rho in self.states[index]]
        return TrajectoryRecord(
            times=self.times.copy(),
            alpha=self.alpha[index].copy(),
            states=states,
            wiener_seed=None if self.seeds is None else self.seeds[index],
            min_purity=None if self.min_purity is None else float(self.min_purity[index]),
            max_clip=float(self.max_clip[index]),
            unstable_steps=int(self.unstable_steps[index]),
        )

    @classmethod
    def concatenate(cls, batches):
        batches = list(batches)
        first = batches[0]

        def joined(name):
            if getattr(first, name) is None:
                return None
            return np.concatenate([getattr(b, name) for b in batches])

        seeds = None
        if first.seeds is not None:
            seeds = [seed for b in batches for seed in b.seeds]
        return cls(
            times=first.times,
            alpha=joined('alpha'),
            states=joined('states'),
            seeds=seeds,
            max_clip=joined('max_clip'),
            unstable_steps=joined('unstable_steps'),
            min_purity=joined('min_purity'),
            max_trace_drift=joined('max_trace_drift'),
            points=first.points,
        )


def integrate_classical_batch(state0, f, cfg, increments):
    """
    Euler–Maruyama for the classical filter on a batch of trajectories.

    ``increments`` is either a sequence of generators (one per trajectory) or
    an explicit (n_traj, n_steps) array of ΔW. After each step the weights
    are clipped at 0 and renormalised.

    Raises StepUnstable when some weight factor |(A − ⟨A⟩)ΔW/g| exceeds 1
    in more than 1% of the steps of a trajectory.
    """
    if len(f) != len(state0):
        raise LengthMismatch(f"function has {len(f)} values, state has {len(state0)} points")
    values = f.values
    n_traj = _batch_size(increments)
    g, dt = cfg.g, cfg.dt
    record_at = cfg.record_indices
    limit = UNSTABLE_STEP_FRACTION * cfg.n_steps

    w = np.tile(state0.weights, (n_traj, 1))
    alpha = np.zeros(n_traj)
    states = np.empty((n_traj, len(record_at), len(values)))
    alphas = np.empty((n_traj, len(record_at)))
    states[:, 0], alphas[:, 0] = w, alpha
    unstable = np.zeros(n_traj, dtype=int)
    slot, step = 1, 0

    for block in _increment_chunks(increments, cfg.n_steps, dt):
        for dW in block:
            mean = _weighted_sum(w, values)
            factor = (values[None, :] - mean[:, None]) * (dW / g)[:, None]
            unstable += np.any((np.abs(factor) > 1.0) & (w > 0), axis=1)
            if np.any(unstable > limit):
                raise StepUnstable(
                    f"weight update exceeded 1 in more than {UNSTABLE_STEP_FRACTION:.0%} "
                    f"of steps at dt={dt:g}, g2={cfg.g2:g}"
                )
            alpha = alpha + mean * dt + g * dW
            w = np.clip(w * (1.0 + factor), 0.0, None)
            total = _weighted_sum(w, np.ones(len(values)))
            if not np.all(total > 0):
                raise StepUnstable(f"all weights clipped to zero at step {step + 1}")
            w = w / total[:, None]
            step += 1
            if step == record_at[slot]:
                states[:, slot], alphas[:, slot] = w, alpha
                slot += 1

    return TrajectoryBatch(
        times=cfg.times,
        alpha=alphas,
        states=states,
        seeds=_source_seeds(increments),
        max_clip=np.zeros(n_traj),
        unstable_steps=unstable,
        points=state0.points,
    )


def integrate_quantum_batch(rho0, obs, cfg, increments, scheme='euler'):
    """
    Integrate the quantum measurement equations for a batch of trajectories.

    ``scheme='euler'`` is the Euler–Maruyama step. ``scheme='kraus'`` replaces
    it with an exact Gaussian measurement per step, Kraus operator
    G_σ^{1/2}(a − Â) with σ² = g²/dt and a = ⟨Â⟩ + gΔW/dt.

    Every step ends with the repair: Hermitize, clip negative eigenvalues,
    renormalise the trace. Raises StepUnstable when the trace drifts by more
    than 0.1 before the repair.
    """
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}, expected one of {SCHEMES}")
    obs = as_observable(obs)
    check_dims(rho0, obs)
    n_traj = _batch_size(increments)
    g, g2, dt = cfg.g, cfg.g2, cfg.dt
    record_at = cfg.record_indices

    eigenvalues, basis = np.linalg.eigh(obs.entries)
    basis_h = basis.conj().T
    spread = eigenvalues[:, None] - eigenvalues[None, :]
    midpoint = 0.5 * (eigenvalues[:, None] + eigenvalues[None, :])
    damping = 1.0 - spread ** 2 * dt / (8.0 * g2)

    rho = np.tile(hermitize(basis_h @ rho0.entries @ basis), (n_traj, 1, 1))
    alpha = np.zeros(n_traj)
    states = np.empty((n_traj, len(record_at), obs.dim, obs.dim), dtype=complex)
    alphas = np.empty((n_traj, len(record_at)))
    states[:, 0] = basis @ rho @ basis_h
    alphas[:, 0] = alpha
    min_purity = np.full(n_traj, np.inf)
    max_clip = np.zeros(n_traj)
    max_drift = np.zeros(n_traj)
    slot, step = 1, 0

    for block in _increment_chunks(increments, cfg.n_steps, dt):
        for dW in block:
            mean = _diagonal_sum(rho, eigenvalues)
            alpha = alpha + mean * dt + g * dW
            if scheme == 'euler':
                rho = rho * damping + rho * (midpoint - mean[:, None, None]) * (dW / g)[:, None, None]
                trace = _diagonal_sum(rho)
                drift = np.abs(trace - 1.0)
                if not np.all(np.isfinite(drift)) or np.any(drift > MAX_TRACE_DRIFT):
                    raise StepUnstable(
                        f"trace drifted by {np.nanmax(drift):.3e} at step {step + 1} "
                        f"(dt={dt:g}, g2={g2:g})"
                    )
                max_drift = np.maximum(max_drift, drift)
            else:
                outcome = mean + g * dW / dt
                log_kraus = -(outcome[:, None] - eigenvalues[None, :]) ** 2 * dt / (4.0 * g2)
                kraus = np.exp(log_kraus - log_kraus.max(axis=1, keepdims=True))
                rho = rho * kraus[:, :, None] * kraus[:, None, :]
                trace = _diagonal_sum(rho)
                if not np.all(np.isfinite(trace)) or not np.all(trace > 0):
                    raise StepUnstable(f"measurement step lost the state at step {step + 1}")
            purity = np.sum(np.abs(rho) ** 2, axis=(1, 2)) / trace ** 2
            min_purity = np.minimum(min_purity, purity)

            rho, clipped = clip_negative_spectrum(hermitize(rho))
            max_clip = np.maximum(max_clip, clipped)
            rho = rho / _diagonal_sum(rho)[:, None, None]
            step += 1
            if step == record_at[slot]:
                states[:, slot] = basis @ rho @ basis_h
                alphas[:, slot] = alpha
                slot += 1

    worst = float(max_clip.max()) if n_traj else 0.0
    logger.debug(
        f"{scheme} batch of {n_traj}: largest clipped eigenvalue {worst:.2e}, "
        f"largest trace drift {float(max_drift.max()) if n_traj else 0.0:.2e}"
    )
    if worst > REPAIR_WARNING:
        logger.warning(f"repair clipped an eigenvalue of {worst:.2e}; consider a smaller dt")

    return TrajectoryBatch(
        times=cfg.times,
        alpha=alphas,
        states=states,
        seeds=_source_seeds(increments),
        max_clip=max_clip,
        unstable_steps=np.zeros(n_traj, dtype=int),
        min_purity=min_purity,
        max_trace_drift=max_drift,
    )


def _single_source(rng):
    if isinstance(rng, np.ndarray):
        return np.asarray(rng, dtype=float)[None, :]
    return [rng]


def classical_trajectory(state0, f, cfg, rng) -> TrajectoryRecord:
    """One classical trajectory; ``rng`` may also be an explicit ΔW path"""
    return integrate_classical_batch(state0, f, cfg, _single_source(rng)).record(0)


def quantum_trajectory(rho0, obs, cfg, rng, scheme='euler') -> TrajectoryRecord:
    """One quantum trajectory; ``rng`` may also be an explicit ΔW path"""
    return integrate_quantum_batch(rho0, obs, cfg, _single_source(rng), scheme=scheme).record(0)
