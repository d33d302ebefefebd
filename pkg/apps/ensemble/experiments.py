"""
Monte Carlo experiments: weak-measurement limit, the postselection anomaly,
collapse statistics of continuous measurement and the meter-model sweep
"""
import logging
from dataclasses import dataclass, field
from functools import cached_property
from math import cos, pi, sqrt

import numpy as np
from scipy import stats

from apps.classical.measurement import sample_outcomes
from apps.linalg.spectral import Observable, random_density_matrix, random_hermitian
from apps.quantum.measurement import (
    as_observable,
    born_probabilities,
    meter_model_density,
    outcome_density,
)
from apps.quantum.states import DensityOperator, MeterModel, anomaly_setup
from apps.quantum.weak_values import as_postselector, postselected_quantum_run, real_weak_value
from apps.trajectories.averages import classical_ensemble, quantum_ensemble

from .exceptions import NoAcceptedRuns, Unconverged
from .streams import DEFAULT_BLOCK_SIZE, SeededRng, derive_run_seed, map_blocks

logger = logging.getLogger(__name__)

COLLAPSE_SPREAD = 1e-6
MAX_UNCONVERGED = 0.01
METER_GRID_POINTS = 100


@dataclass(frozen=True)
class WeakLimitPlan:
    """N measurements of precision σ at fixed Δ² = σ²/N"""
    sigma: float
    n: int

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        if int(self.n) != self.n or self.n < 1:
            raise ValueError("n must be a positive integer")

    @cached_property
    def delta2(self):
        return self.sigma ** 2 / self.n

    @property
    def predicted_delta(self):
        return sqrt(self.delta2)


@dataclass(frozen=True)
class ExperimentReport:
    """Statistics of the accepted outcomes of one experiment"""
    accepted_count: int
    acceptance_rate: float
    mean: float
    stderr: float
    predicted_mean: float
    predicted_delta: float
    z_score: float
    n_runs: int = 0
    predicted_rate: float = 1.0
    seed: int = 0

    @classmethod
    def from_outcomes(cls, outcomes, n_runs, predicted_mean, predicted_delta,
                      predicted_rate=1.0, seed=0):
        """stderr and z_score are 0 below two accepted outcomes"""
        outcomes = np.asarray(outcomes, dtype=float)
        count = outcomes.size
        mean = float(outcomes.mean()) if count else float('nan')
        stderr = float(outcomes.std(ddof=1) / sqrt(count)) if count >= 2 else 0.0
        z_score = (mean - predicted_mean) / stderr if stderr > 0 else 0.0
        return cls(
            accepted_count=int(count),
            acceptance_rate=count / n_runs if n_runs else 0.0,
            mean=mean,
            stderr=stderr,
            predicted_mean=float(predicted_mean),
            predicted_delta=float(predicted_delta),
            z_score=float(z_score),
            n_runs=int(n_runs),
            predicted_rate=float(predicted_rate),
            seed=int(seed),
        )

    @property
    def rate_stderr(self):
        """Binomial standard error of the acceptance rate around predicted_rate"""
        p = self.predicted_rate
        return sqrt(p * (1.0 - p) / self.n_runs) if self.n_runs else 0.0


def run_weak_limit_classical(state, f, plan, seed) -> ExperimentReport:
    """
    ā over N noisy measurements of A, each on a fresh copy of the state.

    A fresh copy makes the update irrelevant, so the N outcomes are drawn from
    the outcome mixture in one call on the generator of ``seed``.
    """
    rng = SeededRng(seed)
    outcomes = sample_outcomes(state, f, plan.sigma, rng, size=plan.n)
    predicted = float(state.weights @ f.values)
    return ExperimentReport.from_outcomes(
        outcomes, plan.n, predicted, predicted_delta=plan.predicted_delta, seed=seed,
    )


@dataclass
class WeakLimitStudy:
    """Repeated weak-limit experiments and the moments of their ā"""
    plan: WeakLimitPlan
    reports: list = field(default_factory=list)

    @property
    def means(self):
        return np.array([r.mean for r in self.reports])

    @property
    def sample_variance(self):
        return float(np.var(self.means, ddof=1))

    @property
    def skewness(self):
        return float(stats.skew(self.means))

    @property
    def excess_kurtosis(self):
        return float(stats.kurtosis(self.means, fisher=True))


def weak_limit_study(state, f, plan, repetitions, seed, threads=1,
                     block_size=DEFAULT_BLOCK_SIZE) -> WeakLimitStudy:
    """Repetition r runs run_weak_limit_classical under derive_run_seed(seed, r)"""
    if repetitions < 1:
        raise ValueError("repetitions must be at least 1")

    def repeat(block):
        return [run_weak_limit_classical(state, f, plan, derive_run_seed(seed, r)) for r in block]

    logger.info(f"weak limit: {repetitions} repetitions of N={plan.n}, sigma={plan.sigma:g}")
    blocks = map_blocks(repeat, repetitions, threads, block_size)
    return WeakLimitStudy(plan=plan, reports=[r for block in blocks for r in block])


def run_anomaly_experiment(phi, sigma, n, seed, threads=1,
                           block_size=DEFAULT_BLOCK_SIZE) -> ExperimentReport:
    """
    n postselected measurements of σ_x between |i⟩ and |f⟩ of the two-level
    anomaly; run j draws from SeededRng(derive_run_seed(seed, j)).

    The accepted mean is compared with the weak value 1/cos φ, its spread
    with σ/√accepted.
    """
    if not 0 <= phi < pi / 2:
        raise ValueError("phi must lie in [0, π/2): acceptance rate cos²φ must be positive")
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    setup = anomaly_setup(phi)
    sel = as_postselector(setup.final)
    obs = setup.observable
    rho = setup.initial

    def run(block):
        outcomes = []
        for j in block:
            result = postselected_quantum_run(rho, sel, obs, sigma, SeededRng(derive_run_seed(seed, j)))
            if result.accepted:
                outcomes.append(result.outcome)
        return outcomes

    logger.info(f"anomaly: {n} runs at phi={phi:g}, sigma={sigma:g} (seed={seed}, threads={threads})")
    accepted = [a for block in map_blocks(run, n, threads, block_size) for a in block]
    if not accepted:
        raise NoAcceptedRuns(f"all {n} runs were discarded at phi={phi:g}")
    return ExperimentReport.from_outcomes(
        accepted,
        n,
        predicted_mean=real_weak_value(rho, sel, obs),
        predicted_delta=sigma / sqrt(len(accepted)),
        predicted_rate=cos(phi) ** 2,
        seed=seed,
    )


@dataclass
class CollapseHistogram:
    """Endpoints of measured trajectories sorted by eigenvalue (or level) label"""
    labels: np.ndarray
    counts: np.ndarray
    expected: np.ndarray
    converged_fraction: float
    n_traj: int
    seed: int

    @property
    def frequencies(self):
        return self.counts / self.n_traj

    @property
    def stderr(self):
        return np.sqrt(self.expected * (1.0 - self.expected) / self.n_traj)

    def passes(self, k=3.0):
        deviation = np.abs(self.frequencies - self.expected)
        return bool(np.all(deviation <= np.maximum(k * self.stderr, 1e-12)))

    def rows(self):
        for index, (label, count, frequency, expected, stderr) in enumerate(zip(
            self.labels, self.counts, self.frequencies, self.expected, self.stderr
        )):
            yield {
                'label': index,
                'eigenvalue': float(label),
                'count': int(count),
                'frequency': float(frequency),
                'expected': float(expected),
                'stderr': float(stderr),
            }


def _histogram(labels, assigned, spreads, expected, n_traj, seed):
    converged = float(np.mean(spreads < COLLAPSE_SPREAD))
    histogram = CollapseHistogram(
        labels=np.asarray(labels, dtype=float),
        counts=np.bincount(assigned, minlength=len(labels)),
        expected=np.asarray(expected, dtype=float),
        converged_fraction=converged,
        n_traj=n_traj,
        seed=seed,
    )
    if 1.0 - converged > MAX_UNCONVERGED:
        raise Unconverged(
            f"only {converged:.2%} of trajectories reached spread < {COLLAPSE_SPREAD:g}; "
            f"increase t_final",
            fraction=converged,
        )
    return histogram


def run_collapse_statistics(rho0, obs, cfg, n_traj, seed, threads=1,
                            block_size=DEFAULT_BLOCK_SIZE, scheme='euler') -> CollapseHistogram:
    """
    Classify quantum trajectory endpoints by their nearest eigenprojector and
    compare the frequencies with the Born probabilities p^λ = tr(P̂^λ ρ̂₀).

    Raises Unconverged when more than 1% of endpoints keep Δ²Â ≥ 1e-6.
    """
    obs = as_observable(obs)
    batch = quantum_ensemble(rho0, obs, cfg, n_traj, seed, threads, block_size, scheme)
    final = batch.final_states
    weights = np.einsum('lij,nji->nl', obs.projectors, final).real
    a = obs.entries
    mean = np.einsum('ij,nji->n', a, final).real
    second = np.einsum('ij,jk,nki->n', a, a, final).real
    return _histogram(
        obs.eigenvalues, np.argmax(weights, axis=1), second - mean ** 2,
        born_probabilities(rho0, obs), n_traj, seed,
    )


def classical_collapse_histogram(batch, state0, f, seed) -> CollapseHistogram:
    """Endpoints of a classical batch sorted by level set, compared with ⟨P^λ⟩"""
    final = batch.final_states
    levels = f.level_values()
    indicators = np.array([f.indicator(level).values for level in levels])
    mass = final @ indicators.T
    mean = final @ f.values
    spreads = final @ f.values ** 2 - mean ** 2
    return _histogram(
        levels, np.argmax(mass, axis=1), spreads,
        indicators @ state0.weights, batch.n_traj, seed,
    )


def run_classical_collapse_statistics(state0, f, cfg, n_traj, seed, threads=1,
                                      block_size=DEFAULT_BLOCK_SIZE) -> CollapseHistogram:
    """Classical counterpart of run_collapse_statistics"""
    batch = classical_ensemble(state0, f, cfg, n_traj, seed, threads, block_size)
    return classical_collapse_histogram(batch, state0, f, seed)


@dataclass(frozen=True)
class MeterCase:
    case: int
    dim: int
    sigma: float
    max_abs_diff: float


def run_meter_check(n_cases, seed, n_grid=METER_GRID_POINTS):
    """
    Compare the traced-out meter density with the postulated outcome density
    on random (ρ̂, Â, σ) in dimensions 2 to 4.
    """
    cases = []
    for case in range(n_cases):
        rng = SeededRng(derive_run_seed(seed, case))
        dim = int(rng.generator.integers(2, 5))
        rho = DensityOperator(random_density_matrix(rng, dim))
        obs = Observable(random_hermitian(rng, dim))
        sigma = 0.2 + 2.0 * float(rng.random())
        eigenvalues = obs.eigenvalues
        grid = np.linspace(eigenvalues[0] - 4 * sigma, eigenvalues[-1] + 4 * sigma, n_grid)
        meter = meter_model_density(rho, obs, MeterModel(sigma), grid)
        postulated = outcome_density(rho, obs, sigma, grid)
        cases.append(MeterCase(
            case=case, dim=dim, sigma=sigma,
            max_abs_diff=float(np.max(np.abs(meter - postulated))),
        ))
    logger.info(f"meter check: {n_cases} cases, worst difference "
                f"{max((c.max_abs_diff for c in cases), default=0.0):.2e}")
    return cases
