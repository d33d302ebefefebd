"""
Classical measurement: means, Gaussian non-ideal measurement with Bayesian
update, ideal measurement of stepwise functions, and postselection
"""
import logging
from dataclasses import dataclass

import numpy as np

from apps.linalg.gaussian import gaussian_density, gaussian_log_likelihood

from .exceptions import LengthMismatch, ZeroSelectionRate
from .states import ClassicalState, PhaseFunction, Postselector

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class AcceptedOutcome:
    """Measurement outcome kept in the postselected statistics"""
    outcome: float
    selection: float
    accepted: bool = True


@dataclass(frozen=True)
class Discarded:
    """Measurement outcome dropped by postselection"""
    outcome: float
    selection: float
    accepted: bool = False


def _check_lengths(state, *functions):
    for f in functions:
        if len(f) != len(state):
            raise LengthMismatch(
                f"function has {len(f)} values, state has {len(state)} points"
            )


def _as_postselector(sel):
    if isinstance(sel, Postselector):
        return sel
    return Postselector(sel.values if isinstance(sel, PhaseFunction) else sel)


def classical_mean(state: ClassicalState, f: PhaseFunction) -> float:
    """⟨A⟩_ρ = Σ_i A_i ρ_i"""
    _check_lengths(state, f)
    return float(state.weights @ f.values)


def classical_spread(state: ClassicalState, f: PhaseFunction) -> float:
    """Δ²_ρ A = ⟨A²⟩_ρ − ⟨A⟩²_ρ, evaluated as ⟨(A − ⟨A⟩)²⟩ so it stays ≥ 0"""
    mean = classical_mean(state, f)
    return float(state.weights @ (f.values - mean) ** 2)


def classical_outcome_density(state, f, sigma, a):
    """p(a) = ⟨G_σ(a − A)⟩_ρ; ``a`` may be an array"""
    _check_lengths(state, f)
    a = np.asarray(a, dtype=float)
    kernel = gaussian_density(a[..., None] - f.values, sigma)
    return kernel @ state.weights


def bayes_update(state, f, sigma, a):
    """ρ → G_σ(a − A) ρ / p(a), renormalised"""
    _check_lengths(state, f)
    log_likelihood = gaussian_log_likelihood(a - f.values, sigma)
    likelihood = np.exp(log_likelihood - log_likelihood.max())
    return state.with_weights(likelihood * state.weights)


def sample_outcomes(state, f, sigma, rng, size=None):
    """
    Draws from the outcome mixture Σ_i ρ_i G_σ(a − A_i): first a point with
    probability ρ_i, then Gaussian noise around A_i.
    """
    _check_lengths(state, f)
    index = rng.choice(len(state), p=state.weights, size=size)
    return f.values[index] + sigma * rng.standard_normal(size)


def noisy_measure(state, f, sigma, rng):
    """
    Non-ideal measurement of A with Gaussian error sigma.

    Returns (outcome, updated state).
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    outcome = float(sample_outcomes(state, f, sigma, rng))
    return outcome, bayes_update(state, f, sigma, outcome)


def ideal_classical_measure(state, f, rng):
    """
    Ideal measurement of a stepwise function: returns (a^λ, ρ^λ) with
    probability p^λ = ⟨P^λ⟩_ρ, where ρ^λ = P^λ ρ / p^λ.
    """
    _check_lengths(state, f)
    index = int(rng.choice(len(state), p=state.weights))
    level = float(f.values[index])
    return level, effective_postselected_state(state, f.indicator(level))


def classical_postselected_mean(state, f, sel) -> float:
    """_Π⟨A⟩_ρ = ⟨ΠA⟩_ρ / ⟨Π⟩_ρ"""
    sel = _as_postselector(sel)
    _check_lengths(state, f, sel)
    rate = float(state.weights @ sel.values)
    if rate <= 0:
        raise ZeroSelectionRate("rate of postselection ⟨Π⟩ is zero")
    return float(state.weights @ (sel.values * f.values)) / rate


def effective_postselected_state(state, sel) -> ClassicalState:
    """ρ_Π = Πρ / ⟨Π⟩_ρ, always a valid classical state"""
    sel = _as_postselector(sel)
    _check_lengths(state, sel)
    weighted = sel.values * state.weights
    rate = weighted.sum()
    if rate <= 0:
        raise ZeroSelectionRate("rate of postselection ⟨Π⟩ is zero")
    return state.with_weights(weighted / rate)


def postselected_run(state, f, sel, sigma, rng):
    """
    One postselected run: noisy measurement of A, then ideal measurement of
    Π on the updated state (a point drawn from the posterior), then
    acceptance with probability π.
    """
    sel = _as_postselector(sel)
    outcome, updated = noisy_measure(state, f, sigma, rng)
    point = int(rng.choice(len(updated), p=updated.weights))
    selection = float(sel.values[point])
    if rng.random() < selection:
        return AcceptedOutcome(outcome=outcome, selection=selection)
    return Discarded(outcome=outcome, selection=selection)
