"""
Quantum expectation values, ideal and Gaussian non-ideal measurement

Everything runs through the spectral decomposition Â = Σ_λ a^λ P̂^λ, so
G_σ(a − Â) and G_σ^{1/2}(a − Â) are exact matrix functions.
"""
import logging

import numpy as np

from apps.linalg.gaussian import gaussian_density, gaussian_sqrt
from apps.linalg.spectral import Observable

from .exceptions import DimMismatch
from .states import DensityOperator, MeterModel

logger = logging.getLogger(__name__)


def as_observable(obs):
    return obs if isinstance(obs, Observable) else Observable(obs)


def check_dims(rho, *operators):
    for op in operators:
        if op.dim != rho.dim:
            raise DimMismatch(f"operator of dim {op.dim} on a state of dim {rho.dim}")


def quantum_mean(rho: DensityOperator, obs) -> float:
    """⟨Â⟩ = tr(Âρ̂)"""
    obs = as_observable(obs)
    check_dims(rho, obs)
    return float(np.einsum('ij,ji->', obs.entries, rho.entries).real)


def quantum_spread(rho: DensityOperator, obs) -> float:
    """Δ²Â = ⟨Â²⟩ − ⟨Â⟩², evaluated as tr((Â − ⟨Â⟩)²ρ̂)"""
    obs = as_observable(obs)
    mean = quantum_mean(rho, obs)
    shifted = obs.entries - mean * np.eye(obs.dim)
    return max(0.0, float(np.einsum('ij,jk,ki->', shifted, shifted, rho.entries).real))


def born_probabilities(rho, obs):
    """p^λ = tr(P̂^λ ρ̂), clipped at zero and renormalised"""
    obs = as_observable(obs)
    check_dims(rho, obs)
    p = np.einsum('lij,ji->l', obs.projectors, rho.entries).real
    p = np.clip(p, 0.0, None)
    return p / p.sum()


def ideal_measure(rho, obs, rng):
    """
    Ideal von Neumann measurement: returns (a^λ, P̂^λρ̂P̂^λ / p^λ) with
    probability p^λ.
    """
    obs = as_observable(obs)
    p = born_probabilities(rho, obs)
    level = int(rng.choice(len(p), p=p))
    projector = obs.projectors[level]
    collapsed = DensityOperator.from_unnormalized(projector @ rho.entries @ projector)
    return float(obs.eigenvalues[level]), collapsed


def outcome_density(rho, obs, sigma, a):
    """p(a) = Σ_λ p^λ G_σ(a − a^λ); ``a`` may be an array"""
    obs = as_observable(obs)
    p = born_probabilities(rho, obs)
    a = np.asarray(a, dtype=float)
    return gaussian_density(a[..., None] - obs.eigenvalues, sigma) @ p


def collapse(rho, obs, sigma, a):
    """ρ̂ → G_σ^{1/2}(a−Â) ρ̂ G_σ^{1/2}(a−Â) / p(a)"""
    kraus = MeterModel(sigma).kraus(obs, a)
    return DensityOperator.from_unnormalized(kraus @ rho.entries @ kraus)


def noisy_quantum_measure(rho, obs, sigma, rng):
    """
    Gaussian non-ideal measurement of Â with width sigma.

    The outcome is drawn exactly from p(a): an eigenvalue with its Born
    probability, then Gaussian noise. Returns (outcome, collapsed state).
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    obs = as_observable(obs)
    p = born_probabilities(rho, obs)
    level = int(rng.choice(len(p), p=p))
    outcome = float(obs.eigenvalues[level] + sigma * rng.standard_normal())
    return outcome, collapse(rho, obs, sigma, outcome)


def _meter_amplitudes(rho, obs, meter, a):
    obs = as_observable(obs)
    check_dims(rho, obs)
    a = np.asarray(a, dtype=float)
    return obs, gaussian_sqrt(a[..., None] - obs.eigenvalues, meter.sigma)


def meter_model_density(rho, obs, meter: MeterModel, a):
    """
    Pointer readout density of the von Neumann meter with the pointer traced
    out: Σ_λμ G^{1/2}(a−a^λ) G^{1/2}(a−a^μ) tr(P̂^λ ρ̂ P̂^μ).
    """
    obs, g = _meter_amplitudes(rho, obs, meter, a)
    coupling = np.einsum('lij,jk,mki->lm', obs.projectors, rho.entries, obs.projectors)
    return np.einsum('...l,lm,...m->...', g, coupling, g).real


def meter_model_collapse(rho, obs, meter: MeterModel, a):
    """System state after the pointer reads ``a``: Σ_λμ g_λ g_μ P̂^λ ρ̂ P̂^μ / p(a)"""
    obs, g = _meter_amplitudes(rho, obs, meter, float(a))
    branches = np.einsum('l,lij,jk,mkn,m->in', g, obs.projectors, rho.entries,
                         obs.projectors, g)
    return DensityOperator.from_unnormalized(branches)
