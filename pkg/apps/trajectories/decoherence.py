"""
Decoherence master equation dρ/dt = −(8g²)⁻¹ [Â,[Â,ρ]]

The closed form scales the (λ, μ) block P̂^λ ρ P̂^μ by
exp(−(a^λ − a^μ)² t / 8g²). For Â = σ_z this is e^{−t/2g²} on the
off-diagonal.
"""
import numpy as np

from apps.linalg.spectral import commutator, hermitize
from apps.quantum.measurement import as_observable, check_dims
from apps.quantum.states import DensityOperator


def decoherence_factors(obs, g2, t):
    """exp(−(a^λ − a^μ)² t / 8g²) for every pair of eigenvalues"""
    obs = as_observable(obs)
    if not g2 > 0:
        raise ValueError("g2 must be positive")
    if t < 0:
        raise ValueError("t must be nonnegative")
    gap = obs.eigenvalues[:, None] - obs.eigenvalues[None, :]
    return np.exp(-gap ** 2 * t / (8.0 * g2))


def decoherence_evolve(rho0, obs, g2, t) -> DensityOperator:
    """Exact solution of the master equation at time t"""
    obs = as_observable(obs)
    check_dims(rho0, obs)
    factors = decoherence_factors(obs, g2, t)
    projectors = obs.projectors
    evolved = np.einsum('lm,lij,jk,mkn->in', factors, projectors, rho0.entries, projectors)
    return DensityOperator(hermitize(evolved))


def master_equation_rhs(obs_entries, g2):
    def rhs(rho):
        return -commutator(obs_entries, commutator(obs_entries, rho)) / (8.0 * g2)
    return rhs


def integrate_master_equation(rho0, obs, g2, t_final, dt, record_every=1):
    """
    Fixed-step RK4 of the master equation.

    Returns (times, states) with states of shape (n_times, d, d); the final
    time is always included.
    """
    obs = as_observable(obs)
    check_dims(rho0, obs)
    if not (g2 > 0 and dt > 0 and t_final > 0):
        raise ValueError("g2, dt and t_final must be positive")
    rhs = master_equation_rhs(obs.entries, g2)
    n_steps = max(1, int(round(t_final / dt)))
    record_at = set(range(0, n_steps + 1, record_every)) | {n_steps}

    rho = rho0.entries.copy()
    times, states = [0.0], [rho.copy()]
    for step in range(1, n_steps + 1):
        k1 = rhs(rho)
        k2 = rhs(rho + 0.5 * dt * k1)
        k3 = rhs(rho + 0.5 * dt * k2)
        k4 = rhs(rho + dt * k3)
        rho = rho + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if step in record_at:
            times.append(step * dt)
            states.append(rho.copy())
    return np.array(times), np.array(states)
