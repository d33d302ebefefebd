"""
Quantum postselection, weak values and the pseudo-state
"""
import logging
from functools import cached_property

import numpy as np
from scipy import integrate

from apps.classical.measurement import AcceptedOutcome, Discarded
from apps.linalg.gaussian import gaussian_sqrt

from .exceptions import InvalidPostselector, MixedPrePostState, OrthogonalPrePost, ZeroSelectionRate
from .measurement import as_observable, born_probabilities, check_dims, noisy_quantum_measure
from .states import PseudoState

logger = logging.getLogger(__name__)

MIN_OVERLAP = 1e-14
MIN_SELECTION_RATE = 1e-14
POSTSELECTOR_TOL = 1e-12
# outcome integrals cover [min a^λ − 12σ, max a^λ + 12σ]
QUADRATURE_HALF_WIDTH = 12.0


def as_postselector(sel):
    """Observable whose spectrum lies in [0, 1]"""
    sel = as_observable(sel)
    low, high = sel.eigenvalues[0], sel.eigenvalues[-1]
    if low < -POSTSELECTOR_TOL or high > 1 + POSTSELECTOR_TOL:
        raise InvalidPostselector(
            f"postselector spectrum [{low:.3e}, {high:.3e}] leaves [0, 1]"
        )
    return sel


def selection_rate(rho, sel):
    """⟨Π̂⟩ = tr(Π̂ρ̂)"""
    sel = as_postselector(sel)
    check_dims(rho, sel)
    return float(np.einsum('ij,ji->', sel.entries, rho.entries).real)


def _checked_rate(rho, sel):
    rate = selection_rate(rho, sel)
    if rate <= MIN_SELECTION_RATE:
        raise ZeroSelectionRate(f"rate of postselection {rate:.3e} is zero")
    return rate


def complex_weak_value(i, f, obs) -> complex:
    """
    A_w = ⟨f|Â|i⟩ / ⟨f|i⟩, evaluated as tr(Π̂_f Â ρ̂_i) / tr(Π̂_f ρ̂_i).

    Raises MixedPrePostState unless both states are pure and
    OrthogonalPrePost when |⟨f|i⟩|² < 1e-14.
    """
    obs = as_observable(obs)
    check_dims(i, f, obs)
    if not (i.is_pure and f.is_pure):
        raise MixedPrePostState("complex weak value needs pure |i⟩ and |f⟩")
    overlap = float(np.einsum('ij,ji->', f.entries, i.entries).real)
    if overlap < MIN_OVERLAP:
        raise OrthogonalPrePost(f"|⟨f|i⟩|² = {overlap:.3e}")
    return complex(np.einsum('ij,jk,ki->', f.entries, obs.entries, i.entries) / overlap)


def real_weak_value(rho, sel, obs) -> float:
    """_Π⟨Â⟩ = Re tr(Π̂Âρ̂) / tr(Π̂ρ̂)"""
    obs = as_observable(obs)
    sel = as_postselector(sel)
    check_dims(rho, sel, obs)
    rate = _checked_rate(rho, sel)
    return float(np.einsum('ij,jk,ki->', sel.entries, obs.entries, rho.entries).real) / rate


def pseudo_state(rho, sel) -> PseudoState:
    """(Π̂ρ̂ + ρ̂Π̂) / (2⟨Π̂⟩), Hermitian with unit trace but possibly indefinite"""
    sel = as_postselector(sel)
    rate = _checked_rate(rho, sel)
    product = sel.entries @ rho.entries
    return PseudoState((product + product.conj().T) / (2.0 * rate))


class PostselectedOutcomeDistribution:
    """
    Outcome distribution of the noisy measurement of Â on ρ̂, conditioned on
    acceptance by Π̂:

        p(a) = (1/N) Σ_λμ G^{1/2}(a−a^λ) G^{1/2}(a−a^μ) C_λμ,
        C_λμ = tr(P̂^μ ρ̂ P̂^λ Π̂).

    N and the moments are computed by adaptive quadrature;
    ``analytic_normalization`` gives the closed form of N for comparison.
    """

    def __init__(self, rho, sel, obs, sigma):
        if sigma <= 0:
            raise ValueError("sigma must be positive")
        self.obs = as_observable(obs)
        self.sel = as_postselector(sel)
        check_dims(rho, self.sel, self.obs)
        self.rate = _checked_rate(rho, self.sel)
        self.sigma = float(sigma)
        projectors = self.obs.projectors
        self.coupling = np.einsum(
            'mij,jk,lkn,ni->lm', projectors, rho.entries, projectors, self.sel.entries
        )

    @property
    def eigenvalues(self):
        return self.obs.eigenvalues

    @property
    def bounds(self):
        reach = QUADRATURE_HALF_WIDTH * self.sigma
        return float(self.eigenvalues[0] - reach), float(self.eigenvalues[-1] + reach)

    def unnormalized(self, a):
        a = np.asarray(a, dtype=float)
        g = gaussian_sqrt(a[..., None] - self.eigenvalues, self.sigma)
        return np.einsum('...l,lm,...m->...', g, self.coupling, g).real

    def _integrate(self, fn):
        low, high = self.bounds
        value, _ = integrate.quad(
            fn, low, high, points=list(self.eigenvalues), limit=400, epsabs=0.0, epsrel=1e-11,
        )
        return value

    @cached_property
    def normalization(self):
        """N = ∫ da Σ_λμ G^{1/2} G^{1/2} C_λμ"""
        value = self._integrate(lambda a: float(self.unnormalized(a)))
        if value <= MIN_SELECTION_RATE:
            raise ZeroSelectionRate(f"postselected outcome normalisation {value:.3e}")
        return value

    @property
    def analytic_normalization(self):
        """Σ_λμ C_λμ exp(−(a^λ − a^μ)² / 8σ²)"""
        gap = self.eigenvalues[:, None] - self.eigenvalues[None, :]
        overlap = np.exp(-gap ** 2 / (8.0 * self.sigma ** 2))
        return float(np.sum(self.coupling * overlap).real)

    def pdf(self, a):
        return self.unnormalized(a) / self.normalization

    def moment(self, k):
        """E[a^k] under the postselected distribution"""
        return self._integrate(lambda a: a ** k * float(self.unnormalized(a))) / self.normalization

    @property
    def mean(self):
        return self.moment(1)


def postselected_outcome_density(rho, sel, obs, sigma, a):
    return PostselectedOutcomeDistribution(rho, sel, obs, sigma).pdf(a)


def postselected_quantum_run(rho, sel, obs, sigma, rng):
    """
    One postselected run: noisy measurement of Â, ideal measurement of Π̂ on
    the collapsed state, acceptance with probability equal to the observed
    eigenvalue π.
    """
    sel = as_postselector(sel)
    outcome, collapsed = noisy_quantum_measure(rho, obs, sigma, rng)
    p = born_probabilities(collapsed, sel)
    level = int(rng.choice(len(p), p=p))
    selection = float(np.clip(sel.eigenvalues[level], 0.0, 1.0))
    if rng.random() < selection:
        return AcceptedOutcome(outcome=outcome, selection=selection)
    return Discarded(outcome=outcome, selection=selection)
