"""
Density operators, pseudo-states and the Gaussian meter
"""
from dataclasses import dataclass

import numpy as np

from apps.linalg.gaussian import gaussian_sqrt_kernel
from apps.linalg.spectral import HermitianMatrix, hermitize, matrix_function, pauli_x

from .exceptions import InvalidDensityOperator

TRACE_TOL = 1e-12
PSEUDO_TRACE_TOL = 1e-10
POSITIVITY_TOL = 1e-10
PURITY_TOL = 1e-10


class DensityOperator(HermitianMatrix):
    """
    Nonnegative unit-trace Hermitian matrix ρ̂.

    Raises InvalidDensityOperator when the trace or the spectrum is off.
    """

    def __init__(self, entries, tol=TRACE_TOL):
        super().__init__(entries)
        trace = np.trace(self._entries).real
        if abs(trace - 1.0) > tol:
            raise InvalidDensityOperator(f"trace is {trace!r}, expected 1")
        lowest = float(np.linalg.eigvalsh(self._entries)[0])
        if lowest < -POSITIVITY_TOL:
            raise InvalidDensityOperator(f"negative eigenvalue {lowest:.3e}")

    @classmethod
    def from_unnormalized(cls, matrix):
        """Hermitize and divide by the trace"""
        matrix = hermitize(np.asarray(matrix, dtype=complex))
        trace = np.trace(matrix).real
        if trace <= 0:
            raise InvalidDensityOperator(f"cannot normalise matrix with trace {trace!r}")
        return cls(matrix / trace)

    @classmethod
    def pure(cls, vector):
        """|ψ⟩⟨ψ| for a (not necessarily normalised) state vector"""
        psi = np.asarray(vector, dtype=complex).ravel()
        norm = np.linalg.norm(psi)
        if norm == 0:
            raise InvalidDensityOperator("zero state vector")
        psi = psi / norm
        return cls(np.outer(psi, psi.conj()))

    @classmethod
    def maximally_mixed(cls, dim):
        return cls(np.eye(dim) / dim)

    @classmethod
    def diagonal(cls, weights):
        """Diagonal state diag(w), the embedding of a classical state"""
        w = np.asarray(weights, dtype=float)
        return cls(np.diag(w))

    @property
    def purity(self):
        """tr ρ̂²"""
        return float(np.einsum('ij,ji->', self._entries, self._entries).real)

    @property
    def is_pure(self):
        return self.purity > 1.0 - PURITY_TOL

    def state_vector(self):
        """Eigenvector of the largest eigenvalue, the |ψ⟩ of a pure state"""
        _, vectors = np.linalg.eigh(self._entries)
        return vectors[:, -1]


class PseudoState(HermitianMatrix):
    """Hermitian unit-trace operator that may be indefinite"""

    def __init__(self, entries):
        super().__init__(entries)
        trace = np.trace(self._entries).real
        if abs(trace - 1.0) > PSEUDO_TRACE_TOL:
            raise ValueError(f"pseudo-state trace is {trace!r}, expected 1")

    @property
    def eigenvalues(self):
        return np.linalg.eigvalsh(self._entries)

    @property
    def is_positive(self):
        return bool(self.eigenvalues[0] >= -POSITIVITY_TOL)


@dataclass(frozen=True)
class MeterModel:
    """
    Pointer prepared in the pure central Gaussian of width ``sigma``.

    The pointer is never materialised; reading it at ``a`` acts on the system
    through the Kraus operator G_σ^{1/2}(a − Â).
    """
    sigma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("meter width sigma must be positive")

    def kraus(self, obs, a):
        """G_σ^{1/2}(a − Â) up to a positive factor"""
        eigenvalues = obs.spectrum.eigenvalues
        nearest = eigenvalues[np.argmin(np.abs(eigenvalues - a))]
        kernel = gaussian_sqrt_kernel(a, self.sigma, nearest)
        return matrix_function(obs.spectrum, kernel).entries


@dataclass(frozen=True)
class AnomalySetup:
    initial: DensityOperator
    final: DensityOperator
    observable: object
    phi: float


def anomaly_setup(phi):
    """
    Two-level anomaly: |i⟩ = (e^{iφ/2}, e^{−iφ/2})/√2, |f⟩ = (e^{−iφ/2}, e^{iφ/2})/√2,
    Â = σ_x. The postselection rate is cos²φ and the weak value 1/cos φ.
    """
    half = np.exp(0.5j * phi)
    initial = DensityOperator.pure([half, half.conjugate()])
    final = DensityOperator.pure([half.conjugate(), half])
    return AnomalySetup(initial=initial, final=final, observable=pauli_x(), phi=float(phi))


def coherent_state(phi):
    """Pure state |i⟩ = (cos φ, sin φ)"""
    return DensityOperator.pure([np.cos(phi), np.sin(phi)])
