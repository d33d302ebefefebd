"""
Small dense complex Hermitian matrices

Construction and validation of Hermitian matrices, spectral decomposition with
merged degenerate eigenvalues, and matrix functions evaluated through the
spectrum. Everything else in the project builds on these three pieces.
"""
import logging
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .exceptions import DimensionTooLarge, NonHermitian

logger = logging.getLogger(__name__)

MAX_DIM = 64
HERMITIAN_TOL = 1e-12
DEFAULT_DEGENERACY_TOL = 1e-9


def as_square_matrix(entries):
    """Copy entries into a complex square array, enforcing the dimension cap"""
    matrix = np.array(entries, dtype=complex)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1] or matrix.shape[0] == 0:
        raise ValueError(f"expected a non-empty square matrix, got shape {matrix.shape}")
    if matrix.shape[0] > MAX_DIM:
        raise DimensionTooLarge(
            f"dimension {matrix.shape[0]} exceeds the dense solver cap of {MAX_DIM}"
        )
    return matrix


def hermitian_deviation(matrix):
    """Largest elementwise distance between a matrix and its adjoint"""
    return float(np.max(np.abs(matrix - matrix.conj().T)))


def hermitize(matrix):
    """(M + M†)/2, works on stacks of matrices too"""
    return 0.5 * (matrix + np.conj(np.swapaxes(matrix, -1, -2)))


def commutator(a, b):
    return a @ b - b @ a


class HermitianMatrix:
    """
    Immutable dim×dim complex Hermitian matrix (dim ≤ 64).

    Entries are checked against their adjoint within ``tol`` and then stored
    exactly symmetrised.
    """

    def __init__(self, entries, tol=HERMITIAN_TOL):
        matrix = as_square_matrix(entries)
        deviation = hermitian_deviation(matrix)
        if deviation > tol:
            raise NonHermitian(
                f"matrix differs from its adjoint by {deviation:.3e} (tolerance {tol:.0e})"
            )
        matrix = hermitize(matrix)
        matrix.setflags(write=False)
        self._entries = matrix

    @property
    def entries(self):
        return self._entries

    @property
    def dim(self):
        return self._entries.shape[0]

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self._entries.copy()
        return self._entries.astype(dtype)

    def __repr__(self):
        return f"{type(self).__name__}(dim={self.dim})"


class Observable(HermitianMatrix):
    """Hermitian matrix with a cached spectral decomposition {a^λ, P̂^λ}"""

    def __init__(self, entries, tol=HERMITIAN_TOL, degeneracy_tol=DEFAULT_DEGENERACY_TOL):
        super().__init__(entries, tol=tol)
        self.degeneracy_tol = degeneracy_tol

    @cached_property
    def spectrum(self):
        return spectral_decompose(self, self.degeneracy_tol)

    @property
    def eigenvalues(self):
        return self.spectrum.eigenvalues

    @property
    def projectors(self):
        return self.spectrum.projectors


@dataclass(frozen=True)
class SpectralDecomposition:
    """
    Distinct eigenvalues a^λ in ascending order and one Hermitian projector
    P̂^λ per eigenvalue (shape ``(k, dim, dim)``).
    """
    eigenvalues: np.ndarray
    projectors: np.ndarray

    @property
    def dim(self):
        return self.projectors.shape[-1]

    def __len__(self):
        return len(self.eigenvalues)

    def reconstruct(self):
        """Σ_λ a^λ P̂^λ"""
        return np.tensordot(self.eigenvalues, self.projectors, axes=1)

    def completeness_error(self):
        """max |Σ_λ P̂^λ − I|"""
        return float(np.max(np.abs(self.projectors.sum(axis=0) - np.eye(self.dim))))

    def orthogonality_error(self):
        """max |P̂^λ P̂^μ − δ_λμ P̂^λ| over all pairs"""
        worst = 0.0
        for i, p in enumerate(self.projectors):
            for j, q in enumerate(self.projectors):
                target = p if i == j else np.zeros_like(p)
                worst = max(worst, float(np.max(np.abs(p @ q - target))))
        return worst


def spectral_decompose(m, degeneracy_tol=DEFAULT_DEGENERACY_TOL):
    """
    Spectral decomposition of a Hermitian matrix.

    Eigenvalues within ``degeneracy_tol`` of the lowest member of their group are
    merged into one projector; the merged eigenvalue is their mean.

    Raises NonHermitian when ``m`` is not Hermitian.
    """
    if degeneracy_tol <= 0:
        raise ValueError("degeneracy_tol must be positive")
    if not isinstance(m, HermitianMatrix):
        m = HermitianMatrix(m)

    values, vectors = np.linalg.eigh(m.entries)
    groups = [[0]]
    for k in range(1, len(values)):
        if values[k] - values[groups[-1][0]] <= degeneracy_tol:
            groups[-1].append(k)
        else:
            groups.append([k])

    eigenvalues = np.array([values[group].mean() for group in groups])
    projectors = np.array([
        vectors[:, group] @ vectors[:, group].conj().T for group in groups
    ])
    projectors = hermitize(projectors)
    eigenvalues.setflags(write=False)
    projectors.setflags(write=False)
    if len(groups) < len(values):
        logger.debug(f"merged {len(values)} eigenvalues into {len(groups)} levels")
    return SpectralDecomposition(eigenvalues=eigenvalues, projectors=projectors)


def matrix_function(sd, f):
    """
    Σ_λ f(a^λ) P̂^λ for a real function f.

    Raises OverflowError when f is not finite on some eigenvalue.
    """
    values = np.array([f(float(a)) for a in sd.eigenvalues], dtype=float)
    if not np.all(np.isfinite(values)):
        raise OverflowError(f"matrix function not finite on spectrum {sd.eigenvalues}")
    return HermitianMatrix(np.tensordot(values, sd.projectors, axes=1))


def identity(dim):
    return Observable(np.eye(dim))


def pauli_x():
    return Observable([[0, 1], [1, 0]])


def pauli_z():
    return Observable([[1, 0], [0, -1]])


def random_hermitian(rng, dim):
    """Hermitian matrix with Gaussian entries drawn from ``rng``"""
    real = rng.standard_normal((dim, dim))
    imag = rng.standard_normal((dim, dim))
    return hermitize(real + 1j * imag)


def random_density_matrix(rng, dim):
    """Full-rank density matrix G G† / tr(G G†) with Gaussian G"""
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    rho = g @ g.conj().T
    return hermitize(rho / np.trace(rho).real)
