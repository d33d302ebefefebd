"""
Classical states on a finite phase space and functions over it

A state is a normalised weight vector over labelled points X_i. Phase-space
integrals ∫dX A ρ become finite sums, which keeps means, Bayes updates and
postselection exact.
"""
import numpy as np

from .exceptions import InvalidClassicalState, InvalidPostselector

NORMALIZATION_TOL = 1e-12


def _as_vector(values, name):
    vector = np.array(values, dtype=float)
    if vector.ndim != 1 or vector.size == 0:
        raise ValueError(f"{name} must be a non-empty one-dimensional sequence")
    if not np.all(np.isfinite(vector)):
        raise ValueError(f"{name} must be finite")
    return vector


class ClassicalState:
    """Normalised nonnegative weights ρ_i over phase-space points X_i"""

    def __init__(self, weights, points=None):
        w = _as_vector(weights, "weights")
        if np.any(w < 0):
            raise InvalidClassicalState(f"negative weight {w.min():.3e}")
        total = w.sum()
        if abs(total - 1.0) > NORMALIZATION_TOL:
            raise InvalidClassicalState(f"weights sum to {total!r}, expected 1")
        if points is None:
            points = tuple(f"X{i + 1}" for i in range(w.size))
        points = tuple(points)
        if len(points) != w.size:
            raise InvalidClassicalState(
                f"{len(points)} point labels for {w.size} weights"
            )
        w.setflags(write=False)
        self._weights = w
        self._points = points

    @classmethod
    def from_unnormalized(cls, weights, points=None):
        """Clip tiny negative round-off at zero and divide by the sum"""
        w = np.clip(_as_vector(weights, "weights"), 0.0, None)
        total = w.sum()
        if total <= 0:
            raise InvalidClassicalState("weights have no positive mass")
        return cls(w / total, points)

    @classmethod
    def uniform(cls, n, points=None):
        return cls(np.full(n, 1.0 / n), points)

    @classmethod
    def point_mass(cls, n, index, points=None):
        w = np.zeros(n)
        w[index] = 1.0
        return cls(w, points)

    @property
    def weights(self):
        return self._weights

    @property
    def points(self):
        return self._points

    def __len__(self):
        return self._weights.size

    def with_weights(self, weights):
        """Same points, new (renormalised) weights"""
        return type(self).from_unnormalized(weights, self._points)

    def __repr__(self):
        return f"ClassicalState(weights={self._weights.tolist()})"


class PhaseFunction:
    """Real values A_i, one per phase-space point"""

    def __init__(self, values):
        v = _as_vector(values, "values")
        v.setflags(write=False)
        self._values = v

    @classmethod
    def constant(cls, c, n):
        return cls(np.full(n, float(c)))

    @property
    def values(self):
        return self._values

    def __len__(self):
        return self._values.size

    def level_values(self):
        """Distinct step heights a^λ in ascending order"""
        return np.unique(self._values)

    def indicator(self, level):
        """Indicator P^λ of the level set {X : A(X) = level}"""
        return Postselector((self._values == level).astype(float))

    def level_sets(self):
        """[(a^λ, P^λ)] for a stepwise function A = Σ_λ a^λ P^λ"""
        return [(float(level), self.indicator(level)) for level in self.level_values()]

    def __repr__(self):
        return f"{type(self).__name__}({self._values.tolist()})"


class Postselector(PhaseFunction):
    """Phase function Π with 0 ≤ Π_i ≤ 1"""

    def __init__(self, values):
        super().__init__(values)
        if np.any(self._values < 0) or np.any(self._values > 1):
            raise InvalidPostselector(
                f"postselector values must lie in [0, 1], got {self._values.tolist()}"
            )
