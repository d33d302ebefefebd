"""
Gaussian kernels G_σ and G_σ^{1/2} used by every measurement model
"""
import numpy as np
from scipy.stats import norm


def gaussian_density(x, sigma):
    """Central Gaussian density of standard deviation sigma, G_σ(x)."""
    return norm.pdf(x, loc=0.0, scale=sigma)


def gaussian_sqrt(x, sigma):
    """Square root of the Gaussian density, G_σ^{1/2}(x)."""
    return np.sqrt(norm.pdf(x, loc=0.0, scale=sigma))


def gaussian_log_likelihood(x, sigma):
    """Log of G_σ(x) without the normalisation constant."""
    x = np.asarray(x, dtype=float)
    return -0.5 * (x / sigma) ** 2


def gaussian_sqrt_kernel(center, sigma, reference):
    """
    Return f with f(x) ∝ G_σ^{1/2}(center − x).

    The proportionality constant is chosen so that f(reference) == 1; collapse
    updates renormalise afterwards, so the constant cancels while the values
    stay representable even for σ → 0⁺.
    """
    offset = gaussian_log_likelihood(center - reference, sigma)

    def kernel(x):
        return float(np.exp(0.5 * (gaussian_log_likelihood(center - x, sigma) - offset)))

    return kernel
