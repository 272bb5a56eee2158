"""Shared helpers for the test suite.

Small-bin measures keep hypothesis runs fast; the acceptance tests use
the full production sizes.
"""

import numpy as np

from hyperlab import CircleMeasure, fourier_coefficient
from hyperlab.seeding import rng_for


def coeff_row(mu: CircleMeasure, band: int) -> np.ndarray:
    """Fourier coefficients of mu for n = -band..band as one array."""
    return np.array([fourier_coefficient(mu, n) for n in range(-band, band + 1)])


def brute_atomic_coefficient(atoms, n: int) -> complex:
    """Direct sum over atoms, written independently of CircleMeasure."""
    total = 0.0 + 0.0j
    for angle, mass in atoms:
        total += mass * np.exp(1j * n * angle)
    return total


def random_density(seed: int, bins: int, label: str = "density") -> np.ndarray:
    """Nonnegative density with a few bumps; not normalized."""
    rng = rng_for(seed, label)
    base = rng.random(bins) + 0.25
    return base


def measures_close(mu: CircleMeasure, nu: CircleMeasure, tol: float) -> bool:
    if mu.bins != nu.bins:
        return False
    if np.max(np.abs(mu.density - nu.density)) > tol:
        return False
    a, b = mu.atoms(), nu.atoms()
    if len(a) != len(b):
        return False
    for (x, mx), (y, my) in zip(a, b):
        if abs(x - y) > 1e-9 or abs(mx - my) > tol:
            return False
    return True
