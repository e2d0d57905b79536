import numpy as np
import pytest


def rand_spd(rng, n, scale=1.0):
    """Random well-conditioned SPD matrix."""
    a = rng.standard_normal((n, n))
    return scale * (a @ a.T + n * np.eye(n))


def rand_contractive(rng, n, radius=0.95):
    """Random square matrix scaled to spectral radius <= radius."""
    a = rng.standard_normal((n, n))
    rho = np.max(np.abs(np.linalg.eigvals(a)))
    return a * (radius / max(rho, 1e-12))


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
