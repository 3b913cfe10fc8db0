import numpy as np
import pytest

from scatterdepth import SpdMatrix


def rand_spd(rng: np.random.Generator, k: int, log_range: float = 1.5) -> SpdMatrix:
    """Random SPD matrix with log-uniform eigenvalues and Haar-ish eigenvectors."""
    q, _ = np.linalg.qr(rng.standard_normal((k, k)))
    eig = np.exp(rng.uniform(-log_range, log_range, size=k))
    return SpdMatrix((q * eig) @ q.T)


def rand_invertible(rng: np.random.Generator, k: int) -> np.ndarray:
    while True:
        a = rng.standard_normal((k, k))
        if abs(np.linalg.det(a)) > 0.1:
            return a


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
