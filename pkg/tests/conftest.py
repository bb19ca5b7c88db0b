import numpy as np
import pytest


def random_pd(m, rng, cond=None):
    """Random well-conditioned covariance ``A A^T / m + 0.5 I``."""
    A = rng.standard_normal((m, m))
    S = A @ A.T / m + 0.5 * np.eye(m)
    return 0.5 * (S + S.T)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
