import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def random_symmetric(rng, m, low=0.0, high=10.0):
    """Symmetric zero-diagonal matrix with entries in [low, high)."""
    Y = np.zeros((m, m))
    iu = np.triu_indices(m, 1)
    Y[iu] = rng.uniform(low, high, size=len(iu[0]))
    return Y + Y.T


def l1_sort_oracle(v, radius):
    """Full-sort projection onto the l1 ball (independent oracle)."""
    v = np.asarray(v, dtype=np.float64)
    mag = np.abs(v)
    if mag.sum() <= radius:
        return v.copy()
    if radius == 0.0:
        return np.zeros_like(v)
    u = np.sort(mag)[::-1]
    css = np.cumsum(u)
    ks = np.arange(1, len(u) + 1)
    valid = u - (css - radius) / ks > 0
    k = ks[valid][-1]
    lam = (css[k - 1] - radius) / k
    return np.sign(v) * np.maximum(mag - lam, 0.0)
