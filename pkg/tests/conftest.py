import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from fairreg.core import Dataset

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


def make_linear_data(n=200, d=3, n_groups=2, seed=0, shift=0.2, noise=0.05):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, d))
    g = np.arange(n) % n_groups
    rng.shuffle(g)
    w = rng.normal(scale=0.1, size=d)
    y = np.clip(0.5 + X @ w + shift * (g - (n_groups - 1) / 2) + noise * rng.normal(size=n), 0, 1)
    return Dataset(X, g, y, n_groups)


@pytest.fixture
def small_data():
    return make_linear_data(n=120, d=2, seed=3)


def make_noisy_group_data(n=400, seed=1):
    """Group 0 is a clean linear signal; group 1 has coin-flip labels."""
    rng = np.random.default_rng(seed)
    g = (rng.random(n) < 0.5).astype(int)
    x = rng.normal(size=n)
    clean = np.clip(0.5 + 0.15 * x + 0.05 * rng.normal(size=n), 0, 1)
    y = np.where(g == 0, clean, rng.integers(0, 2, n).astype(float))
    return Dataset(np.c_[x, g], g, y)
