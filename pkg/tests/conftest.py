import numpy as np
import pytest

from samplingdyn import CoordinationGame, Environment, SampleSizeDistribution


def random_theta(rng, max_k=12, max_atoms=4, big_k=None):
    """Random finite-support sample size distribution with bounded masses."""
    n_atoms = int(rng.integers(1, max_atoms + 1))
    ks = rng.choice(np.arange(1, max_k + 1), size=n_atoms, replace=False)
    raw = rng.random(n_atoms) + 0.15
    if big_k is not None:
        ks = np.append(ks, big_k)
        raw = np.append(raw, rng.random() + 0.15)
    masses = raw / raw.sum()
    return SampleSizeDistribution.of(
        {int(k): float(w) for k, w in zip(ks, masses)}
    )


def random_game(rng, lo=0.15, hi=8.0):
    return CoordinationGame(float(rng.uniform(lo, hi)), float(rng.uniform(lo, hi)))


def random_env(rng, **theta_kw):
    return Environment.of(
        random_game(rng), random_theta(rng, **theta_kw), random_theta(rng, **theta_kw)
    )


def random_symmetric_env(rng, **theta_kw):
    u = float(rng.uniform(0.15, 8.0))
    return Environment.symmetric(u, random_theta(rng, **theta_kw))


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
