import numpy as np
import pytest


def random_spd(rng, p, scale=1.0):
    """Well-conditioned random SPD matrix: A A^T / p + scale * I."""
    a = rng.standard_normal((p, p))
    return a @ a.T / p + scale * np.eye(p)


def random_theta(rng, p):
    from robustggm import ModelParams

    return ModelParams(mu=rng.standard_normal(p), omega=random_spd(rng, p))


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)


def mixture_24(seed, n=200, eps=0.1, eta=5.0):
    """p = 5 mixture with the four-edge precision used across tests."""
    om = np.eye(5)
    for i, j in [(0, 1), (0, 2), (1, 4), (2, 3)]:
        om[i, j] = om[j, i] = 0.3
    g = np.random.default_rng(seed)
    cov = np.linalg.inv(om)
    X = g.multivariate_normal(np.zeros(5), cov, size=n)
    labels = g.uniform(size=n) < eps
    k = int(labels.sum())
    if k:
        X[labels] = g.multivariate_normal(np.full(5, eta), np.eye(5), size=k)
    return X, labels, om
