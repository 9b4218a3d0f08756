import numpy as np
import pytest

from lsviucb.mdp import LinearMDP, SyntheticSpec, generate_synthetic


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def tiny_mdp():
    return generate_synthetic(SyntheticSpec(3, 2, 2, 3, seed=7))


@pytest.fixture
def small_mdp():
    return generate_synthetic(SyntheticSpec(10, 3, 4, 4, seed=3))


def point_mass_mdp(n_states=4, n_actions=2, dim=2, horizon=3, target=0):
    """Every measure is a point mass on ``target``."""
    rng = np.random.default_rng(0)
    feats = rng.dirichlet(np.ones(dim), size=(n_states, n_actions))
    mu = np.zeros((horizon, dim, n_states))
    mu[:, :, target] = 1.0
    theta = rng.dirichlet(np.ones(dim), size=horizon)
    return LinearMDP(feats, mu, theta)
