import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_discrete_model(rng, n_states, n_symbols):
    """Random row-stochastic (pi, trans, emit) for oracle comparisons."""
    pi = rng.dirichlet(np.ones(n_states))
    trans = rng.dirichlet(np.ones(n_states), size=n_states)
    emit = rng.dirichlet(np.ones(n_symbols), size=n_states)
    return pi, trans, emit


def random_spd(rng, dim, scale=1.0):
    """Random symmetric positive definite matrix."""
    a = rng.standard_normal((dim, dim))
    return scale * (a @ a.T + dim * np.eye(dim))
