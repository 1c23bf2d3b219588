import numpy as np
import pytest

from bipartite_glass import MixtureSpec


def pure_spec(p, q, beta, gamma=0.5, h1=0.0, h2=0.0):
    return MixtureSpec(coefficients={(p, q): beta}, gamma=gamma, h1=h1, h2=h2)


def mixed_12_21_spec(gamma=0.5):
    """xi(x, y) = x^2 y / 2 + x y^2 / 2: the canonical mixed example with
    alpha_1 = alpha_2 = 1/2."""
    b = 1.0 / np.sqrt(2.0)
    return MixtureSpec(coefficients={(2, 1): b, (1, 2): b}, gamma=gamma)


@pytest.fixture
def rng():
    return np.random.default_rng(20230817)
