import numpy as np
import pytest

from elmid.elm_model import RandomProjection, init_random_projection


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)


@pytest.fixture
def projection() -> RandomProjection:
    return init_random_projection(input_dim=3, hidden_dim=8, seed=42)


@pytest.fixture
def zero_projection() -> RandomProjection:
    return RandomProjection(np.zeros((4, 2)), np.zeros(4))
