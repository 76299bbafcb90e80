import numpy as np
import pytest

from evidencepath.datasets import synthetic_radiocarbon
from evidencepath.models.linear import polynomial_pair


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def radiocarbon_pair():
    data = synthetic_radiocarbon()
    return polynomial_pair(data.column("x"), data.y, 1, 2)
