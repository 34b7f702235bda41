import numpy as np
import pytest

from gccn import canonical_complex


@pytest.fixture
def triangle():
    return canonical_complex("triangle")


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
