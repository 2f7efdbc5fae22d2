import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_shape(d, rng):
    """Random block shape [(dA, dB), ...] with sum dA*dB = d."""
    shape = []
    left = d
    while left:
        dA = int(rng.integers(1, left + 1))
        dBs = [b for b in range(1, left // dA + 1)]
        dB = int(rng.choice(dBs))
        shape.append((dA, dB))
        left -= dA * dB
    return shape
