import numpy as np
import pytest

from gausstrunc import RngStream


@pytest.fixture
def rng():
    return RngStream(20240611, 0)


def within(est, target, se, k=4.0):
    return abs(est - target) <= k * se


def mean_se(x):
    x = np.asarray(x, dtype=float)
    return float(x.mean()), float(x.std(ddof=1) / np.sqrt(x.size))
