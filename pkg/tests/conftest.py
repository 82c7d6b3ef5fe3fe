import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20261016)


def random_spd(rng, n, cond=10.0):
    q, _ = np.linalg.qr(rng.normal(size=(n, n)))
    return (q * np.linspace(1.0, cond, n)) @ q.T
