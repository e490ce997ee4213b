import numpy as np
import pytest

from gaugerec.linalg import Subspace


@pytest.fixture
def rng():
    return np.random.default_rng(20260810)


def random_subspace(rng, n, k):
    return Subspace.from_span(rng.standard_normal((n, k)))


def random_l1_instance(seed, N, Q, I_size, amp=(1.0, 2.0)):
    """(Phi, x0) with a random sparse sign pattern and Gaussian Phi."""
    r = np.random.default_rng(seed)
    x0 = np.zeros(N)
    idx = r.choice(N, I_size, replace=False)
    x0[idx] = r.choice([-1.0, 1.0], I_size) * r.uniform(*amp, I_size)
    Phi = r.standard_normal((Q, N))
    return Phi, x0
