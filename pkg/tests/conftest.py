import math

import numpy as np
import pytest

from cohpert import DensityMatrix, HermitianOperator, make_channel


def random_channel(rng, d_in, d_out, d_env):
    """Random channel from a Haar-ish isometry (requires d_out*d_env >= d_in)."""
    a = rng.normal(size=(d_out * d_env, d_in)) + 1j * rng.normal(size=(d_out * d_env, d_in))
    q, _ = np.linalg.qr(a)
    v = q.reshape(d_out, d_env, d_in)
    return make_channel([v[:, k, :] for k in range(d_env)])


def random_density(rng, dim):
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    m = a @ a.conj().T
    return DensityMatrix.from_matrix(m / np.trace(m).real)


def random_pure(rng, dim):
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return DensityMatrix.pure(v)


def random_traceless(rng, dim, scale=1.0):
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    h = (a + a.conj().T) / 2.0
    h -= np.trace(h).real / dim * np.eye(dim)
    return HermitianOperator.from_matrix(scale * h)


def shannon_bits(probs):
    """Independent scalar entropy oracle, plain Python."""
    total = 0.0
    for p in probs:
        if p > 0.0:
            total -= p * math.log2(p)
    return total


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
