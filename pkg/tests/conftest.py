import numpy as np
import pytest


def random_state(rng, dim):
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


def random_density(rng, dim, rank=None):
    rank = rank or dim
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ g.conj().T
    return rho / rho.trace()


def random_unitary(rng, dim):
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(g)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_hermitian(rng, dim, scale=1.0):
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return scale * 0.5 * (g + g.conj().T)


def random_generator(rng, dim, n_channels=2):
    from decolab.lindblad import LindbladGenerator

    channels = []
    for _ in range(n_channels):
        op = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
        channels.append((float(rng.uniform(0.1, 2.0)), op))
    return LindbladGenerator(random_hermitian(rng, dim), tuple(channels))


@pytest.fixture
def rng():
    return np.random.default_rng(20260821)
