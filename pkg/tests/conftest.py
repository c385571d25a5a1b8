import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_corr(m, rng):
    L = rng.standard_normal((m, 2))
    S = L @ L.T + np.diag(rng.uniform(0.2, 0.6, m))
    d = np.sqrt(np.diag(S))
    return S / np.outer(d, d)


def bivariate_sample(sigma_x, sigma_e, b, n, rng):
    """Standardized pair x -> y: x ~ N(0, Sx), y_i = b_i x_i + sqrt(1 - b_i^2) e_i."""
    m = len(b)
    x = np.linalg.cholesky(sigma_x) @ rng.standard_normal((m, n))
    e = np.linalg.cholesky(sigma_e) @ rng.standard_normal((m, n))
    b = np.asarray(b)[:, None]
    y = b * x + np.sqrt(1 - b ** 2) * e
    return x, y


def random_dag(p, rng, m=1):
    perm = rng.permutation(p)
    T = np.tril(rng.standard_normal((m, p, p)), k=-1)
    inv = np.argsort(perm)
    return perm, T[:, inv][:, :, inv]


def sem_sample(B, E):
    """x^i = (I - B^i)^{-1} e^i for every view."""
    p = B.shape[-1]
    return np.stack([np.linalg.solve(np.eye(p) - b, e) for b, e in zip(B, E)])
