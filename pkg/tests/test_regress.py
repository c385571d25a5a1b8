import numpy as np
import pytest

from limvam.core import standardize_pair
from limvam.exceptions import SingularSystemError, ZeroVarianceError
from limvam.regress import fgls_row, ols_residuals, pairwise_ols, psd_pinv


def _gls_dense(X, y, sigma):
    """Reference GLS with the full Kronecker covariance (small n only)."""
    m, q, n = X.shape
    Z = np.zeros((m * n, m * q))
    for i in range(m):
        Z[i * n:(i + 1) * n, i * q:(i + 1) * q] = X[i].T
    omega_inv = np.kron(np.linalg.pinv(sigma), np.eye(n))
    lhs = Z.T @ omega_inv @ Z
    rhs = Z.T @ omega_inv @ y.reshape(-1)
    return np.linalg.solve(lhs, rhs).reshape(m, q)


def test_pairwise_ols_perfect_fit(rng):
    x = rng.standard_normal((3, 200))
    x -= x.mean(axis=1, keepdims=True)
    fwd, bwd = pairwise_ols(standardize_pair(x, x))
    np.testing.assert_allclose(fwd.b, 1.0)
    np.testing.assert_allclose(fwd.residuals, 0.0, atol=1e-12)
    np.testing.assert_allclose(bwd.b, 1.0)


def test_pairwise_ols_two_points():
    fwd, bwd = pairwise_ols(standardize_pair([[1.0, -1.0]], [[2.0, -2.0]]))
    np.testing.assert_allclose(fwd.b, [1.0])
    np.testing.assert_allclose(bwd.b, [1.0])


def test_pairwise_ols_independent_clt_bound(rng):
    n = 100_000
    x = rng.standard_normal((4, n))
    y = rng.standard_normal((4, n))
    fwd, _ = pairwise_ols(x - x.mean(1, keepdims=True), y - y.mean(1, keepdims=True))
    assert np.all(np.abs(fwd.b) < 3 / np.sqrt(n))


def test_pairwise_ols_symmetric_slopes_and_orthogonality():
    for seed in range(100):
        rng = np.random.default_rng(seed)
        m, n = rng.integers(1, 5), rng.integers(5, 60)
        x = rng.standard_normal((m, n))
        y = 0.5 * x + rng.standard_normal((m, n))
        pair = standardize_pair(x - x.mean(1, keepdims=True), y - y.mean(1, keepdims=True))
        fwd, bwd = pairwise_ols(pair)
        cov = np.mean(pair.x * pair.y, axis=1)
        np.testing.assert_allclose(fwd.b, cov, atol=1e-12)
        np.testing.assert_allclose(bwd.b, cov, atol=1e-12)
        for res, reg in ((fwd.residuals, pair.x), (bwd.residuals, pair.y)):
            inner = np.abs(np.mean(reg * res, axis=1))
            assert np.all(inner <= 1e-10 * reg.std(1) * res.std(1) + 1e-15)


def test_ols_zero_regressor():
    with pytest.raises(ZeroVarianceError):
        ols_residuals(np.ones((2, 4)), np.zeros((2, 4)))


def test_psd_pinv_rank_deficient(rng):
    v = rng.standard_normal(3)
    S = np.outer(v, v)
    inv, rank = psd_pinv(S)
    assert rank == 1
    np.testing.assert_allclose(inv, np.linalg.pinv(S), atol=1e-10)


def test_fgls_matches_dense_reference(rng):
    m, q, n = 3, 2, 40
    X = rng.standard_normal((m, q, n))
    corr = np.array([[1, 0.6, 0.3], [0.6, 1, 0.5], [0.3, 0.5, 1]])
    noise = np.linalg.cholesky(corr) @ rng.standard_normal((m, n))
    coef = rng.standard_normal((m, q))
    y = np.einsum("ik,ikn->in", coef, X) + noise
    est = fgls_row(X, y)
    ols = np.stack([np.linalg.lstsq(X[i].T, y[i], rcond=None)[0] for i in range(m)])
    np.testing.assert_allclose(est.ols_coefficients, ols, atol=1e-10)
    resid = y - np.einsum("ik,ikn->in", ols, X)
    sigma = resid @ resid.T / n
    np.testing.assert_allclose(est.residual_cov, sigma, atol=1e-12)
    np.testing.assert_allclose(est.coefficients, _gls_dense(X, y, sigma), atol=1e-9)
    assert np.linalg.eigvalsh(est.residual_cov).min() >= -1e-10


def test_fgls_reduces_to_ols_with_diagonal_residual_cov(rng):
    # residuals built from orthonormal directions orthogonal to every
    # regressor, so the OLS residual covariance is exactly diagonal
    m, q, n = 3, 2, 200
    X = rng.standard_normal((m, q, n))
    basis, _ = np.linalg.qr(np.concatenate([X.reshape(m * q, n).T,
                                            rng.standard_normal((n, m))], axis=1))
    resid = basis[:, m * q:].T * rng.uniform(1, 3, size=(m, 1)) * np.sqrt(n)
    coef = rng.standard_normal((m, q))
    y = np.einsum("ik,ikn->in", coef, X) + resid
    est = fgls_row(X, y)
    sig = est.residual_cov
    assert np.abs(sig - np.diag(np.diag(sig))).max() < 1e-10
    np.testing.assert_allclose(est.ols_coefficients, coef, atol=1e-10)
    np.testing.assert_allclose(est.coefficients, est.ols_coefficients, atol=1e-8)


def test_fgls_single_view_is_ols(rng):
    X = rng.standard_normal((1, 3, 50))
    y = rng.standard_normal((1, 50))
    est = fgls_row(X, y)
    np.testing.assert_allclose(est.coefficients, est.ols_coefficients, atol=1e-10)


def test_fgls_noise_free_exact(rng):
    X = rng.standard_normal((3, 2, 30))
    coef = rng.standard_normal((3, 2))
    y = np.einsum("ik,ikn->in", coef, X)
    np.testing.assert_allclose(fgls_row(X, y).coefficients, coef, atol=1e-10)


def test_fgls_view_relabeling(rng):
    X = rng.standard_normal((4, 2, 80))
    y = rng.standard_normal((4, 80)) + X[:, 0]
    perm = np.array([2, 0, 3, 1])
    a = fgls_row(X, y).coefficients
    b = fgls_row(X[perm], y[perm]).coefficients
    np.testing.assert_allclose(b, a[perm], atol=1e-10)


def test_fgls_beats_ols_under_correlated_residuals():
    # m=2, one predecessor, residual correlation 0.9
    errs_f, errs_o = [], []
    corr = np.array([[1.0, 0.9], [0.9, 1.0]])
    chol = np.linalg.cholesky(corr)
    coef = np.array([[0.7], [-0.4]])
    for seed in range(200):
        rng = np.random.default_rng(seed)
        n = 10_000
        # predecessor correlated with the other view's noise increases the GLS gain
        X = rng.standard_normal((2, 1, n))
        noise = chol @ rng.standard_normal((2, n))
        y = coef * X[:, 0] + noise
        est = fgls_row(X, y)
        errs_f.append(np.sum((est.coefficients - coef) ** 2))
        errs_o.append(np.sum((est.ols_coefficients - coef) ** 2))
    assert np.mean(errs_f) <= np.mean(errs_o)


def test_fgls_consistency_in_n():
    T = np.array([[0.0, 0, 0], [0.8, 0, 0], [-0.5, 0.6, 0]])
    corr = np.array([[1, 0.5, 0.2], [0.5, 1, 0.4], [0.2, 0.4, 1]])
    chol = np.linalg.cholesky(corr)

    def err(n, seed):
        rng = np.random.default_rng(seed)
        E = np.stack([chol @ rng.standard_normal((3, n)) for _ in range(3)], axis=1)
        X = np.stack([np.linalg.solve(np.eye(3) - T, E[i]) for i in range(3)])
        est = fgls_row(X[:, :2], X[:, 2])
        return np.sum((est.coefficients - T[2, :2]) ** 2)

    small = np.median([err(1000, s) for s in range(20)])
    large = np.median([err(100_000, s) for s in range(20)])
    assert large < small


def test_fgls_errors(rng):
    X = np.zeros((2, 1, 10))
    with pytest.raises(SingularSystemError) as info:
        fgls_row(X, rng.standard_normal((2, 10)))
    assert info.value.matrix == "ols_gram"
    # duplicated views: residual covariance has rank 1 and the stacked
    # normal matrix is singular
    x = rng.standard_normal((1, 1, 50))
    y = rng.standard_normal((1, 50))
    with pytest.raises(SingularSystemError) as info:
        fgls_row(np.concatenate([x, x]), np.concatenate([y, y]))
    assert info.value.matrix == "normal_matrix"


def test_fgls_no_predecessors(rng):
    y = rng.standard_normal((3, 20))
    est = fgls_row(np.zeros((3, 0, 20)), y)
    assert est.coefficients.shape == (3, 0)
