import numpy as np
import pytest

from conftest import bivariate_sample, random_corr
from limvam.core import standardize_pair
from limvam.criteria import (
    CriterionKind, batch_scores, criterion, fc_criterion, zero_set_gap, lr_criterion, pair_score,
    population_cross_covariance, population_fc_oracle, population_lr_oracle,
)
from limvam.exceptions import InvalidCoefficientError, NonPositiveDefiniteError, ShapeMismatchError
from limvam.regress import pairwise_ols

SX = np.array([[1.0, 0.8], [0.8, 1.0]])
SE = np.eye(2)
B = np.array([0.5, 0.5])


def _logdet(S):
    sign, val = np.linalg.slogdet(S)
    assert sign > 0
    return val


def direct_population_lr(sx, se, b):
    """LR from the population covariances of x, y, e, d (independent path)."""
    Bm = np.diag(b)
    Lm = np.diag(np.sqrt(1 - b ** 2))
    cov_e = Lm @ se @ Lm
    cov_y = Bm @ sx @ Bm + cov_e
    I = np.eye(len(b))
    cov_d = (I - Bm @ Bm) @ sx @ (I - Bm @ Bm) + Bm @ cov_e @ Bm
    return _logdet(cov_y) + _logdet(cov_d) - _logdet(sx) - _logdet(cov_e)


def exact_moment_sample(sx, se, b, n, rng):
    """A sample whose 1/n moments equal the population ones exactly."""
    m = len(b)
    Z = rng.standard_normal((2 * m, n))
    Z -= Z.mean(axis=1, keepdims=True)
    Q, _ = np.linalg.qr(Z.T)
    Z = Q.T * np.sqrt(n)
    x = np.linalg.cholesky(sx) @ Z[:m]
    e = np.linalg.cholesky(se) @ Z[m:]
    y = b[:, None] * x + np.sqrt(1 - b ** 2)[:, None] * e
    return x, y


def _residuals(x, y):
    pair = standardize_pair(x, y)
    fwd, bwd = pairwise_ols(pair)
    return pair.x, pair.y, fwd.residuals, bwd.residuals


def test_lr_oracle_matches_direct_population_formula():
    assert population_lr_oracle(SX, SE, B) == pytest.approx(direct_population_lr(SX, SE, B),
                                                            abs=1e-12)
    assert population_lr_oracle(SX, SE, B) > 0
    rng = np.random.default_rng(0)
    for _ in range(50):
        m = rng.integers(2, 6)
        sx, se = random_corr(m, rng), random_corr(m, rng)
        b = rng.uniform(-0.95, 0.95, m)
        assert population_lr_oracle(sx, se, b) == pytest.approx(
            direct_population_lr(sx, se, b), abs=1e-10)


def test_lr_on_exact_moments_equals_oracle(rng):
    x, y = exact_moment_sample(SX, SE, B, 500, rng)
    val = lr_criterion(*_residuals(x, y))
    assert val == pytest.approx(population_lr_oracle(SX, SE, B), abs=1e-12)


def test_fc_cross_covariance_on_exact_moments(rng):
    x, y = exact_moment_sample(SX, SE, B, 500, rng)
    xs, ys, e, d = _residuals(x, y)
    cross = ys @ d.T / ys.shape[1]
    np.testing.assert_allclose(cross, population_cross_covariance(SX, SE, B), atol=1e-12)
    # correct direction has zero regressor/residual cross-covariance
    np.testing.assert_allclose(e @ xs.T / xs.shape[1], 0.0, atol=1e-12)
    assert fc_criterion(xs, ys, e, d) == pytest.approx(population_fc_oracle(SX, SE, B),
                                                       abs=1e-12)
    assert population_fc_oracle(SX, SE, B) > 0


def test_b_zero_cases():
    assert population_lr_oracle(SX, SE, np.zeros(2)) == pytest.approx(0.0, abs=1e-14)
    assert population_fc_oracle(SX, SE, np.zeros(2)) == 0.0


def test_single_view_lr_vanishes(rng):
    for b in (-0.7, 0.1, 0.9):
        x, y = exact_moment_sample(np.eye(1), np.eye(1), np.array([b]), 300, rng)
        assert lr_criterion(*_residuals(x, y)) == pytest.approx(0.0, abs=1e-12)
        assert population_lr_oracle(np.eye(1), np.eye(1), [b]) == pytest.approx(0.0, abs=1e-12)


def test_antisymmetry_exact(rng):
    for _ in range(50):
        m = rng.integers(1, 5)
        x, y = bivariate_sample(random_corr(m, rng), random_corr(m, rng),
                                rng.uniform(-0.9, 0.9, m), 200, rng)
        xs, ys, e, d = _residuals(x - x.mean(1, keepdims=True), y - y.mean(1, keepdims=True))
        for kind in CriterionKind:
            assert criterion(kind, ys, xs, d, e) == -criterion(kind, xs, ys, e, d)


def test_batch_scores_match_single(rng):
    x = rng.standard_normal((5, 3, 100))
    y = 0.4 * x + rng.standard_normal((5, 3, 100))
    x -= x.mean(-1, keepdims=True)
    y -= y.mean(-1, keepdims=True)
    for kind in ("lr", "fc"):
        xs = x / np.sqrt(np.mean(x ** 2, -1, keepdims=True))
        ys = y / np.sqrt(np.mean(y ** 2, -1, keepdims=True))
        batch = batch_scores(xs, ys, kind)
        single = [pair_score(x[k], y[k], kind) for k in range(5)]
        np.testing.assert_allclose(batch, single, atol=1e-12)
        np.testing.assert_array_equal(batch_scores(ys, xs, kind), -batch)


def test_non_pd_error_names_matrix():
    x = np.tile(np.array([1.0, -1, 2, -2]), (2, 1))
    y = np.array([[1.0, 1, -1, -1], [2.0, -1, 0, -1]])
    y -= y.mean(1, keepdims=True)
    xs, ys, e, d = _residuals(x, y)
    with pytest.raises(NonPositiveDefiniteError) as info:
        lr_criterion(xs, ys, e, d)
    assert info.value.matrix == "sigma_x"


def test_shape_mismatch():
    with pytest.raises(ShapeMismatchError):
        fc_criterion(np.zeros((2, 3)), np.zeros((2, 3)), np.zeros((2, 3)), np.zeros((1, 3)))


def test_invalid_coefficient():
    with pytest.raises(InvalidCoefficientError):
        population_lr_oracle(SX, SE, [1.0, 0.2])


def test_lr_zero_set():
    rng = np.random.default_rng(3)
    for _ in range(50):
        m = rng.integers(2, 6)
        S = random_corr(m, rng)
        b = np.full(m, rng.uniform(-0.9, 0.9))
        np.testing.assert_allclose(zero_set_gap(S, S, b), 0.0, atol=1e-15)
        assert abs(population_lr_oracle(S, S, b)) < 1e-10


def test_lr_positive_off_zero_set():
    rng = np.random.default_rng(4)
    for _ in range(100):
        m = rng.integers(2, 6)
        sx, se = random_corr(m, rng), random_corr(m, rng)
        b = rng.uniform(-0.9, 0.9, m)
        assert np.abs(zero_set_gap(sx, se, b)).max() > 1e-6
        assert population_lr_oracle(sx, se, b) > 0


def test_positive_in_true_direction_at_large_n():
    n = 100_000
    hits_lr = hits_fc = 0
    for seed in range(100):
        rng = np.random.default_rng(seed)
        x, y = bivariate_sample(SX, SE, B, n, rng)
        x -= x.mean(1, keepdims=True)
        y -= y.mean(1, keepdims=True)
        hits_lr += pair_score(x, y, "lr") > 0
        hits_fc += pair_score(x, y, "fc") > 0
    assert hits_lr >= 98
    assert hits_fc >= 98


def test_scale_invariance(rng):
    x, y = bivariate_sample(SX, SE, B, 1000, rng)
    x -= x.mean(1, keepdims=True)
    y -= y.mean(1, keepdims=True)
    c = np.array([[7.5], [0.02]])
    for kind in ("lr", "fc"):
        assert pair_score(c * x, c * y, kind) == pytest.approx(pair_score(x, y, kind), abs=1e-10)


def test_summed_copies_degenerate(rng):
    n = 100_000
    b = 0.6
    x1, x1p = rng.standard_normal(n), rng.standard_normal(n)
    e1, e1p = rng.standard_normal(n), rng.standard_normal(n)
    y1, y1p = b * x1 + e1, b * x1p + e1p
    x = np.stack([x1, x1 + x1p])
    y = np.stack([y1, y1 + y1p])
    x -= x.mean(1, keepdims=True)
    y -= y.mean(1, keepdims=True)
    assert np.corrcoef(x)[0, 1] == pytest.approx(1 / np.sqrt(2), abs=0.01)
    e = y - b * x
    assert np.corrcoef(e)[0, 1] == pytest.approx(1 / np.sqrt(2), abs=0.01)
    xp, yp = bivariate_sample(SX, SE, B, n, np.random.default_rng(1))
    for kind in ("lr", "fc"):
        positive = pair_score(xp - xp.mean(1, keepdims=True), yp - yp.mean(1, keepdims=True),
                              kind)
        assert abs(pair_score(x, y, kind)) * 10 <= positive
