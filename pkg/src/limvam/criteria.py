"""Pairwise causal-direction criteria built from cross-view second moments.

Both criteria take the stacked pair ``x, y`` (``(m, n)``, standardized per
view) and the OLS residuals ``e`` (y on x) and ``d`` (x on y).  A positive
value points to ``x -> y``.

``lr``
    Gaussian log-likelihood ratio of the two directions,
    ``(logdet S_y + logdet S_d) - (logdet S_x + logdet S_e)`` with ``S_*``
    the ``m x m`` cross-view covariance of each series.
``fc``
    ``||cov(d, y)||_F - ||cov(e, x)||_F`` over the ``m x m`` cross-view
    regressor/residual covariances.
"""

from enum import Enum

import numpy as np

from .core import standardize_pair
from .exceptions import InvalidCoefficientError, NonPositiveDefiniteError, ShapeMismatchError
from .regress import pairwise_ols

PD_TOL = 1e-12


class CriterionKind(str, Enum):
    LR = "lr"
    FC = "fc"

    @classmethod
    def parse(cls, kind):
        if isinstance(kind, cls):
            return kind
        try:
            return cls(str(kind).lower())
        except ValueError:
            raise ValueError(f"unknown criterion kind {kind!r}; expected 'lr' or 'fc'") from None


def _cov(a, b=None):
    """Batched ``1/n a b^T`` over the last two axes."""
    if b is None:
        b = a
    return np.einsum("...in,...jn->...ij", a, b) / a.shape[-1]


def logdet_pd(S, name="covariance"):
    """Log-determinant of (a batch of) symmetric positive definite matrices.

    Raises :class:`NonPositiveDefiniteError` naming ``name`` when the
    smallest eigenvalue is at or below ``1e-12``.
    """
    S = np.asarray(S, dtype=float)
    S = 0.5 * (S + np.swapaxes(S, -1, -2))
    w = np.linalg.eigvalsh(S)
    lo = w[..., 0]
    if np.any(lo <= PD_TOL):
        raise NonPositiveDefiniteError(
            f"{name} is not positive definite (min eigenvalue {np.min(lo):.3g})", name)
    return np.sum(np.log(w), axis=-1)


def _check(*arrays):
    shapes = {np.shape(a) for a in arrays}
    if len(shapes) != 1:
        raise ShapeMismatchError(f"criterion inputs have mismatched shapes {sorted(shapes)}")


def lr_criterion(x, y, e, d):
    """Multi-view likelihood-ratio criterion (positive means ``x -> y``).

    Parameters
    ----------
    x, y : array (m, n)
        Standardized variables, one row per view.
    e, d : array (m, n)
        OLS residuals of y on x and of x on y.

    Raises
    ------
    NonPositiveDefiniteError
        If one of the four ``m x m`` covariances is not positive definite;
        ``exc.matrix`` is one of ``"sigma_x"``, ``"sigma_y"``,
        ``"sigma_e"``, ``"sigma_d"``.
    """
    x, y, e, d = (np.atleast_2d(np.asarray(a, dtype=float)) for a in (x, y, e, d))
    _check(x, y, e, d)
    return _lr_from_covs(_cov(x), _cov(y), _cov(e), _cov(d))


def _lr_from_covs(sx, sy, se, sd):
    forward = logdet_pd(sx, "sigma_x") + logdet_pd(se, "sigma_e")
    backward = logdet_pd(sy, "sigma_y") + logdet_pd(sd, "sigma_d")
    # written as a difference of two sums so that swapping roles negates exactly
    return backward - forward


def fc_criterion(x, y, e, d):
    """Frobenius cross-covariance criterion (positive means ``x -> y``)."""
    x, y, e, d = (np.atleast_2d(np.asarray(a, dtype=float)) for a in (x, y, e, d))
    _check(x, y, e, d)
    return _fc_from_cross(_cov(e, x), _cov(d, y))


def _fc_from_cross(ex, dy):
    return np.linalg.norm(dy, axis=(-2, -1)) - np.linalg.norm(ex, axis=(-2, -1))


def criterion(kind, x, y, e, d):
    kind = CriterionKind.parse(kind)
    fn = lr_criterion if kind is CriterionKind.LR else fc_criterion
    return fn(x, y, e, d)


def pair_score(x, y, kind="lr"):
    """Standardize a raw centred pair, regress both ways and evaluate ``kind``."""
    pair = standardize_pair(x, y)
    fwd, bwd = pairwise_ols(pair)
    return criterion(kind, pair.x, pair.y, fwd.residuals, bwd.residuals)


def batch_scores(x, y, kind):
    """Criterion for a batch of standardized pairs.

    ``x`` and ``y`` have shape ``(k, m, n)``; the result has length ``k``.
    Entry ``t`` is bitwise the negation of the score for the swapped pair.
    """
    kind = CriterionKind.parse(kind)
    n = x.shape[-1]
    b = np.einsum("kin,kin->ki", x, y) / n
    e = y - b[..., None] * x
    d = x - b[..., None] * y
    if kind is CriterionKind.LR:
        forward = logdet_pd(_cov(x), "sigma_x") + logdet_pd(_cov(e), "sigma_e")
        backward = logdet_pd(_cov(y), "sigma_y") + logdet_pd(_cov(d), "sigma_d")
        return backward - forward
    return _fc_from_cross(_cov(e, x), _cov(d, y))


# -- population oracles ----------------------------------------------------

def _lb(b):
    b = np.asarray(b, dtype=float)
    if np.any(np.abs(b) >= 1):
        raise InvalidCoefficientError(f"all |b_i| must be < 1, got {b}")
    return np.diag(b), np.diag(np.sqrt(1.0 - b ** 2))


def population_lr_oracle(sigma_x, sigma_e_corr, b):
    """Population LR value ``J(B, L)`` for a standardized bivariate model ``x -> y``.

    ``sigma_x`` is the cross-view correlation of the cause, ``sigma_e_corr``
    the cross-view correlation of the disturbance of ``y`` and ``b`` the
    per-view slopes; ``L = diag(sqrt(1 - b^2))`` holds the disturbance
    standard deviations.
    """
    sx = np.asarray(sigma_x, dtype=float)
    se = np.asarray(sigma_e_corr, dtype=float)
    B, L = _lb(b)
    A = B @ sx @ B + L @ se @ L
    C = L @ sx @ L + B @ se @ B
    return float(-logdet_pd(sx, "sigma_x") - logdet_pd(se, "sigma_e")
                 + logdet_pd(A, "A") + logdet_pd(C, "C"))


def population_cross_covariance(sigma_x, sigma_e_corr, b):
    """``E[y d^T]`` of the wrong direction: ``B Sx (I - B^2) - Se B``."""
    sx = np.asarray(sigma_x, dtype=float)
    B, L = _lb(b)
    se = L @ np.asarray(sigma_e_corr, dtype=float) @ L
    return B @ sx @ (np.eye(len(B)) - B @ B) - se @ B


def population_fc_oracle(sigma_x, sigma_e_corr, b):
    """Population FC value; the correct direction contributes a zero norm."""
    return float(np.linalg.norm(population_cross_covariance(sigma_x, sigma_e_corr, b)))


def zero_set_gap(sigma_x, sigma_e_corr, b):
    """``L Se B - B Sx L``; the LR criterion vanishes iff this is zero."""
    B, L = _lb(b)
    return L @ np.asarray(sigma_e_corr) @ B - B @ np.asarray(sigma_x) @ L
