"""Per-view OLS residuals and one-step feasible GLS across views."""

from dataclasses import dataclass

import numpy as np

from .core import ZERO_VARIANCE_TOL, VariablePairView, second_moment, standardize_pair
from .exceptions import ShapeMismatchError, SingularSystemError, ZeroVarianceError

PINV_RTOL = 1e-10
NORMAL_RCOND = 1e-12


@dataclass(frozen=True)
class PairResiduals:
    """Per-view slopes ``b`` (length m) and residual rows ``(m, n)``."""

    b: np.ndarray
    residuals: np.ndarray


@dataclass(frozen=True)
class FglsRowEstimate:
    """Row ``j`` of every ``T^i`` (``(m, j-1)``) and the residual covariance."""

    coefficients: np.ndarray
    residual_cov: np.ndarray
    ols_coefficients: np.ndarray = None


def ols_residuals(target, regressor):
    """Residuals of ``target`` on ``regressor``, one slope per row.

    Both arrays have samples on the last axis; leading axes broadcast.
    Returns ``(slopes, residuals)``.
    """
    target = np.asarray(target, dtype=float)
    regressor = np.asarray(regressor, dtype=float)
    denom = second_moment(regressor)
    if np.any(denom < ZERO_VARIANCE_TOL):
        raise ZeroVarianceError("regressor has zero sample variance in some view")
    b = np.einsum("...i,...i->...", target, regressor) / regressor.shape[-1] / denom
    return b, target - b[..., None] * regressor


def pairwise_ols(pair, y=None):
    """Regress ``y`` on ``x`` and ``x`` on ``y`` separately in every view.

    Parameters
    ----------
    pair : VariablePairView or array (m, n)
        A standardized pair; raw ``(x, y)`` arrays are standardized first.
    y : array (m, n), optional
        Second variable when ``pair`` is given as a bare array.

    Returns
    -------
    forward, backward : PairResiduals
        ``forward`` holds the residuals ``e`` of y-on-x, ``backward`` the
        residuals ``d`` of x-on-y.  On standardized data both slopes equal
        the per-view sample covariance.
    """
    if not isinstance(pair, VariablePairView):
        pair = standardize_pair(pair, y)
    x, y = pair.x, pair.y
    bf, e = ols_residuals(y, x)
    bb, d = ols_residuals(x, y)
    return PairResiduals(bf, e), PairResiduals(bb, d)


def psd_pinv(S, rtol=PINV_RTOL):
    """Pseudo-inverse of a symmetric PSD matrix via eigendecomposition.

    Eigenvalues below ``rtol * lambda_max`` are treated as zero.
    """
    S = 0.5 * (S + S.T)
    w, V = np.linalg.eigh(S)
    lmax = w[-1] if w.size else 0.0
    if lmax <= 0:
        return np.zeros_like(S), 0
    keep = w > rtol * lmax
    inv = (V[:, keep] / w[keep]) @ V[:, keep].T
    return inv, int(keep.sum())


def fgls_row(predecessors, target):
    """One-step feasible GLS for one row of every view's ``T^i``.

    The regression of ``target`` (view ``i``) on ``predecessors[i]`` is
    stacked over views with a block-diagonal design; disturbances share a
    cross-view covariance ``Sigma`` (``Omega = Sigma kron I_n``).  Steps:
    per-view OLS, ``Sigma`` from the OLS residuals, then a GLS solve with
    ``pinv(Sigma)`` assembled blockwise.

    Parameters
    ----------
    predecessors : array, shape (m, q, n)
        The ``q = j - 1`` predecessor variables in every view.
    target : array, shape (m, n)

    Returns
    -------
    FglsRowEstimate

    Raises
    ------
    SingularSystemError
        If a per-view Gram matrix or the GLS normal matrix is singular.
    """
    X = np.asarray(predecessors, dtype=float)
    y = np.asarray(target, dtype=float)
    if X.ndim == 2:
        X = X[:, None, :]
    m, q, n = X.shape
    if y.shape != (m, n):
        raise ShapeMismatchError(f"target shape {y.shape} != {(m, n)}")
    if q == 0:
        return FglsRowEstimate(np.zeros((m, 0)), second_moment_matrix(y), np.zeros((m, 0)))

    # XX[i, k, l] = <X_ik, X_il>
    gram = np.einsum("ikn,iln->ikl", X, X)
    xy = np.einsum("ikn,in->ik", X, y)
    ols = np.empty((m, q))
    for i in range(m):
        try:
            c = np.linalg.cholesky(gram[i])
        except np.linalg.LinAlgError:
            raise SingularSystemError(
                f"predecessor Gram matrix of view {i} is singular", "ols_gram") from None
        ols[i] = np.linalg.solve(c.T, np.linalg.solve(c, xy[i]))
    resid = y - np.einsum("ik,ikn->in", ols, X)
    sigma = resid @ resid.T / n
    sigma = 0.5 * (sigma + sigma.T)

    scale = float(np.mean(second_moment(y)))
    if np.max(np.abs(sigma)) <= 1e-24 * max(scale, np.finfo(float).tiny):
        # exact fit: GLS weighting cannot change an interpolating solution
        return FglsRowEstimate(ols, sigma, ols)

    S, rank = psd_pinv(sigma)
    if rank == 0:
        raise SingularSystemError("residual covariance is numerically zero", "residual_cov")

    # cross-view products: C[i, k, i2, l] = <X_ik, X_i2 l>,  R[i, k, i2] = <X_ik, y_i2>
    cross = np.einsum("ikn,jln->ikjl", X, X)
    rcross = np.einsum("ikn,jn->ikj", X, y)
    normal = (S[:, None, :, None] * cross).reshape(m * q, m * q)
    rhs = np.einsum("ij,ikj->ik", S, rcross).reshape(m * q)
    normal = 0.5 * (normal + normal.T)
    w = np.linalg.eigvalsh(normal)
    if w[-1] <= 0 or w[0] <= NORMAL_RCOND * w[-1]:
        raise SingularSystemError(
            f"GLS normal matrix is singular (eigenvalue range {w[0]:.3g}..{w[-1]:.3g})",
            "normal_matrix")
    coef = np.linalg.solve(normal, rhs).reshape(m, q)
    return FglsRowEstimate(coef, sigma, ols)


def second_moment_matrix(a):
    a = np.asarray(a, dtype=float)
    return a @ a.T / a.shape[-1]
