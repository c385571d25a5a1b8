"""Second-order shared ICA ("J" variant).

Model: ``x^i = A^i (s + n~^i)`` with ``E[s s^T] = I`` and diagonal view
noise.  Then ``C^{ii'} = A^i A^{i'T}`` for ``i != i'``, so after whitening
every view with ``(C^{ii})^{-1/2}`` the problem reduces to finding one
orthogonal matrix ``V^i`` per view such that all whitened cross-covariances
``V^i H^{ii'} V^{i'T}`` are diagonal.  This is solved by cyclic Jacobi
rotations, each one the exact optimum of the objective over its plane, so
the objective never increases.

The unmixing is then rescaled so that the shared component has unit
variance in every view; the per-view scale and noise variance of each
component come from the triple-product rule on cross-view covariances.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from .core import as_array, center
from .criteria import PD_TOL
from .exceptions import NoConvergenceWarning, NonPositiveDefiniteError, UnstableTripleError

TRIPLE_TOL = 1e-8


@dataclass(frozen=True)
class ShicaResult:
    """Unmixing ``W^i`` (``(m, p, p)``) with ``W^i x^i ~ s + n~^i``.

    ``noise_vars[i, j]`` is the variance of ``n~^i_j`` (shared component has
    unit variance) and ``shared_scales[i, j]`` the scale that was divided
    out of row ``j`` of the whitened unmixing.
    """

    unmixing: np.ndarray
    noise_vars: np.ndarray
    shared_scales: np.ndarray
    diagnostics: dict = field(default_factory=dict)


def cross_covariances(data):
    """All ``C^{ii'} = 1/n sum_k x^i_k x^{i'T}_k`` for ``i <= i'``.

    Returns a dict keyed by ``(i, i')``.
    """
    X = as_array(data)
    m, p, n = X.shape
    full = np.einsum("ikn,jln->ijkl", X, X) / n
    return {(i, j): full[i, j] for i in range(m) for j in range(i, m)}


def _views(covs):
    return 1 + max(max(k) for k in covs)


def _inv_sqrt(C, name):
    C = 0.5 * (C + C.T)
    w, U = np.linalg.eigh(C)
    if w[0] <= PD_TOL * max(w[-1], 1.0):
        raise NonPositiveDefiniteError(
            f"{name} is not positive definite (min eigenvalue {w[0]:.3g})", name)
    return (U / np.sqrt(w)) @ U.T


def _offdiag_sq(P):
    return np.sum(P ** 2) - np.sum(np.diagonal(P, axis1=-2, axis2=-1) ** 2)


def jd_objective(covs, unmixing):
    """Sum over view pairs of the squared off-diagonal of ``W^i C^{ii'} W^{i'T}``."""
    m = _views(covs)
    total = 0.0
    for i in range(m):
        for j in range(i + 1, m):
            total += _offdiag_sq(unmixing[i] @ covs[(i, j)] @ unmixing[j].T)
    return total


def _whitened_objective(P):
    m = P.shape[0]
    return sum(_offdiag_sq(P[i, j]) for i in range(m) for j in range(i + 1, m))


def _products(V, H):
    return np.einsum("iab,ijbc,jdc->ijad", V, H, V)


def _svd_init(H):
    m, _, p, _ = H.shape
    norms = [(np.linalg.norm(H[i, j]), i, j) for i in range(m) for j in range(i + 1, m)]
    _, a, b = max(norms)
    U, _, Vt = np.linalg.svd(H[a, b])
    V = np.empty((m, p, p))
    V[a] = U.T
    V[b] = Vt
    for c in range(m):
        if c in (a, b):
            continue
        # orthogonal Procrustes: best rotation making V_c H[c, a] V_a^T diagonal-dominant
        U2, _, Vt2 = np.linalg.svd(H[c, a] @ V[a].T)
        V[c] = (U2 @ Vt2).T
    return V


def joint_diagonalize(covs, p=None, tol=1e-10, max_sweeps=1000, return_info=False):
    """Non-orthogonal joint diagonalization of a cross-covariance set.

    Parameters
    ----------
    covs : dict
        ``{(i, i'): C^{ii'}}`` for ``i <= i'`` as from :func:`cross_covariances`.
    p : int, optional
        Matrix size (inferred from ``covs``).
    tol : float
        Stop when the relative objective decrease over a sweep is below it.
    max_sweeps : int

    Returns
    -------
    W : ndarray (m, p, p)
        Unmixing matrices with ``diag(W^i C^{ii} W^{iT}) = 1``.
    info : dict, only when ``return_info``
        ``objective`` history (one entry per sweep, starting value first),
        ``converged`` and ``sweeps``.

    Warns
    -----
    NoConvergenceWarning
        When ``max_sweeps`` is reached; the last iterate is returned.
    """
    m = _views(covs)
    if p is None:
        p = covs[(0, 0)].shape[0]
    K = np.stack([_inv_sqrt(covs[(i, i)], f"C[{i},{i}]") for i in range(m)])
    H = np.zeros((m, m, p, p))
    for i in range(m):
        for j in range(i + 1, m):
            H[i, j] = K[i] @ covs[(i, j)] @ K[j]
            H[j, i] = H[i, j].T

    V = np.broadcast_to(np.eye(p), (m, p, p)).copy()
    # below this the set counts as diagonal: rotations are then arbitrary
    # (e.g. noise-free views) and the whitening frame is kept
    floor = 1e-20 * sum(np.sum(H[i, j] ** 2) for i in range(m) for j in range(i + 1, m))
    if m > 1:
        obj_id = _whitened_objective(_products(V, H))
        V_svd = _svd_init(H)
        if _whitened_objective(_products(V_svd, H)) < obj_id - floor:
            V = V_svd
    P = _products(V, H)
    obj = _whitened_objective(P)
    history = [obj]
    converged = m == 1 or p == 1 or obj <= floor
    sweeps = 0
    pairs = [(a, b) for a in range(p - 1) for b in range(a + 1, p)]
    while not converged and sweeps < max_sweeps:
        sweeps += 1
        for i in range(m):
            others = [j for j in range(m) if j != i]
            A = P[i, others]  # (m-1, p, p), rows belong to view i
            Vi = V[i]
            for a, b in pairs:
                paa, pba, pbb, pab = A[:, a, a], A[:, b, a], A[:, b, b], A[:, a, b]
                q11 = np.dot(paa, paa) + np.dot(pbb, pbb)
                q22 = np.dot(pba, pba) + np.dot(pab, pab)
                q12 = np.dot(paa, pba) - np.dot(pbb, pab)
                theta = 0.5 * np.arctan2(2.0 * q12, q11 - q22)
                c, s = np.cos(theta), np.sin(theta)
                if abs(s) < 1e-15:
                    continue
                ra, rb = A[:, a, :].copy(), A[:, b, :]
                A[:, a, :] = c * ra + s * rb
                A[:, b, :] = -s * ra + c * rb
                va, vb = Vi[a].copy(), Vi[b]
                Vi[a] = c * va + s * vb
                Vi[b] = -s * va + c * vb
            P[i, others] = A
            P[others, i] = np.swapaxes(A, -1, -2)
        new = _whitened_objective(P)
        history.append(new)
        if history[-2] - new <= tol * history[-2] or new <= 1e-30:
            converged = True

    if not converged:
        warnings.warn(f"joint diagonalization stopped after {max_sweeps} sweeps",
                      NoConvergenceWarning, stacklevel=2)
    # consistent signs: positive cross-view correlation with view 0
    for i in range(1, m):
        flip = np.diagonal(P[i, 0]) < 0
        V[i, flip] *= -1
    W = V @ K
    if return_info:
        return W, {"objective": history, "converged": converged, "sweeps": sweeps}
    return W


def _component_covariances(data, unmixing):
    X = as_array(data)
    Y = np.einsum("ikl,iln->ikn", np.asarray(unmixing), X)
    # c[i, j, k] = cov(y^i_k, y^j_k)
    return np.einsum("ikn,jkn->ijk", Y, Y) / X.shape[-1]


def _scales_from_covariances(c):
    m, _, p = c.shape
    var = np.einsum("iik->ik", c).copy()
    if m == 1:
        return var, np.zeros((1, p))
    a2 = np.empty((m, p))
    if m == 2:
        a2[:] = np.abs(c[0, 1])[None, :]
    else:
        for i in range(m):
            rest = [j for j in range(m) if j != i]
            for k in range(p):
                vals = [c[i, j, k] * c[i, l, k] / c[j, l, k]
                        for x, j in enumerate(rest) for l in rest[x + 1:]
                        if abs(c[j, l, k]) >= TRIPLE_TOL]
                if not vals:
                    raise UnstableTripleError(
                        f"component {k} has no usable view pair for view {i}")
                a2[i, k] = abs(np.median(vals))
    return a2, var - a2


def estimate_noise(data, unmixing):
    """Per-view shared scale and noise variance of every unmixed component.

    With ``y^i = W^i x^i``, the shared scale is
    ``a_ij^2 = median over view pairs (i', i'') of
    cov(y^i_j, y^{i'}_j) cov(y^i_j, y^{i''}_j) / cov(y^{i'}_j, y^{i''}_j)``
    (needs ``m >= 3``; with two views ``a_1j = a_2j = sqrt|cov(y^1_j, y^2_j)|``)
    and the noise variance is ``var(y^i_j) - a_ij^2`` clamped at zero.

    Returns
    -------
    noise_vars, shared_scales : ndarray (m, p)
    """
    c = _component_covariances(data, unmixing)
    a2, noise = _scales_from_covariances(c)
    if c.shape[0] == 1:
        a2, noise = noise + a2, np.zeros_like(a2)
    return np.maximum(noise, 0.0), np.sqrt(a2)


def fit_shica(data, tol=1e-10, max_sweeps=1000):
    """Fit the second-order shared ICA model to multi-view data.

    Returns a :class:`ShicaResult` whose unmixing rows are scaled so that
    the shared component has unit variance; ``noise_vars`` are expressed in
    that same scale.
    """
    X = center(as_array(data))
    m, p, n = X.shape
    covs = cross_covariances(X)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", NoConvergenceWarning)
        W, info = joint_diagonalize(covs, p, tol=tol, max_sweeps=max_sweeps, return_info=True)
    for w in caught:
        warnings.warn(w.message, w.category, stacklevel=2)
    c = _component_covariances(X, W)
    a2, noise = _scales_from_covariances(c)
    if m == 1:
        a2, noise = noise + a2, np.zeros_like(a2)
    clamped = int(np.sum(noise < 0))
    noise = np.maximum(noise, 0.0)
    a = np.sqrt(a2)
    if np.any(a <= 0):
        raise UnstableTripleError("a shared component has zero estimated scale")
    W_scaled = W / a[:, :, None]
    diag = dict(info)
    diag["clamped_noise"] = clamped
    diag["unmixing_cond"] = [float(np.linalg.cond(w)) for w in W_scaled]
    return ShicaResult(W_scaled, noise / a2, a, diag)
