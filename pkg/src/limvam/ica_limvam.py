"""ICA-based estimator for the shared-disturbance model.

Given unmixing matrices ``W^i = M (D^i)^{-1} (I - B^i)`` known up to a
sign-permutation ``M`` shared by all views, the permutation is fixed by an
assignment that puts large entries on the diagonal, the scales ``D^i`` are
read off the diagonals and ``B^i = I - D^i M W^i``.  The causal ordering is
then found with the LiNGAM "Algorithm C" heuristic on ``sum_i |B^i|``.
"""

import itertools
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .core import AdjacencySet, as_array, center, to_causal_frame, from_causal_frame
from .exceptions import DegenerateRowError, ZeroDiagonalError
from .shared_ica import fit_shica

ROW_TOL = 1e-12
DIAG_TOL = 1e-10


@dataclass(frozen=True)
class IcaFitResult:
    """Output of :func:`fit_ica`.

    ``ordering`` is one permutation (shared mode) or an ``(m, p)`` array
    (per-view mode).  ``adjacency`` is the estimate pruned to the ordering;
    the unpruned ``B^i`` are kept in ``raw_adjacency``.
    """

    adjacency: AdjacencySet
    scales: np.ndarray
    noise_vars: np.ndarray
    ordering: np.ndarray
    raw_adjacency: np.ndarray = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def B(self):
        return self.adjacency.matrices


def resolve_permutation(w_abs_sum):
    """Row permutation putting the largest entries of ``W`` on the diagonal.

    Minimises ``sum_j 1 / |(M W)_jj|`` by optimal assignment with cost
    ``1 / max(|W[r, c]|, 1e-12)``.

    Returns
    -------
    perm : ndarray of int
        ``perm[j]`` is the row of ``W`` moved to position ``j``, i.e.
        ``(M W) = W[perm]``.
    """
    W = np.abs(np.asarray(w_abs_sum, dtype=float))
    if W.ndim != 2 or W.shape[0] != W.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {W.shape}")
    dead = np.all(W <= ROW_TOL, axis=1)
    if np.any(dead):
        raise DegenerateRowError(f"rows {np.flatnonzero(dead).tolist()} are all below {ROW_TOL}")
    cost = 1.0 / np.maximum(W, ROW_TOL)
    rows, cols = linear_sum_assignment(cost)
    perm = np.empty(W.shape[0], dtype=int)
    perm[cols] = rows
    return perm


def resolve_signs_scales(unmixing, perm, noise_vars=None):
    """Scales, adjacency matrices and rescaled noise from permuted unmixings.

    Signs are chosen per component from the pooled signed diagonal
    ``sum_i (M W^i)_jj``; views whose own diagonal disagrees get
    ``D^i_jj = |1 / (M W^i)_jj|`` (counted in the returned
    ``sign_disagreements``).  ``B^i = I - D^i M W^i`` does not depend on the
    sign of a row, since it divides the row by its own diagonal.

    Returns
    -------
    scales : ndarray (m, p)
    B : ndarray (m, p, p)
    noise : ndarray (m, p) or None
        ``(D^i)^2`` times the permuted noise variances.
    sign_disagreements : int
    """
    W = np.asarray(unmixing, dtype=float)
    if W.ndim == 2:
        W = W[None]
    m, p, _ = W.shape
    perm = np.asarray(perm, dtype=int)
    MW = W[:, perm, :]
    diag = np.diagonal(MW, axis1=1, axis2=2)  # (m, p)
    small = np.abs(diag) <= DIAG_TOL
    if np.any(small):
        i, j = np.argwhere(small)[0]
        raise ZeroDiagonalError(f"view {i}, row {j}: permuted diagonal is ~0", int(i), int(j))
    pooled_sign = np.sign(diag.sum(axis=0))
    pooled_sign[pooled_sign == 0] = 1.0
    MW = MW * pooled_sign[None, :, None]
    diag = diag * pooled_sign[None, :]
    disagreements = int(np.sum(diag < 0))
    scales = 1.0 / np.abs(diag)
    B = np.eye(p)[None] - MW / diag[:, :, None]
    noise = None
    if noise_vars is not None:
        noise = np.asarray(noise_vars, dtype=float)[:, perm] * scales ** 2
    return scales, B, noise, disagreements


def _algorithm_b(mask):
    """Peel all-zero rows (no remaining parents); None if impossible."""
    p = mask.shape[0]
    remaining = list(range(p))
    order = []
    while remaining:
        sub = mask[np.ix_(remaining, remaining)]
        rows = np.flatnonzero(~sub.any(axis=1))
        if rows.size == 0:
            return None
        k = remaining.pop(rows[0])
        order.append(k)
    return np.array(order, dtype=int)


def ordering_from_adjacency(b_abs_sum, return_calls=False):
    """Permutation making ``B`` as close to strictly lower triangular as possible.

    LiNGAM Algorithm C: zero the ``p(p+1)/2`` smallest entries (by absolute
    value), then keep zeroing the next smallest one until Algorithm B (peel
    a row whose remaining entries are all zero) orders every variable.
    """
    Bm = np.abs(np.asarray(b_abs_sum, dtype=float))
    p = Bm.shape[0]
    if p <= 1:
        return (np.zeros(p, dtype=int), 0) if return_calls else np.zeros(p, dtype=int)
    flat_order = np.argsort(Bm, axis=None, kind="stable")
    nonzero = np.ones(p * p, dtype=bool)
    start = p * (p + 1) // 2
    nonzero[flat_order[:start]] = False
    calls = 0
    for t in range(start, p * p + 1):
        if t > start:
            nonzero[flat_order[t - 1]] = False
        calls += 1
        order = _algorithm_b(nonzero.reshape(p, p))
        if order is not None:
            return (order, calls) if return_calls else order
    raise AssertionError("unreachable: an all-zero matrix always admits an ordering")


def upper_mass(B, perm):
    """``sum_{l >= k} (P B P^T)_{kl}^2``: squared mass not below the diagonal."""
    T = to_causal_frame(np.abs(np.asarray(B, dtype=float)), perm)
    return float(np.sum(np.triu(T) ** 2))


def brute_force_ordering(B):
    """Exhaustive minimiser of :func:`upper_mass` (for small ``p``)."""
    p = np.asarray(B).shape[0]
    best = min(itertools.permutations(range(p)), key=lambda q: (upper_mass(B, q), q))
    return np.array(best, dtype=int)


def prune_to_ordering(B, perm):
    """Zero the entries of ``B`` that the ordering places on/above the diagonal."""
    T = to_causal_frame(B, perm)
    return from_causal_frame(np.tril(T, k=-1), perm)


def fit_ica(data, mode="shared", backend=None):
    """Fit the shared-disturbance model via shared ICA.

    Parameters
    ----------
    data : MultiViewData or array (m, p, n)
    mode : {"shared", "per_view"}
        One causal ordering for all views, or one per view.
    backend : callable, optional
        ``backend(X) -> ShicaResult``; defaults to :func:`fit_shica`.

    Returns
    -------
    IcaFitResult
    """
    if mode not in ("shared", "per_view"):
        raise ValueError(f"mode must be 'shared' or 'per_view', got {mode!r}")
    t0 = time.perf_counter()
    X = center(as_array(data))
    m, p, n = X.shape
    shica = (backend or fit_shica)(X)
    t1 = time.perf_counter()
    W = np.asarray(shica.unmixing)
    perm = resolve_permutation(np.abs(W).sum(axis=0))
    scales, B_raw, noise, disagreements = resolve_signs_scales(W, perm, shica.noise_vars)
    if mode == "shared":
        ordering = ordering_from_adjacency(np.abs(B_raw).sum(axis=0))
        B = prune_to_ordering(B_raw, ordering)
    else:
        ordering = np.stack([ordering_from_adjacency(np.abs(b)) for b in B_raw])
        B = np.stack([prune_to_ordering(b, o) for b, o in zip(B_raw, ordering)])
    t2 = time.perf_counter()
    diag = dict(shica.diagnostics)
    diag.update({
        "m": m, "p": p, "n": n,
        "backend": "shica-j" if backend is None else getattr(backend, "__name__", "custom"),
        "sign_disagreements": disagreements,
        "component_permutation": perm,
        "time_backend": t1 - t0,
        "time_postprocess": t2 - t1,
        "time_total": t2 - t0,
    })
    return IcaFitResult(AdjacencySet(B, mode), scales, noise, ordering, B_raw, diag)
