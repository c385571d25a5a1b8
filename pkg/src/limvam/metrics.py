"""Evaluation metrics for estimated multi-view DAGs."""

import numpy as np

from .core import AdjacencySet, check_ordering
from .exceptions import ShapeMismatchError


def _mats(a):
    arr = a.matrices if isinstance(a, AdjacencySet) else np.asarray(a, dtype=float)
    return arr[None] if arr.ndim == 2 else arr


def b_error(truth, estimate, per_view=False):
    """Root-sum-of-squares Frobenius distance ``sqrt(sum_i ||B^i - B^i_hat||_F^2)``.

    With ``per_view=True`` returns ``(aggregate, per_view_errors)``.
    """
    T, E = _mats(truth), _mats(estimate)
    if T.shape != E.shape:
        raise ShapeMismatchError(f"truth has shape {T.shape}, estimate {E.shape}")
    views = np.sqrt(np.sum((T - E) ** 2, axis=(1, 2)))
    total = float(np.sqrt(np.sum(views ** 2)))
    return (total, views) if per_view else total


def ordering_error(truth_adjacency, estimate):
    """1 if ``estimate`` puts some true effect before its cause, else 0.

    An edge ``j -> k`` exists when any view has ``B^i[k, j] != 0``.  With
    per-view orderings (``estimate`` of shape ``(m, p)``) each view is
    checked against its own adjacency and the result is 1 if any fails.
    """
    T = _mats(truth_adjacency)
    est = np.asarray(estimate, dtype=int)
    if est.ndim == 1:
        orders, graphs = [est], [np.abs(T).sum(axis=0)]
    else:
        orders, graphs = list(est), list(np.abs(T))
    for perm, G in zip(orders, graphs):
        perm = check_ordering(perm, G.shape[0])
        pos = np.empty_like(perm)
        pos[perm] = np.arange(perm.size)
        effects, causes = np.nonzero(G)
        if np.any(pos[causes] >= pos[effects]):
            return 1
    return 0


def spearman(truth, estimate):
    """Spearman rank correlation of the positions of each variable."""
    a, b = np.asarray(truth, dtype=int), np.asarray(estimate, dtype=int)
    p = a.size
    if b.size != p:
        raise ShapeMismatchError(f"orderings have lengths {p} and {b.size}")
    if p < 2:
        raise ValueError("Spearman correlation needs p >= 2")
    ra, rb = np.empty(p), np.empty(p)
    ra[a] = np.arange(p)
    rb[b] = np.arange(p)
    d2 = np.sum((ra - rb) ** 2)
    return float(1.0 - 6.0 * d2 / (p * (p * p - 1)))


def mean_spearman(truth, estimate):
    """Spearman averaged over views when either ordering is per-view."""
    a, b = np.atleast_2d(truth), np.atleast_2d(estimate)
    m = max(a.shape[0], b.shape[0])
    a = np.broadcast_to(a, (m, a.shape[1]))
    b = np.broadcast_to(b, (m, b.shape[1]))
    return float(np.mean([spearman(x, y) for x, y in zip(a, b)]))


def amari_distance(unmixing, mixing):
    """Permutation- and scale-invariant discrepancy of ``W A`` from a scaled permutation.

    Zero iff ``W A`` is a scaled permutation; normalised to ``[0, 1]``.
    """
    P = np.abs(np.asarray(unmixing) @ np.asarray(mixing))
    p = P.shape[0]
    if p < 2:
        return 0.0
    rows = np.sum(P / P.max(axis=1, keepdims=True), axis=1) - 1
    cols = np.sum(P / P.max(axis=0, keepdims=True), axis=0) - 1
    return float((rows.sum() + cols.sum()) / (2 * p * (p - 1)))
