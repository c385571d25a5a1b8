"""Causal ordering by recursive residuals.

At each level a skew-symmetric score matrix ``M`` is built from all variable
pairs, the most root-like variable is selected, regressed out of the others
(separately in every view) and the procedure repeats on the residuals.
"""

import numpy as np

from .core import as_array, center, standardize_rows
from .criteria import CriterionKind, batch_scores
from .exceptions import LimvamError, ShapeMismatchError, ZeroVarianceError
from .regress import ols_residuals


def _annotate(exc, text, **attrs):
    if exc.args:
        exc.args = (f"{text}: {exc.args[0]}",) + tuple(exc.args[1:])
    for k, v in attrs.items():
        setattr(exc, k, v)
    return exc


def score_matrix(data, kind="lr"):
    """Pairwise criterion matrix ``M`` for centred multi-view data.

    ``M[j, k] > 0`` indicates ``x_j -> x_k``.  Entries are computed for
    ``j < k`` from the standardized pair and ``M[k, j] = -M[j, k]``.

    Raises
    ------
    LimvamError
        Criterion errors, with ``exc.pair`` set to the offending ``(j, k)``.
    """
    X = as_array(data)
    m, p, n = X.shape
    kind = CriterionKind.parse(kind)
    M = np.zeros((p, p))
    if p < 2:
        return M
    try:
        Z = standardize_rows(X)
    except ZeroVarianceError as exc:
        raise _annotate(exc, "standardizing variables", pair=None)
    rows, cols = np.triu_indices(p, k=1)
    Zv = np.swapaxes(Z, 0, 1)  # (p, m, n)
    try:
        vals = batch_scores(Zv[rows], Zv[cols], kind)
    except LimvamError:
        for j, k in zip(rows, cols):
            try:
                batch_scores(Zv[j][None], Zv[k][None], kind)
            except LimvamError as exc:
                raise _annotate(exc, f"pair ({j}, {k})", pair=(int(j), int(k)))
        raise
    M[rows, cols] = vals
    M[cols, rows] = -vals
    return M


def root_scores(M):
    """Per-row ``sum_j min(0, M[i, j])^2``; the root minimises it."""
    M = np.asarray(M, dtype=float)
    return np.sum(np.minimum(0.0, M) ** 2, axis=1)


def select_root(M):
    """Index of the most root-like variable; ties go to the lowest index."""
    return int(np.argmin(root_scores(M)))


def regress_out(data, root):
    """Replace every other variable by its per-view OLS residual on ``root``.

    Returns an array with ``p - 1`` variables (original order kept, root
    removed).  Scales are not standardized.
    """
    X = as_array(data)
    m, p, n = X.shape
    if not 0 <= root < p:
        raise IndexError(f"root {root} out of range for p = {p}")
    others = [k for k in range(p) if k != root]
    if not others:
        return X[:, :0, :].copy()
    try:
        _, resid = ols_residuals(X[:, others, :], X[:, root:root + 1, :])
    except ZeroVarianceError as exc:
        raise _annotate(exc, f"root variable {root} is degenerate", variable=root)
    return resid


def causal_order(data, kind="lr", return_scores=False):
    """Estimate the shared causal ordering of multi-view data.

    Parameters
    ----------
    data : MultiViewData or array (m, p, n)
        Centred data.
    kind : {"lr", "fc"}
    return_scores : bool
        Also return the score matrix computed at each recursion level.

    Returns
    -------
    perm : ndarray of int
        ``perm[k]`` is the original index of the k-th variable in causal
        order.
    scores : list of ndarray, only when ``return_scores``
    """
    X = np.array(as_array(data), dtype=float)
    m, p, n = X.shape
    if p < 1:
        raise ShapeMismatchError("need at least one variable")
    remaining = list(range(p))
    order = []
    scores = []
    depth = 0
    while len(remaining) > 1:
        try:
            M = score_matrix(X, kind)
            r = select_root(M)
            X = regress_out(X, r)
        except LimvamError as exc:
            raise _annotate(exc, f"ordering depth {depth}", depth=depth)
        scores.append(M)
        order.append(remaining.pop(r))
        depth += 1
    order.extend(remaining)
    perm = np.array(order, dtype=int)
    if return_scores:
        return perm, scores
    return perm


def order_centered(data, kind="lr"):
    """Convenience wrapper: centre, then :func:`causal_order`."""
    return causal_order(center(as_array(data)), kind)
