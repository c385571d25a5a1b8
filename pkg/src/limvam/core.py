"""Shared data containers, orderings and DAG validation.

Conventions used throughout the package:

* multi-view data is an array of shape ``(m, p, n)`` indexed
  ``[view, variable, sample]``;
* all (co)variances use the ``1/n`` normalisation;
* an ordering ``perm`` is an integer array where ``perm[k]`` is the original
  index of the k-th variable in causal order (roots first).  With the
  permutation matrix ``P[k, perm[k]] = 1`` an adjacency matrix decomposes as
  ``B = P.T @ T @ P`` with ``T`` strictly lower triangular, i.e.
  ``T = B[perm][:, perm]``.
"""

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .exceptions import CyclicGraphError, ShapeMismatchError, ZeroVarianceError

ZERO_VARIANCE_TOL = 1e-14


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class MultiViewData:
    """Observations of ``p`` variables in ``m`` views, ``n`` samples each."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 3:
            raise ShapeMismatchError(
                f"expected an (m, p, n) array, got shape {v.shape}")
        if min(v.shape) < 1:
            raise ShapeMismatchError(f"empty dimension in shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("data contains non-finite entries")
        object.__setattr__(self, "values", _frozen(v))

    @property
    def m(self):
        return self.values.shape[0]

    @property
    def p(self):
        return self.values.shape[1]

    @property
    def n(self):
        return self.values.shape[2]

    @property
    def shape(self):
        return self.values.shape

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)


def as_array(data):
    """Return the ``(m, p, n)`` float array behind ``data``."""
    if isinstance(data, MultiViewData):
        return data.values
    arr = np.asarray(data, dtype=float)
    if arr.ndim != 3:
        raise ShapeMismatchError(
            f"expected an (m, p, n) array, got shape {arr.shape}")
    return arr


@dataclass(frozen=True)
class AdjacencySet:
    """Per-view causal coefficient matrices ``B^i`` (row = effect, col = cause).

    ``B[i][j, k] != 0`` means variable ``k`` causes ``j`` in view ``i``.
    """

    matrices: np.ndarray
    ordering_mode: str = "shared"

    def __post_init__(self):
        mats = np.asarray(self.matrices, dtype=float)
        if mats.ndim == 2:
            mats = mats[None]
        if mats.ndim != 3 or mats.shape[1] != mats.shape[2]:
            raise ShapeMismatchError(
                f"expected (m, p, p) matrices, got shape {mats.shape}")
        if self.ordering_mode not in ("shared", "per_view"):
            raise ValueError(f"unknown ordering_mode {self.ordering_mode!r}")
        object.__setattr__(self, "matrices", _frozen(mats))

    @property
    def m(self):
        return self.matrices.shape[0]

    @property
    def p(self):
        return self.matrices.shape[1]

    def __len__(self):
        return self.m

    def __getitem__(self, i):
        return self.matrices[i]


@dataclass(frozen=True)
class VariablePairView:
    """One variable pair stacked across views: ``x`` and ``y`` are ``(m, n)``."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.atleast_2d(np.asarray(self.x, dtype=float))
        y = np.atleast_2d(np.asarray(self.y, dtype=float))
        if x.shape != y.shape:
            raise ShapeMismatchError(
                f"pair shapes differ: {x.shape} vs {y.shape}")
        object.__setattr__(self, "x", _frozen(x))
        object.__setattr__(self, "y", _frozen(y))


def center(data):
    """Subtract the per-(view, variable) sample mean.

    Returns a :class:`MultiViewData` if given one, otherwise an array.
    """
    arr = as_array(data)
    out = arr - arr.mean(axis=-1, keepdims=True)
    if isinstance(data, MultiViewData):
        return MultiViewData(out)
    return out


def second_moment(a, axis=-1):
    """``1/n`` sum of squares along ``axis``."""
    a = np.asarray(a, dtype=float)
    return np.einsum("...i,...i->...", a, a) / a.shape[axis]


def standardize_rows(a):
    """Scale each row of ``a`` (last axis = samples) to unit ``1/n`` second moment.

    Rows are not re-centred; callers pass centred data.
    """
    a = np.asarray(a, dtype=float)
    var = second_moment(a)
    bad = var < ZERO_VARIANCE_TOL
    if np.any(bad):
        idx = tuple(int(i) for i in np.argwhere(bad)[0])
        raise ZeroVarianceError(
            f"row {idx} has sample variance {var[idx]:.3g} < {ZERO_VARIANCE_TOL}",
            view=idx[0] if idx else None,
            variable=idx[1] if len(idx) > 1 else None)
    return a / np.sqrt(var)[..., None]


def standardize_pair(x, y):
    """Standardize each view of a variable pair to unit sample variance.

    Parameters
    ----------
    x, y : array-like, shape (m, n)
        The two variables, one row per view.

    Returns
    -------
    VariablePairView

    Raises
    ------
    ZeroVarianceError
        If any row has sample variance below ``1e-14``.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.atleast_2d(np.asarray(y, dtype=float))
    if x.shape != y.shape:
        raise ShapeMismatchError(f"pair shapes differ: {x.shape} vs {y.shape}")
    return VariablePairView(standardize_rows(x), standardize_rows(y))


# -- orderings -------------------------------------------------------------

def check_ordering(perm, p=None):
    """Validate and return ``perm`` as an int array; raises ValueError otherwise."""
    perm = np.asarray(perm)
    if perm.ndim != 1 or (perm.size and not np.issubdtype(perm.dtype, np.integer)):
        raise ValueError(f"ordering must be a 1-d integer sequence, got {perm!r}")
    perm = perm.astype(int)
    if p is not None and perm.size != p:
        raise ValueError(f"ordering has length {perm.size}, expected {p}")
    if not np.array_equal(np.sort(perm), np.arange(perm.size)):
        raise ValueError(f"ordering {perm.tolist()} is not a permutation")
    return perm


def is_permutation(perm, p=None):
    try:
        check_ordering(perm, p)
    except ValueError:
        return False
    return True


def permutation_matrix(perm):
    """Matrix ``P`` with ``P[k, perm[k]] = 1`` (so ``(P x)_k = x[perm[k]]``)."""
    perm = check_ordering(perm)
    P = np.zeros((perm.size, perm.size))
    P[np.arange(perm.size), perm] = 1.0
    return P


def ordering_from_matrix(P):
    """Inverse of :func:`permutation_matrix`."""
    P = np.asarray(P)
    return check_ordering(np.argmax(P, axis=1))


def to_causal_frame(B, perm):
    """Return ``T = P B P^T`` for one matrix or a stack of them."""
    perm = check_ordering(perm)
    B = np.asarray(B)
    return B[..., perm, :][..., :, perm]


def from_causal_frame(T, perm):
    """Return ``B = P^T T P`` (inverse of :func:`to_causal_frame`)."""
    perm = check_ordering(perm)
    T = np.asarray(T)
    B = np.zeros_like(T)
    B[..., perm[:, None], perm[None, :]] = T
    return B


def is_compatible(B, perm, tol=1e-10):
    """True if ``perm`` makes every matrix in ``B`` strictly lower triangular."""
    T = to_causal_frame(B, perm)
    upper = np.triu(np.ones(T.shape[-2:], dtype=bool))
    return bool(np.all(np.abs(T[..., upper]) <= tol))


def validate_dag(matrix, tol=0.0):
    """Topologically sort the support of an adjacency matrix.

    Uses Kahn's algorithm on the graph with an edge ``k -> j`` wherever
    ``|matrix[j, k]| > tol``.  Among available roots the smallest index is
    taken first, so an already-ordered matrix yields the identity ordering.

    Returns
    -------
    ndarray of int
        An ordering that strictly-lower-triangularizes the support.

    Raises
    ------
    CyclicGraphError
        If the support contains a directed cycle (including self-loops).
    """
    A = np.asarray(matrix, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ShapeMismatchError(f"expected a square matrix, got {A.shape}")
    support = np.abs(A) > tol
    p = A.shape[0]
    indeg = support.sum(axis=1)
    placed = np.zeros(p, dtype=bool)
    order = []
    for _ in range(p):
        ready = np.flatnonzero((indeg == 0) & ~placed)
        if ready.size == 0:
            raise CyclicGraphError(
                f"support graph has a directed cycle among variables "
                f"{np.flatnonzero(~placed).tolist()}")
        k = ready[0]
        placed[k] = True
        order.append(k)
        indeg = indeg - support[:, k]
    return np.array(order, dtype=int)


def validate_adjacency(adjacency, orderings=None, det_tol=1e-8):
    """Check the structural invariants of an :class:`AdjacencySet`.

    Returns a list of human-readable problems (empty when everything holds):
    each matrix is a DAG, ``det(I - B) = 1`` within ``det_tol`` and, when
    ``orderings`` is given (one shared ordering or one per view), the
    ordering triangularizes the matrices.
    """
    problems = []
    mats = adjacency.matrices if isinstance(adjacency, AdjacencySet) else np.asarray(adjacency)
    p = mats.shape[-1]
    for i, B in enumerate(mats):
        try:
            validate_dag(B)
        except CyclicGraphError as exc:
            problems.append(f"view {i}: {exc}")
        det = np.linalg.det(np.eye(p) - B)
        if not abs(det - 1.0) <= det_tol:
            problems.append(f"view {i}: det(I - B) = {det!r}")
    if orderings is not None:
        orderings = np.asarray(orderings)
        per_view = orderings.ndim == 2
        for i, B in enumerate(mats):
            perm = orderings[i] if per_view else orderings
            if not is_permutation(perm, p):
                problems.append(f"view {i}: ordering {perm} is not a permutation")
            elif not is_compatible(B, perm):
                problems.append(f"view {i}: ordering {perm.tolist()} does not triangularize B")
    return problems
