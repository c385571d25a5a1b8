"""Pairwise estimators: recursive-residual ordering followed by FGLS rows.

``fit_pairwise(data, "lr")`` is PairwiseLiMVAM and ``fit_pairwise(data, "fc")``
is DirectLiMVAM.
"""

import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from .core import AdjacencySet, as_array, center, from_causal_frame
from .criteria import CriterionKind
from .exceptions import SampleSizeWarning, ShapeMismatchError, SingularSystemError
from .ordering import causal_order
from .regress import fgls_row


@dataclass(frozen=True)
class FitResult:
    """Output of :func:`fit_pairwise`."""

    ordering: np.ndarray
    adjacency: AdjacencySet
    diagnostics: dict = field(default_factory=dict)

    @property
    def B(self):
        return self.adjacency.matrices


def estimate_coefficients(data, perm):
    """FGLS estimate of every ``B^i`` given a shared ordering.

    Returns ``(B, info)`` where ``info`` lists per-row residual-covariance
    condition numbers and the rows that fell back to OLS.
    """
    X = as_array(data)
    m, p, n = X.shape
    T = np.zeros((m, p, p))
    conds = []
    fallbacks = []
    for k in range(1, p):
        pred = X[:, perm[:k], :]
        target = X[:, perm[k], :]
        try:
            est = fgls_row(pred, target)
            coef, sigma = est.coefficients, est.residual_cov
        except SingularSystemError as exc:
            if exc.matrix != "normal_matrix":
                raise
            # duplicated views make the GLS system rank deficient: keep OLS
            coef = _ols_rows(pred, target)
            resid = target - np.einsum("ik,ikn->in", coef, pred)
            sigma = resid @ resid.T / n
            fallbacks.append(int(perm[k]))
        T[:, k, :k] = coef
        conds.append(float(np.linalg.cond(sigma)))
    return from_causal_frame(T, perm), {"residual_cov_cond": conds, "ols_fallback_rows": fallbacks}


def _ols_rows(pred, target):
    gram = np.einsum("ikn,iln->ikl", pred, pred)
    xy = np.einsum("ikn,in->ik", pred, target)
    return np.linalg.solve(gram, xy[..., None])[..., 0]


def fit_pairwise(data, kind="lr"):
    """Fit a multi-view linear acyclic model by pairwise comparisons.

    Parameters
    ----------
    data : MultiViewData or array (m, p, n)
        Raw or centred observations; centring is applied internally.
    kind : {"lr", "fc"}
        Direction criterion: likelihood ratio or Frobenius cross-covariance.

    Returns
    -------
    FitResult
        ``diagnostics`` holds stage timings in seconds (``time_ordering``,
        ``time_coefficients``, ``time_total``), the criterion, residual
        covariance condition numbers and the top-level score matrix.

    Warns
    -----
    SampleSizeWarning
        When ``n <= m * p``.
    """
    t0 = time.perf_counter()
    kind = CriterionKind.parse(kind)
    X = center(as_array(data))
    m, p, n = X.shape
    if p < 1:
        raise ShapeMismatchError("need at least one variable")
    diag = {"criterion": kind.value, "m": m, "p": p, "n": n}
    if n <= m * p:
        warnings.warn(f"n = {n} <= m * p = {m * p}; estimates may be unreliable",
                      SampleSizeWarning, stacklevel=2)
        diag["sample_size_warning"] = True
    perm, scores = causal_order(X, kind, return_scores=True)
    t1 = time.perf_counter()
    B, info = estimate_coefficients(X, perm)
    t2 = time.perf_counter()
    diag.update(info)
    diag["score_matrices"] = scores
    diag["time_ordering"] = t1 - t0
    diag["time_coefficients"] = t2 - t1
    diag["time_total"] = t2 - t0
    return FitResult(perm, AdjacencySet(B, "shared"), diag)


def median_effects(adjacency_sets):
    """Element-wise median of adjacency matrices pooled over sets and views.

    Accepts a list of :class:`AdjacencySet` (e.g. one per subject) or bare
    ``(p, p)`` / ``(m, p, p)`` arrays.
    """
    mats = []
    for a in adjacency_sets:
        arr = a.matrices if isinstance(a, AdjacencySet) else np.asarray(a, dtype=float)
        if arr.ndim == 2:
            arr = arr[None]
        mats.append(arr)
    if not mats:
        raise ShapeMismatchError("no matrices given")
    shapes = {a.shape[1:] for a in mats}
    if len(shapes) != 1:
        raise ShapeMismatchError(f"adjacency sets disagree on p: {sorted(shapes)}")
    return np.median(np.concatenate(mats, axis=0), axis=0)
