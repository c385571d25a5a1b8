"""Synthetic multi-view SEM generators with retained ground truth.

Randomness comes from counter-based Philox streams derived from
``(seed, stream tag, view, variable)`` so that every source, noise series
and parameter draw is reproducible independently of evaluation order.
"""

import re
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import gammaln

from .core import AdjacencySet, from_causal_frame, is_compatible, to_causal_frame

# stream tags
DAG, PARAMS, SOURCE, NOISE, DISTURBANCE, CORRELATION = range(6)


def make_rng(seed, *stream):
    """Philox generator for ``seed`` and an integer stream key."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(s) for s in stream))
    return np.random.Generator(np.random.Philox(ss))


def _rng(rng, *stream):
    if isinstance(rng, np.random.Generator):
        return rng
    return make_rng(0 if rng is None else rng, *stream)


# -- sources ---------------------------------------------------------------

_GENNORM = re.compile(r"^gennorm\(\s*([0-9.eE+-]+)\s*\)$")


def parse_source_kind(kind):
    """Normalise a source tag to ``"gaussian"``, ``"laplace"`` or ``"gennorm(beta)"``."""
    if isinstance(kind, (int, float)):
        beta = float(kind)
    else:
        k = str(kind).strip().lower()
        if k in ("gaussian", "normal", "gauss"):
            return "gaussian"
        if k == "laplace":
            return "laplace"
        match = _GENNORM.match(k)
        if not match:
            raise ValueError(f"unknown source kind {kind!r}")
        beta = float(match.group(1))
    if not beta > 0:
        raise ValueError(f"generalized normal shape must be positive, got {beta}")
    return f"gennorm({beta:g})"


def source_beta(kind):
    kind = parse_source_kind(kind)
    if kind == "gaussian":
        return 2.0
    if kind == "laplace":
        return 1.0
    return float(_GENNORM.match(kind).group(1))


def is_gaussian(kind):
    return source_beta(kind) == 2.0


def gennorm_excess_kurtosis(beta):
    return float(np.exp(gammaln(5 / beta) + gammaln(1 / beta) - 2 * gammaln(3 / beta)) - 3)


def sample_source(kind, n, rng):
    """``n`` i.i.d. draws from ``kind`` rescaled to unit variance.

    Generalized-normal draws use ``sign * Gamma(1/beta, 1) ** (1/beta)``.
    """
    kind = parse_source_kind(kind)
    rng = _rng(rng)
    if kind == "gaussian":
        return rng.standard_normal(n)
    if kind == "laplace":
        return rng.laplace(0.0, 0.5, n) / np.sqrt(0.5)
    beta = source_beta(kind)
    g = rng.gamma(1.0 / beta, 1.0, n) ** (1.0 / beta)
    sign = np.where(rng.random(n) < 0.5, -1.0, 1.0)
    var = np.exp(gammaln(3 / beta) - gammaln(1 / beta))
    return sign * g / np.sqrt(var)


# -- graphs ----------------------------------------------------------------

def generate_dag(p, density=1.0, shared=True, m=1, rng=None, sparsify=0):
    """Random orderings and per-view adjacency matrices ``B^i = P^T T^i P``.

    Strictly-lower entries of each ``T^i`` are standard normal, each kept
    with probability ``density``.  ``sparsify`` additionally zeroes that
    many positions per view, drawn among the ``p (p - 1)`` off-diagonal
    positions of ``T^i`` (positions above the diagonal are already zero).

    Returns
    -------
    ordering : ndarray (p,) if ``shared`` else (m, p)
    adjacency : AdjacencySet
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    if not 0.0 <= density <= 1.0:
        raise ValueError("density must lie in [0, 1]")
    if not 0 <= sparsify <= p * (p - 1):
        raise ValueError(f"sparsify must lie in [0, {p * (p - 1)}]")
    rng = _rng(rng, DAG)
    if shared:
        perms = np.tile(rng.permutation(p), (m, 1))
    else:
        perms = np.stack([rng.permutation(p) for _ in range(m)])
    lower = np.tril(np.ones((p, p), dtype=bool), k=-1)
    offdiag = np.flatnonzero(~np.eye(p, dtype=bool))
    mats = np.zeros((m, p, p))
    for i in range(m):
        T = np.where(lower, rng.standard_normal((p, p)), 0.0)
        if density < 1.0:
            T *= rng.random((p, p)) < density
        if sparsify:
            T.flat[rng.choice(offdiag, size=sparsify, replace=False)] = 0.0
        mats[i] = from_causal_frame(T, perms[i])
    ordering = perms[0] if shared else perms
    return ordering, AdjacencySet(mats, "shared" if shared else "per_view")


# -- ground truth ----------------------------------------------------------

@dataclass(frozen=True)
class SharedDisturbanceParams:
    """Shared-disturbance parameters: ``e^i = D^i s + n^i``.

    ``scales`` are the ``D^i`` diagonals and ``noise_stds`` the standard
    deviations of ``n^i``, both ``(m, p)``.
    """

    scales: np.ndarray
    noise_stds: np.ndarray
    source_kinds: tuple
    seed: int = 0

    def __post_init__(self):
        scales = np.asarray(self.scales, dtype=float)
        stds = np.asarray(self.noise_stds, dtype=float)
        if scales.shape != stds.shape or scales.ndim != 2:
            raise ValueError("scales and noise_stds must both be (m, p)")
        if np.any(scales <= 0):
            raise ValueError("scales must be positive")
        if np.any(stds < 0):
            raise ValueError("noise_stds must be nonnegative")
        kinds = tuple(parse_source_kind(k) for k in self.source_kinds)
        if len(kinds) != scales.shape[1]:
            raise ValueError("need one source kind per variable")
        object.__setattr__(self, "scales", scales)
        object.__setattr__(self, "noise_stds", stds)
        object.__setattr__(self, "source_kinds", kinds)

    @property
    def noise_vars(self):
        return self.noise_stds ** 2

    def disturbance_cov(self):
        """``(p, m, m)``: cross-view covariance of each variable's disturbance."""
        D = self.scales.T  # (p, m)
        cov = D[:, :, None] * D[:, None, :]
        idx = np.arange(D.shape[1])
        cov[:, idx, idx] += self.noise_vars.T
        return cov


@dataclass(frozen=True)
class GroundTruth:
    """Generating structure: ordering(s), adjacency and disturbance moments.

    ``disturbance_cov[j]`` is the ``m x m`` cross-view covariance of
    ``e_j`` (disturbances of different variables are uncorrelated).
    """

    ordering: np.ndarray
    adjacency: AdjacencySet
    disturbance_cov: np.ndarray
    params: Optional[SharedDisturbanceParams] = None
    source_kinds: tuple = ()

    @property
    def mixing(self):
        p = self.adjacency.p
        return np.linalg.inv(np.eye(p)[None] - self.adjacency.matrices)

    def population_covariance(self):
        """``(m, m, p, p)`` array of ``E[x^i x^{i'T}]``."""
        A = self.mixing
        p = A.shape[-1]
        m = A.shape[0]
        E = np.zeros((m, m, p, p))
        idx = np.arange(p)
        E[:, :, idx, idx] = np.moveaxis(self.disturbance_cov, 0, -1)
        return np.einsum("iab,ijbc,jdc->ijad", A, E, A)


def _mix(adjacency, E):
    p = adjacency.p
    return np.stack([np.linalg.solve(np.eye(p) - B, e) for B, e in zip(adjacency.matrices, E)])


def generate_shared(params, adjacency, n, ordering=None):
    """Sample ``x^i = (I - B^i)^{-1} (D^i s + n^i)`` with a fresh ``s`` per sample.

    All randomness is drawn from ``params.seed``.

    Returns
    -------
    X : ndarray (m, p, n)
    truth : GroundTruth
    """
    m, p = params.scales.shape
    if adjacency.matrices.shape != (m, p, p):
        raise ValueError("adjacency shape does not match params")
    s = np.stack([sample_source(k, n, make_rng(params.seed, SOURCE, j))
                  for j, k in enumerate(params.source_kinds)])
    noise = np.stack([[make_rng(params.seed, NOISE, i, j).standard_normal(n)
                       for j in range(p)] for i in range(m)])
    E = params.scales[:, :, None] * s[None] + params.noise_stds[:, :, None] * noise
    X = _mix(adjacency, E)
    ordering = _checked_ordering(adjacency, ordering)
    truth = GroundTruth(ordering, adjacency, params.disturbance_cov(),
                        params, params.source_kinds)
    return X, truth


def _checked_ordering(adjacency, ordering):
    if ordering is None:
        return _infer_ordering(adjacency)
    ordering = np.asarray(ordering, dtype=int)
    mats = adjacency.matrices
    ok = (is_compatible(mats, ordering) if ordering.ndim == 1 else
          all(is_compatible(B, o) for B, o in zip(mats, ordering)))
    if not ok:
        raise ValueError("ordering is not compatible with the adjacency matrices")
    return ordering


def _infer_ordering(adjacency):
    from .core import validate_dag
    if adjacency.ordering_mode == "per_view":
        return np.stack([validate_dag(B) for B in adjacency.matrices])
    return validate_dag(np.abs(adjacency.matrices).sum(axis=0))


def random_correlation(m, rng, factors=2, jitter=(0.1, 0.5)):
    """Random ``m x m`` correlation matrix from a low-rank factor plus diagonal."""
    L = rng.standard_normal((m, factors))
    S = L @ L.T + np.diag(rng.uniform(*jitter, size=m))
    d = np.sqrt(np.diag(S))
    return S / np.outer(d, d)


def generate_independent(adjacency, disturbance_std, n, seed=0, cross_view_corr=None,
                         source_kinds=None, ordering=None):
    """Sample the general model with cross-view correlated disturbances.

    For each variable ``j`` the disturbance vector across views is
    ``disturbance_std * chol(R_j) z_j`` with ``z_j`` i.i.d. unit-variance
    draws of ``source_kinds[j]`` (Gaussian by default), so every view has
    the same marginal variance and ``R_j`` is the cross-view correlation.

    ``cross_view_corr`` selects ``R_j``: ``None`` draws a random matrix per
    variable, a float gives equicorrelation, ``"identity"`` independence,
    and an ``(m, m)`` or ``(p, m, m)`` array is used as given.
    """
    m, p = adjacency.m, adjacency.p
    kinds = tuple(parse_source_kind(k) for k in (source_kinds or ["gaussian"] * p))
    if len(kinds) != p:
        raise ValueError("need one source kind per variable")
    R = np.empty((p, m, m))
    for j in range(p):
        if cross_view_corr is None:
            R[j] = random_correlation(m, make_rng(seed, CORRELATION, j))
        elif isinstance(cross_view_corr, str):
            if cross_view_corr != "identity":
                raise ValueError(f"unknown correlation spec {cross_view_corr!r}")
            R[j] = np.eye(m)
        elif np.ndim(cross_view_corr) == 0:
            rho = float(cross_view_corr)
            R[j] = np.full((m, m), rho) + (1 - rho) * np.eye(m)
        else:
            arr = np.asarray(cross_view_corr, dtype=float)
            R[j] = arr[j] if arr.ndim == 3 else arr
    E = np.empty((m, p, n))
    for j in range(p):
        z = np.stack([sample_source(kinds[j], n, make_rng(seed, DISTURBANCE, j, i))
                      for i in range(m)])
        w, U = np.linalg.eigh(R[j])
        root = U * np.sqrt(np.clip(w, 0, None))
        E[:, j, :] = disturbance_std * (root @ z)
    X = _mix(adjacency, E)
    ordering = _checked_ordering(adjacency, ordering)
    truth = GroundTruth(ordering, adjacency, disturbance_std ** 2 * R, None, kinds)
    return X, truth


# -- assumption diagnostics ------------------------------------------------

@dataclass
class AssumptionReport:
    """Per-assumption verdicts and the index tuples that witness failures.

    ``correlation_diversity`` is the simple pairwise condition (views must
    be correlated and ``|corr(x_j^i, x_j^i')| != |corr(e_j'^i, e_j'^i')|``
    for some view pair, for every edge ``j -> j'``); ``multivariate_diversity``
    its weaker multi-condition generalization.  ``noise_diversity`` is
    ``None`` when no shared-disturbance parameters are known.
    """

    correlation_diversity: bool
    correlation_diversity_violations: list
    multivariate_diversity: bool
    multivariate_diversity_violations: list
    noise_diversity: Optional[bool]
    noise_diversity_violations: list
    union_dense: bool
    union_missing: list
    per_view_dense: bool

    def as_dict(self):
        return dict(self.__dict__)


def _corr(cov, a, b):
    den = np.sqrt(cov[a, a] * cov[b, b])
    return cov[a, b] / den if den > 0 else 0.0


def _moments(truth, data):
    """Observation and disturbance second moments across views.

    Returns ``x_cov[(i, a), (i', b)]`` and ``e_cov[j][i, i']``.
    """
    m, p = truth.adjacency.m, truth.adjacency.p
    if data is None:
        x_full = truth.population_covariance()
        e_cov = truth.disturbance_cov
    else:
        X = np.asarray(data, dtype=float)
        X = X - X.mean(axis=-1, keepdims=True)
        n = X.shape[-1]
        x_full = np.einsum("ian,jbn->ijab", X, X) / n
        E = X - np.einsum("iab,ibn->ian", truth.adjacency.matrices, X)
        e_cov = np.einsum("ijn,kjn->jik", E, E) / n
    flat = np.transpose(x_full, (0, 2, 1, 3)).reshape(m * p, m * p)
    return flat, e_cov


def check_assumptions(truth, data=None, margin=1e-6):
    """Evaluate the identifiability conditions of a generating model.

    Population moments from ``truth`` are used unless ``data`` is given, in
    which case sample moments (and disturbances ``(I - B^i) x^i``) are used.
    Strict inequalities must hold by more than ``margin``.
    """
    B = truth.adjacency.matrices
    m, p, _ = B.shape
    xc, ec = _moments(truth, data)
    ix = lambda i, j: i * p + j  # noqa: E731

    def cx(i, a, k, b):
        return _corr(xc, ix(i, a), ix(k, b)) if (i, a) != (k, b) else 1.0

    def ce(j, i, k):
        return _corr(ec[j], i, k)

    union = np.abs(B).sum(axis=0)
    edges = [(j, jp) for jp in range(p) for j in range(p) if union[jp, j] > 0]
    nz = lambda v: abs(v) > margin  # noqa: E731
    differ = lambda u, v: abs(u - v) > margin  # noqa: E731

    simple_bad, multi_bad = [], []
    for j, jp in edges:
        simple_ok = multi_ok = False
        for i in range(m):
            for k in range(m):
                if i == k:
                    continue
                c_pair_i, c_pair_k = cx(i, j, i, jp), cx(k, j, k, jp)
                cxx, cee = cx(i, j, k, j), ce(jp, i, k)
                cond_a = nz(c_pair_i) or nz(c_pair_k)
                if cond_a and differ(abs(cxx), abs(cee)):
                    simple_ok = True
                cond_b = nz(cxx) or nz(cee)
                ve_i, ve_k = ec[jp][i, i], ec[jp][k, k]
                cond_c = (differ(abs(cxx), abs(cee))
                          or differ(abs(c_pair_i), abs(c_pair_k))
                          or differ(ve_i, ve_k)
                          or np.sign(c_pair_i) * np.sign(c_pair_k) != np.sign(cxx) * np.sign(cee))
                if cond_a and cond_b and cond_c:
                    multi_ok = True
        if not simple_ok:
            simple_bad.append((j, jp))
        if not multi_ok:
            multi_bad.append((j, jp))

    noise_ok, noise_bad = None, []
    if truth.params is not None:
        prm = truth.params
        ratio = prm.noise_vars / prm.scales ** 2
        gauss = [j for j, k in enumerate(prm.source_kinds) if is_gaussian(k)]
        noise_ok = True
        for x, j in enumerate(gauss):
            for jp in gauss[x + 1:]:
                rel = np.abs(ratio[:, j] - ratio[:, jp]) / np.maximum(
                    np.maximum(ratio[:, j], ratio[:, jp]), 1e-300)
                if m < 3 or not np.any(rel > margin):
                    noise_ok = False
                    noise_bad.append((j, jp))

    orderings = np.asarray(truth.ordering)
    if orderings.ndim == 1:
        T = to_causal_frame(np.abs(B), orderings).sum(axis=0)
        lower = np.tril_indices(p, k=-1)
        missing = [(int(orderings[c]), int(orderings[r]))
                   for r, c in zip(*lower) if T[r, c] == 0]
    else:
        missing = []
    per_view = bool(np.all(np.count_nonzero(B, axis=(1, 2)) == p * (p - 1) // 2))
    return AssumptionReport(
        correlation_diversity=not simple_bad,
        correlation_diversity_violations=simple_bad,
        multivariate_diversity=not multi_bad,
        multivariate_diversity_violations=multi_bad,
        noise_diversity=noise_ok,
        noise_diversity_violations=noise_bad,
        union_dense=not missing,
        union_missing=missing,
        per_view_dense=per_view,
    )


# -- presets ---------------------------------------------------------------

PRESETS = ("figure1-gaussian", "figure1-laplace", "figure2", "noise-diversity",
           "sparsity", "high-dim")

HIGH_DIM_VIEWS = (3, 5, 8, 12, 16, 20)
HIGH_DIM_COMPONENTS = (3, 6, 9, 12)


def shared_params(m, p, seed, source_kinds, scale_range=(0.1, 3.0), noise_std=None,
                  noise_var_range=None, noise_diversity_violations=0):
    """Draw ``D^i`` uniformly in ``scale_range`` and the view noise.

    Exactly one of ``noise_std`` (callable ``(rng, kind) -> std`` or a
    constant) and ``noise_var_range`` (uniform variances) is used per
    component.  ``noise_diversity_violations = k`` equalizes the scaled
    noise ratio ``Sigma_jj / D_jj^2`` of the first two Gaussian components
    in the first ``k`` views.
    """
    rng = make_rng(seed, PARAMS)
    kinds = tuple(parse_source_kind(k) for k in source_kinds)
    scales = rng.uniform(*scale_range, size=(m, p))
    stds = np.empty((m, p))
    for j, kind in enumerate(kinds):
        if callable(noise_std):
            stds[:, j] = [noise_std(rng, kind) for _ in range(m)]
        elif noise_std is not None:
            stds[:, j] = noise_std
        else:
            stds[:, j] = np.sqrt(rng.uniform(*noise_var_range, size=m))
    if noise_diversity_violations:
        gauss = [j for j, k in enumerate(kinds) if is_gaussian(k)]
        if len(gauss) < 2:
            raise ValueError("noise-diversity violations need two Gaussian components")
        if not 0 <= noise_diversity_violations <= m:
            raise ValueError(f"violations must lie in [0, {m}]")
        j, jp = gauss[:2]
        v = slice(0, noise_diversity_violations)
        var_j = stds[v, j] ** 2
        stds[v, jp] = np.sqrt(var_j * scales[v, jp] ** 2 / scales[v, j] ** 2)
    return SharedDisturbanceParams(scales, stds, kinds, seed)


def _figure1_noise(rng, kind):
    return rng.uniform(0.0, 1.0) if kind == "gaussian" else 0.5


def _kinds(sources, p):
    if isinstance(sources, str):
        return [sources] * p
    sources = list(sources)
    return [sources[j % len(sources)] for j in range(p)]


def simulate(preset, n, seed, m=None, p=None, density=1.0, sources=None,
             noise_diversity_violations=0, sparsify=0):
    """Generate a dataset from a named preset.

    Presets: ``figure1-gaussian`` / ``figure1-laplace`` (m=5, p=4, shared
    disturbances, ``D ~ U(0.1, 3)``), ``figure2`` (m=6, p=5, equal-variance
    Gaussian disturbances with random cross-view correlation),
    ``noise-diversity`` (m=5, p=4, two Gaussian and two Laplace sources),
    ``sparsity`` (m=8, p=6, generalized-normal sources) and ``high-dim``
    (general model with generalized-normal disturbances).

    Returns ``(X, truth)``.
    """
    if preset not in PRESETS:
        raise KeyError(f"unknown preset {preset!r}; choose from {', '.join(PRESETS)}")
    if preset.startswith("figure1"):
        m, p = m or 5, p or 4
        src = sources or ("gaussian" if preset.endswith("gaussian") else "laplace")
        order, adj = generate_dag(p, density, True, m, make_rng(seed, DAG), sparsify)
        params = shared_params(m, p, seed, _kinds(src, p), (0.1, 3.0), noise_std=_figure1_noise,
                               noise_diversity_violations=noise_diversity_violations)
        return generate_shared(params, adj, n, order)
    if preset == "noise-diversity":
        m, p = m or 5, p or 4
        kinds = _kinds(sources or ["gaussian", "gaussian", "laplace", "laplace"], p)
        order, adj = generate_dag(p, density, True, m, make_rng(seed, DAG), sparsify)

        def noise(rng, kind):
            return np.sqrt(rng.uniform(0.0, 1.0)) if kind == "gaussian" else np.sqrt(0.5)

        params = shared_params(m, p, seed, kinds, (0.5, 2.0), noise_std=noise,
                               noise_diversity_violations=noise_diversity_violations)
        return generate_shared(params, adj, n, order)
    if preset == "sparsity":
        m, p = m or 8, p or 6
        kinds = _kinds(sources or ["gennorm(2.5)", "gennorm(2.5)", "gennorm(1.5)",
                                   "gennorm(1.5)", "gaussian", "gaussian"], p)
        order, adj = generate_dag(p, density, True, m, make_rng(seed, DAG), sparsify)
        params = shared_params(m, p, seed, kinds, (0.5, 2.0), noise_var_range=(0.0, 1.0),
                               noise_diversity_violations=noise_diversity_violations)
        return generate_shared(params, adj, n, order)
    if preset == "figure2":
        m, p = m or 6, p or 5
        order, adj = generate_dag(p, density, True, m, make_rng(seed, DAG), sparsify)
        return generate_independent(adj, 1.0, n, seed, None, _kinds(sources or "gaussian", p),
                                    ordering=order)
    # high-dim
    m, p = m or 5, p or 6
    kinds = _kinds(sources or ["gennorm(2.5)", "gaussian", "gennorm(1.5)"], p)
    order, adj = generate_dag(p, density, True, m, make_rng(seed, DAG), sparsify)
    return generate_independent(adj, 1.0, n, seed, None, kinds, ordering=order)
