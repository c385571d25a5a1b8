"""Benchmark suites: grids of generator configs x methods x seeds.

Each ``(config, seed)`` cell generates one dataset and fits every method of
the suite on it, yielding one row per method.  Cells run in a process pool
and rows are appended to the output CSV as cells finish; when the run
completes the file is rewritten sorted so that row order does not depend on
scheduling.

Output columns are listed in :data:`COLUMNS`.  ``b_error_views`` joins the
per-view errors with ``;``; ``error`` is empty unless the fit raised, in
which case the metric cells are empty too.
"""

import csv
import io as _io
import json
import os
import time
import warnings
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .core import validate_adjacency
from .estimators import fit_pairwise
from .exceptions import LimvamError
from .ica_limvam import fit_ica
from .shared_ica import fit_shica
from .io import format_float
from .metrics import b_error, mean_spearman, ordering_error
from .synth import HIGH_DIM_COMPONENTS, HIGH_DIM_VIEWS, simulate

COLUMNS = ("suite", "config", "preset", "n", "m", "p", "sources", "violations", "sparsify",
           "seed", "estimator", "b_error", "b_error_views", "ordering_error", "spearman",
           "wall_time", "invariant_violations", "warnings", "error")
TIMING_COLUMNS = ("wall_time",)
SUITES = ("figure1", "figure2", "noise-diversity", "sparsity", "high-dim")
METHODS = ("pairwise-lr", "pairwise-fc", "ica-j", "ica-j-per-view")


@dataclass(frozen=True)
class CellConfig:
    """Generator settings for one grid point (all seeds share it)."""

    preset: str
    n: int
    m: int = None
    p: int = None
    sources: str = None
    violations: int = 0
    sparsify: int = 0
    methods: tuple = ("pairwise-lr", "pairwise-fc", "ica-j")

    @property
    def key(self):
        parts = [self.preset, f"n={self.n}"]
        for name in ("m", "p", "sources"):
            if getattr(self, name) is not None:
                parts.append(f"{name}={getattr(self, name)}")
        if self.violations:
            parts.append(f"violations={self.violations}")
        if self.sparsify:
            parts.append(f"sparsify={self.sparsify}")
        return "|".join(parts)


def suite_configs(suite):
    """The grid of :class:`CellConfig` making up a named suite."""
    if suite == "figure1":
        return [CellConfig(f"figure1-{src}", n) for src in ("gaussian", "laplace")
                for n in (100, 1000, 10000)]
    if suite == "figure2":
        return [CellConfig("figure2", 1000)]
    if suite == "noise-diversity":
        return [CellConfig("noise-diversity", 1000, violations=k) for k in range(6)]
    if suite == "sparsity":
        methods = ("pairwise-lr", "pairwise-fc", "ica-j", "ica-j-per-view")
        return [CellConfig("sparsity", 1000, sparsify=k, methods=methods)
                for k in (0, 5, 11, 15, 20, 25)]
    if suite == "high-dim":
        return [CellConfig("high-dim", 1000, m=m, p=p) for m in HIGH_DIM_VIEWS
                for p in HIGH_DIM_COMPONENTS]
    raise KeyError(f"unknown suite {suite!r}; choose from {', '.join(SUITES)}")


def fit_method(method, X, backend=None):
    if method == "pairwise-lr":
        return fit_pairwise(X, "lr")
    if method == "pairwise-fc":
        return fit_pairwise(X, "fc")
    if method == "ica-j":
        return fit_ica(X, "shared", backend)
    if method == "ica-j-per-view":
        return fit_ica(X, "per_view", backend)
    raise KeyError(f"unknown method {method!r}")


class _SharedBackend:
    """Fit the shared ICA once per dataset; later calls reuse it.

    ``elapsed`` is the time of the one real fit, charged to every ICA row
    so wall times stay comparable with a standalone fit.  Warnings of that
    fit are re-issued on each reuse.
    """

    __name__ = "shica-j"

    def __init__(self):
        self.result = None
        self.elapsed = 0.0
        self.caught = []

    def __call__(self, X):
        if self.result is None:
            t0 = time.perf_counter()
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always")
                self.result = fit_shica(X)
            self.elapsed = time.perf_counter() - t0
            self.caught = list(caught)
        for w in self.caught:
            warnings.warn(w.message, w.category)
        return self.result


def invariant_violations(result):
    """Structural problems of a fit (DAG, unit determinant, permutations, skew scores)."""
    problems = validate_adjacency(result.adjacency, result.ordering)
    for k, M in enumerate(result.diagnostics.get("score_matrices", [])):
        if not np.array_equal(M, -M.T):
            problems.append(f"score matrix {k} is not skew-symmetric")
    return problems


def run_cell(config, seed, suite=""):
    """Generate one dataset and fit every method; returns a list of row dicts."""
    X, truth = simulate(config.preset, config.n, seed, m=config.m, p=config.p,
                        sources=config.sources, noise_diversity_violations=config.violations,
                        sparsify=config.sparsify)
    m, p, n = X.shape
    base = {"suite": suite, "config": config.key, "preset": config.preset, "n": n, "m": m,
            "p": p, "sources": config.sources or "", "violations": config.violations,
            "sparsify": config.sparsify, "seed": seed}
    rows = []
    backend = _SharedBackend()
    for method in config.methods:
        row = dict(base, estimator=method, b_error="", b_error_views="", ordering_error="",
                   spearman="", wall_time="", invariant_violations="", warnings="", error="")
        t0 = time.perf_counter()
        try:
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always")
                fresh = backend.result is None
                result = fit_method(method, X, backend)
            row["wall_time"] = time.perf_counter() - t0
            if method.startswith("ica") and not fresh:
                row["wall_time"] += backend.elapsed
            total, views = b_error(truth.adjacency, result.adjacency, per_view=True)
            row["b_error"] = total
            row["b_error_views"] = ";".join(format_float(v) for v in views)
            row["ordering_error"] = ordering_error(truth.adjacency, result.ordering)
            row["spearman"] = mean_spearman(truth.ordering, result.ordering) if p > 1 else ""
            row["invariant_violations"] = len(invariant_violations(result))
            row["warnings"] = ";".join(sorted({w.category.__name__ for w in caught}))
        except (LimvamError, np.linalg.LinAlgError, ValueError) as exc:
            row["wall_time"] = time.perf_counter() - t0
            row["error"] = f"{type(exc).__name__}: {exc}".replace("\n", " ")
        rows.append(row)
    return rows


def _cell(cfg, seed, suite):
    return run_cell(cfg, seed, suite)


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return format_float(v)
    return str(v)


def _write_rows(fh, rows):
    w = csv.writer(fh, lineterminator="\n")
    for r in rows:
        w.writerow([_fmt(r[c]) for c in COLUMNS])


def sort_key(row):
    return (row["config"], int(row["seed"]), row["estimator"])


def resolve_jobs(jobs):
    env = os.environ.get("LIMVAM_THREADS")
    if env:
        jobs = int(env)
    return max(1, int(jobs or 1))


def header_lines(suite, seeds, configs):
    from . import __version__

    conf = {"suite": suite, "seeds": list(seeds), "version": __version__,
            "configs": [asdict(c) for c in configs], "columns": list(COLUMNS)}
    return [f"# limvam {__version__} bench", "# config: " + json.dumps(conf, sort_keys=True)]


def run_suite(suite, seeds, jobs=1, out=None, configs=None):
    """Run a suite over ``seeds`` (an int count or an iterable of seeds).

    Rows are flushed to ``out`` as cells complete and the file is rewritten
    in sorted order at the end.  Returns the sorted row dicts.
    """
    seeds = list(range(seeds)) if isinstance(seeds, int) else [int(s) for s in seeds]
    configs = configs if configs is not None else suite_configs(suite)
    jobs = resolve_jobs(jobs)
    cells = [(c, s) for c in configs for s in seeds]
    header = header_lines(suite, seeds, configs)
    rows = []
    fh = None
    if out is not None:
        out = Path(out)
        out.parent.mkdir(parents=True, exist_ok=True)
        fh = open(out, "w", newline="")
        fh.write("\n".join(header) + "\n" + ",".join(COLUMNS) + "\n")
        fh.flush()
    try:
        if jobs == 1:
            for c, s in cells:
                new = run_cell(c, s, suite)
                rows.extend(new)
                if fh:
                    _write_rows(fh, new)
                    fh.flush()
        else:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                futures = [pool.submit(_cell, c, s, suite) for c, s in cells]
                for fut in as_completed(futures):
                    new = fut.result()
                    rows.extend(new)
                    if fh:
                        _write_rows(fh, new)
                        fh.flush()
    finally:
        if fh:
            fh.close()
    rows.sort(key=sort_key)
    if out is not None:
        buf = _io.StringIO()
        buf.write("\n".join(header) + "\n" + ",".join(COLUMNS) + "\n")
        _write_rows(buf, rows)
        out.write_text(buf.getvalue())
    return rows


def read_rows(path):
    """Parse a benchmark CSV (header comments skipped) into row dicts."""
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    return list(csv.DictReader(lines))


def summarize(rows, metric="b_error", by=("config", "estimator")):
    """Median of ``metric`` per group, ignoring failed cells."""
    groups = {}
    for r in rows:
        v = r[metric]
        if v in ("", None):
            continue
        groups.setdefault(tuple(r[k] for k in by), []).append(float(v))
    return {k: float(np.median(v)) for k, v in sorted(groups.items())}
