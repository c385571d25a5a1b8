"""Dataset and result serialization.

Datasets are a JSON manifest plus one numeric CSV per view.  Floats are
written with ``repr`` (the shortest string that round-trips exactly), JSON
with sorted keys, and every file ends lines with ``\\n`` so identical inputs
give byte-identical outputs.

Manifest schema (version ``"1"``)::

    {
      "version": "1",
      "m": 2, "p": 3, "n": 500,
      "view_files": ["view0.csv", "view1.csv"],   # relative to the manifest
      "variable_names": ["a", "b", "c"],          # optional
      "samples_as_rows": true,                    # n x p files (default)
      "provenance": {...}                         # free-form, optional
    }
"""

import csv
import json
import os
from pathlib import Path

import numpy as np

from .core import AdjacencySet, MultiViewData, as_array
from .exceptions import DimensionMismatchError, ParseError

FORMAT_VERSION = "1"


def format_float(x):
    """Shortest round-trip decimal; integers keep a trailing ``.0``."""
    x = float(x)
    if not np.isfinite(x):
        raise ValueError(f"cannot serialize non-finite value {x}")
    return repr(x)


def write_matrix(path, matrix, header=None):
    """Write a 2-D array as CSV with shortest round-trip floats."""
    A = np.asarray(matrix, dtype=float)
    if A.ndim != 2:
        raise ValueError(f"expected a 2-d array, got shape {A.shape}")
    with open(path, "w", newline="") as fh:
        if header is not None:
            fh.write(",".join(header) + "\n")
        for row in A:
            fh.write(",".join(format_float(v) for v in row) + "\n")
    return Path(path)


def read_matrix(path, header=False):
    """Read a numeric CSV into a 2-D array.

    Raises
    ------
    ParseError
        On a non-numeric cell or ragged row, with 1-based line and column.
    """
    rows = []
    names = None
    width = None
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if header and names is None:
                names = [c.strip() for c in row]
                width = len(names)
                continue
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise ParseError(f"expected {width} columns, found {len(row)}",
                                 str(path), lineno, min(len(row), width) + 1)
            vals = []
            for col, cell in enumerate(row, start=1):
                try:
                    v = float(cell)
                except ValueError:
                    raise ParseError(f"non-numeric value {cell!r}", str(path), lineno, col) from None
                if not np.isfinite(v):
                    raise ParseError(f"non-finite value {cell!r}", str(path), lineno, col)
                vals.append(v)
            rows.append(vals)
    arr = np.array(rows, dtype=float).reshape(len(rows), width or 0)
    return (arr, names) if header else arr


def write_json(path, obj):
    with open(path, "w", newline="") as fh:
        fh.write(json.dumps(to_jsonable(obj), sort_keys=True, indent=2) + "\n")
    return Path(path)


def to_jsonable(obj):
    """Convert numpy containers and scalars to plain JSON types."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


# -- datasets --------------------------------------------------------------

def save_dataset(data, directory, variable_names=None, provenance=None, samples_as_rows=True):
    """Write one CSV per view plus ``manifest.json``; returns the manifest path."""
    X = as_array(data)
    m, p, n = X.shape
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    files = []
    for i in range(m):
        name = f"view{i}.csv"
        write_matrix(directory / name, X[i].T if samples_as_rows else X[i])
        files.append(name)
    manifest = {"version": FORMAT_VERSION, "m": m, "p": p, "n": n, "view_files": files,
                "samples_as_rows": bool(samples_as_rows)}
    if variable_names is not None:
        if len(variable_names) != p:
            raise DimensionMismatchError("variable_names length", p, len(variable_names))
        manifest["variable_names"] = list(variable_names)
    if provenance is not None:
        manifest["provenance"] = provenance
    return write_json(directory / "manifest.json", manifest)


def read_manifest(path):
    path = Path(path)
    try:
        with open(path) as fh:
            manifest = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, str(path), exc.lineno, exc.colno) from None
    if not isinstance(manifest, dict):
        raise ParseError("manifest must be a JSON object", str(path), 1, 1)
    for key in ("m", "p", "n", "view_files"):
        if key not in manifest:
            raise ParseError(f"manifest lacks required key {key!r}", str(path), 1, 1)
    return manifest


def load_dataset(manifest_path):
    """Assemble the ``(m, p, n)`` tensor described by a manifest.

    Raises
    ------
    ParseError
        Malformed JSON or CSV, with file, line and column.
    DimensionMismatchError
        When file count or matrix shapes disagree with the manifest.
    """
    manifest_path = Path(manifest_path)
    man = read_manifest(manifest_path)
    m, p, n = int(man["m"]), int(man["p"]), int(man["n"])
    files = man["view_files"]
    if len(files) != m:
        raise DimensionMismatchError("number of view files", m, len(files))
    rows_are_samples = bool(man.get("samples_as_rows", True))
    expected = (n, p) if rows_are_samples else (p, n)
    views = []
    for name in files:
        arr = read_matrix(manifest_path.parent / name)
        if arr.shape != expected:
            raise DimensionMismatchError(f"shape of {name}", expected, arr.shape)
        views.append(arr.T if rows_are_samples else arr)
    names = man.get("variable_names")
    if names is not None and len(names) != p:
        raise DimensionMismatchError("variable_names length", p, len(names))
    return MultiViewData(np.stack(views) if views else np.zeros((0, p, n)))


# -- adjacency and results ---------------------------------------------------

def save_adjacency(adjacency, directory, prefix="B"):
    mats = adjacency.matrices if isinstance(adjacency, AdjacencySet) else np.asarray(adjacency)
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    return [write_matrix(directory / f"{prefix}_view{i}.csv", B) for i, B in enumerate(mats)]


def load_adjacency(directory, m=None, prefix="B", ordering_mode="shared"):
    directory = Path(directory)
    if m is None:
        m = len(list(directory.glob(f"{prefix}_view*.csv")))
    mats = [read_matrix(directory / f"{prefix}_view{i}.csv") for i in range(m)]
    return AdjacencySet(np.stack(mats), ordering_mode)


METRIC_COLUMNS = ("seed", "estimator", "n", "m", "p", "metric", "value")


def metric_rows(truth, result, seed, estimator):
    """Long-format metric rows for one fit against its ground truth."""
    from .metrics import b_error, mean_spearman, ordering_error

    adj = result.adjacency
    m, p = adj.m, adj.p
    n = result.diagnostics.get("n", "")
    total, views = b_error(truth.adjacency, adj, per_view=True)
    rows = [(seed, estimator, n, m, p, "b_error", total)]
    rows += [(seed, estimator, n, m, p, f"b_error_view{i}", v) for i, v in enumerate(views)]
    rows.append((seed, estimator, n, m, p, "ordering_error",
                 ordering_error(truth.adjacency, result.ordering)))
    if p >= 2:
        rows.append((seed, estimator, n, m, p, "spearman",
                     mean_spearman(truth.ordering, result.ordering)))
    return rows


def write_metric_rows(path, rows):
    """Write metric rows sorted stably by ``(estimator, seed)``."""
    rows = sorted(rows, key=lambda r: (str(r[1]), int(r[0])))
    with open(path, "w", newline="") as fh:
        fh.write(",".join(METRIC_COLUMNS) + "\n")
        for r in rows:
            cells = [str(c) if not isinstance(c, (float, np.floating)) else format_float(c)
                     for c in r]
            fh.write(",".join(cells) + "\n")
    return Path(path)


def save_result(result, directory, truth=None, seed=0, estimator=None):
    """Write a fit result: ``B_view{i}.csv``, ``ordering.json``, ``diagnostics.json``.

    With ``truth`` also writes ``metrics.csv``.  Returns the written paths.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = save_adjacency(result.adjacency, directory)
    ordering = np.asarray(result.ordering)
    paths.append(write_json(directory / "ordering.json", {
        "ordering_mode": result.adjacency.ordering_mode,
        "ordering": ordering,
    }))
    paths.append(write_json(directory / "diagnostics.json", result.diagnostics or {}))
    extra = {}
    if hasattr(result, "scales"):
        extra["scales"] = write_matrix(directory / "scales.csv", result.scales)
        if result.noise_vars is not None:
            extra["noise"] = write_matrix(directory / "noise_vars.csv", result.noise_vars)
    paths.extend(extra.values())
    if truth is not None:
        name = estimator or result.diagnostics.get("criterion", "estimate")
        paths.append(write_metric_rows(directory / "metrics.csv",
                                       metric_rows(truth, result, seed, name)))
    return paths


def load_ordering(directory):
    with open(Path(directory) / "ordering.json") as fh:
        obj = json.load(fh)
    return np.asarray(obj["ordering"], dtype=int), obj["ordering_mode"]


def save_ground_truth(truth, directory):
    """Write the true adjacency (``truth_B_view{i}.csv``) and ``truth.json``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = save_adjacency(truth.adjacency, directory, prefix="truth_B")
    info = {
        "ordering": np.asarray(truth.ordering),
        "ordering_mode": truth.adjacency.ordering_mode,
        "source_kinds": list(truth.source_kinds),
        "disturbance_cov": truth.disturbance_cov,
    }
    if truth.params is not None:
        info["scales"] = truth.params.scales
        info["noise_stds"] = truth.params.noise_stds
        info["seed"] = truth.params.seed
    paths.append(write_json(directory / "truth.json", info))
    return paths


def load_ground_truth(directory):
    from .synth import GroundTruth, SharedDisturbanceParams

    directory = Path(directory)
    with open(directory / "truth.json") as fh:
        info = json.load(fh)
    ordering = np.asarray(info["ordering"], dtype=int)
    m = np.asarray(info["disturbance_cov"]).shape[1]
    adj = load_adjacency(directory, m, prefix="truth_B", ordering_mode=info["ordering_mode"])
    params = None
    if "scales" in info:
        params = SharedDisturbanceParams(np.asarray(info["scales"]), np.asarray(info["noise_stds"]),
                                         tuple(info["source_kinds"]), int(info["seed"]))
    return GroundTruth(ordering, adj, np.asarray(info["disturbance_cov"]), params,
                       tuple(info["source_kinds"]))


def ensure_dir(path):
    os.makedirs(path, exist_ok=True)
    return Path(path)
