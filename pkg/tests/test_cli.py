import json
import subprocess
import sys

import numpy as np
import pytest

from limvam.benchmark import read_rows
from limvam.cli import main


@pytest.fixture
def dataset(tmp_path):
    out = tmp_path / "d"
    assert main(["simulate", "--preset", "figure1-laplace", "--n", "400", "--seed", "3",
                 "--out", str(out)]) == 0
    return out


def test_fit_happy_path(dataset, tmp_path, capsys):
    out = tmp_path / "r"
    code = main(["fit", "--data", str(dataset / "manifest.json"), "--method", "pairwise-lr",
                 "--out", str(out), "--truth", str(dataset)])
    assert code == 0
    assert "pairwise-lr: p=4 m=5 n=400" in capsys.readouterr().out
    for name in ["ordering.json", "diagnostics.json", "metrics.csv"] + [
            f"B_view{i}.csv" for i in range(5)]:
        assert (out / name).is_file()


def test_missing_method_is_usage_error(dataset, tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        main(["fit", "--data", str(dataset / "manifest.json"), "--out", str(tmp_path / "r")])
    assert exc.value.code == 2
    assert "usage" in capsys.readouterr().err


def test_per_view_orderings(dataset, tmp_path):
    out = tmp_path / "r"
    assert main(["fit", "--data", str(dataset / "manifest.json"), "--method", "ica-j",
                 "--ordering", "per-view", "--out", str(out)]) == 0
    obj = json.loads((out / "ordering.json").read_text())
    assert obj["ordering_mode"] == "per_view"
    assert len(obj["ordering"]) == 5
    assert all(sorted(o) == [0, 1, 2, 3] for o in obj["ordering"])


def test_per_view_needs_ica(dataset, tmp_path):
    assert main(["fit", "--data", str(dataset / "manifest.json"), "--method", "pairwise-fc",
                 "--ordering", "per-view", "--out", str(tmp_path / "r")]) == 2


def test_data_error_exit_one(tmp_path, capsys):
    (tmp_path / "manifest.json").write_text('{"m": 1, "p": 2, "n": 2, "view_files": ["v.csv"]}')
    (tmp_path / "v.csv").write_text("1,2\nx,3\n")
    assert main(["fit", "--data", str(tmp_path / "manifest.json"), "--method", "pairwise-lr",
                 "--out", str(tmp_path / "r")]) == 1
    assert "v.csv:2:1" in capsys.readouterr().err


def test_simulate_byte_identical(tmp_path):
    for d in ("a", "b"):
        assert main(["simulate", "--preset", "figure1-gaussian", "--n", "1000", "--seed", "7",
                     "--out", str(tmp_path / d)]) == 0
    names = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert "manifest.json" in names and "truth.json" in names and "assumptions.json" in names
    for name in names:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_simulate_sparsify(tmp_path):
    assert main(["simulate", "--preset", "sparsity", "--p", "6", "--sparsify", "11",
                 "--n", "50", "--out", str(tmp_path)]) == 0
    man = json.loads((tmp_path / "manifest.json").read_text())
    assert (man["m"], man["p"]) == (8, 6)
    assert man["provenance"]["sparsify"] == 11


def test_simulate_noise_diversity_violations(tmp_path):
    assert main(["simulate", "--preset", "noise-diversity", "--m", "5",
                 "--noise-diversity-violations", "5", "--n", "50", "--out", str(tmp_path)]) == 0
    rep = json.loads((tmp_path / "assumptions.json").read_text())
    assert rep["noise_diversity"] is False
    assert main(["simulate", "--preset", "noise-diversity", "--m", "5",
                 "--noise-diversity-violations", "4", "--n", "50",
                 "--out", str(tmp_path / "k4")]) == 0
    assert json.loads((tmp_path / "k4" / "assumptions.json").read_text())["noise_diversity"]


def test_simulate_unknown_preset(tmp_path):
    assert main(["simulate", "--preset", "figure9", "--out", str(tmp_path)]) == 2


def test_bench_smoke(tmp_path):
    out = tmp_path / "b.csv"
    assert main(["bench", "--suite", "figure2", "--seeds", "1", "--jobs", "1",
                 "--out", str(out)]) == 0
    text = out.read_text().splitlines()
    assert text[0].startswith("# limvam ")
    assert text[1].startswith("# config: ")
    rows = read_rows(out)
    assert [r["estimator"] for r in rows] == ["ica-j", "pairwise-fc", "pairwise-lr"]
    assert all(r["error"] == "" for r in rows)


def test_bench_jobs_same_rows(tmp_path, monkeypatch):
    monkeypatch.delenv("LIMVAM_THREADS", raising=False)
    assert main(["bench", "--suite", "figure2", "--seeds", "2", "--jobs", "1",
                 "--out", str(tmp_path / "a.csv")]) == 0
    assert main(["bench", "--suite", "figure2", "--seeds", "2", "--jobs", "2",
                 "--out", str(tmp_path / "b.csv")]) == 0
    strip = lambda rows: [{k: v for k, v in r.items() if k != "wall_time"} for r in rows]  # noqa: E731
    assert strip(read_rows(tmp_path / "a.csv")) == strip(read_rows(tmp_path / "b.csv"))


def test_bench_unknown_suite(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["bench", "--suite", "nope", "--out", str(tmp_path / "x.csv")])
    assert exc.value.code == 2


def test_console_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "limvam.cli", "simulate", "--preset", "figure2",
                          "--n", "20", "--out", str(tmp_path)], capture_output=True, text=True)
    assert res.returncode == 0, res.stderr
    X = np.loadtxt(tmp_path / "view0.csv", delimiter=",")
    assert X.shape == (20, 5)
