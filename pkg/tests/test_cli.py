import csv
import hashlib
import json

import pytest

from mqgraph.cli import main


def digest(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


def run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture(scope="module")
def run_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("run")
    assert run("generate", "--out", out, "--n", 3, "--T", 300, "--seed", 5) == 0
    assert run("map", "--out", out, "--eta", 8) == 0
    assert run("features", "--out", out) == 0
    assert run("cluster", "--out", out, "--k", 6, "--reps", 2, "--subset", "full", "intra") == 0
    return out


def test_layout(run_dir):
    rows = list(csv.DictReader((run_dir / "dataset" / "manifest.csv").open()))
    assert len(rows) == 18
    assert len(list((run_dir / "dataset" / "series").glob("*.csv"))) == 18
    assert len(list((run_dir / "networks" / "mqg").glob("*.tsv"))) == 18
    header = (run_dir / "features" / "mqg.csv").read_text().splitlines()[0].split(",")
    assert header[:2] == ["instance_id", "label"] and len(header) == 23
    report = json.loads((run_dir / "cluster" / "mqg_full.json").read_text())
    assert report["repetitions"] == 2 and len(report["assignments"]) == 18
    summary = list(csv.DictReader((run_dir / "cluster" / "mqg_summary.csv").open()))
    assert [r["subset"] for r in summary] == ["full", "intra"]
    assert (run_dir / "config" / "generate.json").exists()


def test_rerun_is_byte_identical(run_dir):
    files = [run_dir / "dataset" / "manifest.csv", run_dir / "features" / "mqg.csv",
             run_dir / "cluster" / "mqg_full.json", run_dir / "networks" / "mqg" / "iBWN_0000.tsv"]
    before = [digest(p) for p in files]
    assert run("generate", "--out", run_dir, "--n", 3, "--T", 300, "--seed", 5) == 0
    assert run("map", "--out", run_dir, "--eta", 8, "--jobs", 2) == 0
    assert run("features", "--out", run_dir, "--jobs", 2) == 0
    assert run("cluster", "--out", run_dir, "--k", 6, "--reps", 2, "--subset", "full", "intra") == 0
    assert [digest(p) for p in files] == before


def test_missing_inputs_are_reported(tmp_path, capsys):
    assert run("features", "--out", tmp_path) == 2
    assert "manifest.csv" in capsys.readouterr().err
    assert run("cluster", "--out", tmp_path) == 2
    assert "features" in capsys.readouterr().err
    assert run("bench", "--out", tmp_path) == 2


def test_config_file_and_bench(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"n": 1, "T": 200, "models": ["iBWN", "sVAR"], "seed": 1}))
    assert run("generate", "--out", tmp_path, "--config", cfg) == 0
    assert len(list((tmp_path / "dataset" / "series").glob("*.csv"))) == 2
    echoed = json.loads((tmp_path / "config" / "generate.json").read_text())
    assert echoed["T"] == 200
    assert run("bench", "--out", tmp_path) == 0
    rows = list(csv.DictReader((tmp_path / "bench" / "summary.csv").open()))
    assert [r["label"] for r in rows] == ["iBWN", "sVAR"]
    assert all(float(r["mhvg_seconds"]) > 0 for r in rows)


def test_chain_and_bad_model(tmp_path):
    assert run("generate", "--out", tmp_path, "--n", 1, "--T", 120, "--models", "cBWN", "wVAR") == 0
    assert run("cluster", "--out", tmp_path, "--chain", "--k", 2, "--reps", 1, "--eta", 4) == 0
    assert (tmp_path / "features" / "mqg.csv").exists()
    assert run("generate", "--out", tmp_path, "--models", "ARMA") == 2


def test_env_var_sets_output(tmp_path, monkeypatch):
    monkeypatch.setenv("MQGRAPH_OUT", str(tmp_path / "env"))
    assert run("generate", "--n", 1, "--T", 50, "--models", "iBWN") == 0
    assert (tmp_path / "env" / "dataset" / "manifest.csv").exists()


def test_pipeline_regenerate(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"regenerate": True, "n": 2, "T": 150, "models": ["iBWN", "sVAR"],
                               "k": 2, "reps": 2, "eta": 5, "subset": ["full", "inter"]}))
    assert run("pipeline", "--out", tmp_path, "--config", cfg) == 0
    rows = list(csv.DictReader((tmp_path / "cluster" / "mqg_regenerated_summary.csv").open()))
    assert [r["subset"] for r in rows] == ["full", "inter"]
    report = json.loads((tmp_path / "cluster" / "mqg_full_regenerated.json").read_text())
    assert len(report["per_repetition"]) == 2
    assert not (tmp_path / "dataset").exists()
