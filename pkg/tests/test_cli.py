import json
import subprocess
import sys

import pytest

from electgnn.cli import main
from electgnn.data import compute_label, read_jsonl

TINY = ["--node-width", "8", "--edge-width", "4", "--layers", "1", "--batch-size", "16"]


def run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture(scope="module")
def datasets(tmp_path_factory):
    d = tmp_path_factory.mktemp("data")
    assert run("gen", "--source", "dirichlet", "--count", 40, "--seed", 7, "--label", "rule:borda", "--out", d / "train.jsonl") == 0
    assert run("gen", "--source", "spatial", "--count", 24, "--seed", 8, "--label", "welfare:utilitarian", "--out", d / "spatial.jsonl") == 0
    return d


def test_gen_is_deterministic_and_labelled(tmp_path, capsys):
    for name in ("a", "b"):
        assert run("gen", "--source", "dirichlet", "--count", 100, "--seed", 7, "--label", "rule:borda", "--out", tmp_path / f"{name}.jsonl") == 0
    assert (tmp_path / "a.jsonl").read_bytes() == (tmp_path / "b.jsonl").read_bytes()
    for e in read_jsonl(tmp_path / "a.jsonl"):
        assert e.label == compute_label(e.utilities, "rule:borda")
    manifest = json.loads((tmp_path / "a.jsonl.manifest.json").read_text())
    assert manifest["status"] == "ok" and manifest["seed"] == 7 and manifest["command"] == "gen"


@pytest.mark.parametrize(
    "argv",
    [
        ["gen", "--count", "5"],
        ["gen", "--out", "x.jsonl", "--label", "rule:dictator"],
        ["gen", "--out", "x.jsonl", "--n-min", "5", "--n-max", "2"],
        ["gen", "--out", "x.jsonl", "--source", "file"],
        ["gen", "--out", "x.jsonl", "--path", "u.csv"],
        ["frobnicate"],
        [],
    ],
)
def test_usage_errors_exit_1(tmp_path, monkeypatch, argv):
    monkeypatch.chdir(tmp_path)
    assert main(argv) == 1


def test_train_needs_output_directory(datasets, monkeypatch):
    monkeypatch.delenv("ELECTGNN_OUTDIR", raising=False)
    assert run("train", "--mode", "mimic", "--rule", "borda", "--train", datasets / "train.jsonl", "--val", datasets / "train.jsonl") == 1


def test_freeze_scenarios_need_pretrained(datasets, tmp_path):
    for scenario in ("robust-freeze", "standard-freeze"):
        code = run("train", "--mode", "adversarial", "--scenario", scenario, "--train", datasets / "spatial.jsonl",
                   "--val", datasets / "spatial.jsonl", "--out-dir", tmp_path)
        assert code == 1


def test_missing_input_file_is_runtime_error(tmp_path):
    assert run("train", "--mode", "welfare", "--train", tmp_path / "nope.jsonl", "--val", tmp_path / "nope.jsonl", "--out-dir", tmp_path) == 2


def test_train_outputs_and_rerun_are_identical(datasets, tmp_path, monkeypatch):
    monkeypatch.setenv("ELECTGNN_OUTDIR", str(tmp_path / "run"))
    argv = ["train", "--mode", "mimic", "--rule", "borda", "--train", datasets / "train.jsonl", "--val", datasets / "train.jsonl",
            "--epochs", 3, *TINY]
    assert run(*argv) == 0
    out = tmp_path / "run"
    assert {p.name for p in out.iterdir()} == {"model.ckpt", "metrics.csv", "manifest.json"}
    metrics = (out / "metrics.csv").read_bytes()
    ckpt = (out / "model.ckpt").read_bytes()
    assert metrics.splitlines()[0] == b"epoch,split,metric,value"
    monkeypatch.delenv("ELECTGNN_OUTDIR")
    assert run("rerun", out / "manifest.json") == 0
    assert (out / "metrics.csv").read_bytes() == metrics
    assert (out / "model.ckpt").read_bytes() == ckpt


def test_welfare_and_adversarial_training(datasets, tmp_path):
    honest = tmp_path / "honest"
    assert run("train", "--mode", "welfare", "--input", "utility", "--mono-weight", 0.5, "--train", datasets / "spatial.jsonl",
               "--val", datasets / "spatial.jsonl", "--out-dir", honest, "--epochs", 2, *TINY) == 0
    adv = tmp_path / "adv"
    assert run("train", "--mode", "adversarial", "--scenario", "standard-freeze", "--pretrained", honest / "model.ckpt",
               "--train", datasets / "spatial.jsonl", "--val", datasets / "spatial.jsonl", "--out-dir", adv, "--epochs", 1,
               "--batch-size", 16) == 0
    assert (adv / "gesn.ckpt").exists()
    # the pretrained network must be a voting network
    assert run("train", "--mode", "adversarial", "--scenario", "robust-freeze", "--pretrained", adv / "gesn.ckpt",
               "--train", datasets / "spatial.jsonl", "--val", datasets / "spatial.jsonl", "--out-dir", tmp_path / "bad",
               "--epochs", 1) == 2


def test_eval_and_audit(datasets, tmp_path, capsys):
    out = tmp_path / "welfare"
    assert run("train", "--mode", "welfare", "--input", "cardinal", "--train", datasets / "spatial.jsonl", "--val",
               datasets / "spatial.jsonl", "--out-dir", out, "--epochs", 1, *TINY) == 0
    capsys.readouterr()
    assert run("eval", "--baseline", "welfare:utilitarian", "--data", datasets / "spatial.jsonl") == 0
    report = json.loads(capsys.readouterr().out)
    assert report["accuracy"] == 1.0

    assert run("audit", "--checkpoint", out / "model.ckpt", "--data", datasets / "spatial.jsonl", "--elections", 10) == 0
    audit = json.loads(capsys.readouterr().out)
    assert audit["anonymity_deviation"] < 1e-9 and audit["neutrality_deviation"] < 1e-9

    assert run("eval", "--checkpoint", out / "model.ckpt", "--data", datasets / "spatial.jsonl", "--format", "csv",
               "--out", tmp_path / "r.csv") == 0
    lines = (tmp_path / "r.csv").read_text().splitlines()
    assert lines[0] == "metric,value" and any(line.startswith("welfare.utilitarian,") for line in lines)


def test_eval_usage_and_corruption(datasets, tmp_path, capsys):
    assert run("eval", "--data", datasets / "spatial.jsonl") == 1
    assert run("eval", "--baseline", "rule:borda", "--checkpoint", "x", "--data", datasets / "spatial.jsonl") == 1
    bad = tmp_path / "bad.ckpt"
    bad.write_bytes(b"PK\x03\x04garbage")
    capsys.readouterr()
    assert run("eval", "--checkpoint", bad, "--data", datasets / "spatial.jsonl") == 2
    assert "corrupted checkpoint" in capsys.readouterr().err


def test_module_entry_point():
    done = subprocess.run([sys.executable, "-m", "electgnn", "--version"], capture_output=True, text=True)
    assert done.returncode == 0 and "electgnn" in done.stdout
