import json
import time
from pathlib import Path

import numpy as np
import pytest
import yaml

from routekit.cli import main, parse_lambda_grid
from routekit.dataset import load_dataset

from conftest import make_dataset


def run(args):
    return main([str(a) for a in args])


@pytest.fixture(scope="module")
def synth_file(tmp_path_factory):
    out = tmp_path_factory.mktemp("data") / "synth.jsonl"
    assert run(["synth", "--n", 160, "--models", 3, "--dim", 8, "--clusters", 3,
                "--seed", 11, "--out", out]) == 0
    return out


def test_synth_writes_loadable_dataset(synth_file):
    ds = load_dataset(synth_file)
    assert len(ds) == 160 and ds.n_models == 3


def test_lambda_grid_parsing():
    grid = parse_lambda_grid("1e-3:1e1:5")
    assert len(grid) == 5 and grid[0] == 1e-3 and grid[-1] == 10.0
    assert parse_lambda_grid("0.1,1,10") == [0.1, 1.0, 10.0]


def test_smoke_synth_then_train_is_fast(tmp_path, synth_file):
    start = time.monotonic()
    reps = tmp_path / "reps.tsv"
    assert run(["build-reps", "--data", synth_file, "--clusters", 3, "--seed", 1, "--out", reps]) == 0
    assert run(["train", "--data", synth_file, "--target", "quality", "--arch-quality", "fcn2",
                "--epochs", 5, "--reps", reps, "--seed", 1, "--out", tmp_path / "q.bin"]) == 0
    assert time.monotonic() - start < 60.0


def test_report_runs_are_byte_identical(tmp_path, synth_file):
    outs = [tmp_path / "a", tmp_path / "b"]
    for out in outs:
        assert run(["report", "--data", synth_file, "--out", out, "--epochs", 6,
                    "--arch-quality", "fcn2", "--arch-cost", "regression", "--seed", 4]) == 0
    for name in ("report.json", "report.txt", "trace.jsonl", "sweep.tsv", "reps.tsv",
                 "pareto.png", "calls.png", "predictor-quality.bin", "predictor-cost.bin"):
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes(), name


def test_eval_reproduces_report_metrics(tmp_path, synth_file, capsys):
    out = tmp_path / "run"
    assert run(["report", "--data", synth_file, "--out", out, "--epochs", 6,
                "--arch-quality", "regression", "--arch-cost", "regression", "--seed", 2]) == 0
    capsys.readouterr()
    assert run(["eval", "--trace", out / "trace.jsonl"]) == 0
    evald = json.loads(capsys.readouterr().out)
    reported = json.loads((out / "report.json").read_text())["metrics"]
    assert evald == reported


def test_pool_subset_restricts_report(tmp_path, synth_file):
    out = tmp_path / "sub"
    assert run(["report", "--data", synth_file, "--out", out, "--epochs", 5,
                "--arch-quality", "regression", "--arch-cost", "regression",
                "--pool", "m0,m2", "--seed", 0]) == 0
    payload = json.loads((out / "report.json").read_text())
    assert payload["pool"] == ["m0", "m2"]
    assert all(set(p["calls"]) == {"m0", "m2"} for p in payload["sweep"])


def test_oracle_report(tmp_path, synth_file):
    out = tmp_path / "oracle"
    assert run(["report", "--data", synth_file, "--out", out, "--oracle", "--seed", 0]) == 0
    assert (out / "report.json").exists()
    assert not (out / "predictor-quality.bin").exists()


def test_route_prints_dominant_quality_model(tmp_path, capsys):
    # model m1 is plainly better everywhere; at huge lambda cost cannot matter
    rng = np.random.default_rng(0)
    emb = rng.normal(size=(60, 4))
    emb /= np.linalg.norm(emb, axis=1, keepdims=True)
    quality = [[0.1, 0.95] for _ in range(60)]
    cost = [[0.001, 0.05] for _ in range(60)]
    ds = make_dataset(list(emb), quality, cost)
    from routekit.dataset import save_dataset

    data = tmp_path / "dom.jsonl"
    save_dataset(ds, data)
    reps = tmp_path / "reps.tsv"
    assert run(["build-reps", "--data", data, "--clusters", 2, "--seed", 0, "--out", reps]) == 0
    for target in ("quality", "cost"):
        assert run(["train", "--data", data, "--target", target, f"--arch-{target}", "regression",
                    "--reps", reps, "--seed", 0, "--out", tmp_path / f"{target}.bin"]) == 0
    emb_file = tmp_path / "emb.json"
    emb_file.write_text(json.dumps(list(emb[0])))
    capsys.readouterr()
    assert run(["route", "--embedding", emb_file, "--reps", reps,
                "--predictor-quality", tmp_path / "quality.bin",
                "--predictor-cost", tmp_path / "cost.bin",
                "--lam", 1e9, "--reward", "r2"]) == 0
    decision = json.loads(capsys.readouterr().out)
    assert decision["model"] == "m1"
    assert decision["lambda"] == 1e9


@pytest.mark.filterwarnings("ignore::RuntimeWarning")  # intentional blow-up
def test_stage_tagged_failure(tmp_path, synth_file, capsys):
    out = tmp_path / "fail"
    config = {
        "out": str(out),
        "data": {"path": str(synth_file)},
        "seed": 0,
        "quality_predictor": {"architecture": "fcn2", "epochs": 30, "learning_rate": 1e12},
        "cost_predictor": {"architecture": "regression"},
    }
    cfg_path = tmp_path / "cfg.yaml"
    cfg_path.write_text(yaml.safe_dump(config))
    with np.errstate(over="ignore"):
        code = run(["report", "--config", cfg_path])
    err = capsys.readouterr().err
    assert code == 1
    assert "train-quality" in err
    assert (out / "FAILED").exists()
    assert "train-quality" in (out / "FAILED").read_text()


def test_config_file_with_synth_and_overrides(tmp_path, capsys):
    out = tmp_path / "cfgrun"
    config = {
        "out": str(out),
        "seed": 3,
        "data": {"synth": {"n": 120, "models": 3, "dim": 6, "clusters": 3, "seed": 3}},
        "quality_predictor": {"architecture": "regression"},
        "cost_predictor": {"architecture": "regression"},
        "lambda_grid": {"low": 1e-4, "high": 1e2, "points": 8},
        "reward": "r1",
    }
    cfg_path = tmp_path / "cfg.yaml"
    cfg_path.write_text(yaml.safe_dump(config))
    assert run(["report", "--config", cfg_path, "--reward", "r2"]) == 0
    payload = json.loads((out / "report.json").read_text())
    assert payload["reward"] == "r2"  # flag overrides config
    assert len(payload["sweep"]) == 8
    echo = yaml.safe_load((out / "config.echo").read_text())
    assert echo["reward"] == "r2" and echo["data"]["synth"]["n"] == 120


def test_ablation_mode_emits_grid(tmp_path, synth_file):
    out = tmp_path / "abl"
    assert run(["report", "--data", synth_file, "--out", out, "--epochs", 3,
                "--ablation", "--seed", 1]) == 0
    payload = json.loads((out / "report.json").read_text())
    assert len(payload["ablation"]) == 16
    assert "attention|attention" in payload["ablation"]
    assert (out / "ablation.png").exists()
    assert "ablation grid" in (out / "report.txt").read_text()


def test_unknown_input_fails_cleanly(capsys):
    assert run(["eval", "--trace", "/nonexistent/trace.jsonl"]) == 1
    assert "error" in capsys.readouterr().err
