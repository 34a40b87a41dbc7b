import json

import numpy as np
import pytest

from cstomo.cli import BenchmarkRow, ExperimentConfig, main, rows_to_csv, run_benchmark


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_config_validation():
    with pytest.raises(ValueError, match="infeasible"):
        ExperimentConfig(T=100, c=20, m_grid=(10,))
    with pytest.raises(ValueError, match="unknown estimators"):
        ExperimentConfig(estimators=("sdp",))
    with pytest.raises(ValueError):
        ExperimentConfig(trials=0)
    with pytest.raises(ValueError, match="exceeds"):
        ExperimentConfig(n=2, m_grid=(17,))


def test_benchmark_row_validation():
    with pytest.raises(ValueError):
        BenchmarkRow(8, "lasso", 1.5, 0.0, 0.1, 0.0, 0.0)
    with pytest.raises(ValueError):
        BenchmarkRow(8, "lasso", 0.5, -0.1, 0.1, 0.0, 0.0)


def test_run_benchmark_deterministic_and_ordered():
    cfg = ExperimentConfig(n=2, T=2000, c=20, m_grid=(8, 16), trials=2, seed=9)
    rows1, manifest = run_benchmark(cfg, timing=False)
    rows2, _ = run_benchmark(cfg, timing=False)
    assert rows_to_csv(rows1) == rows_to_csv(rows2)
    assert [(r.m, r.estimator) for r in rows1] == [
        (8, "lasso"), (8, "mle"), (16, "lasso"), (16, "mle")]
    assert manifest["master_seed"] == 9
    assert len(manifest["trial_spawn_keys"]) == 2
    assert all(r.mean_solver_seconds == 0.0 for r in rows1)


def test_simulate_reconstruct_certify_pipeline(tmp_path, capsys):
    sim = tmp_path / "sim.json"
    code, _, _ = run(["simulate", "--n", "2", "--t", "exact", "--seed", "5",
                      "--output", str(sim)], capsys)
    assert code == 0
    rec = tmp_path / "rec.json"
    code, out, _ = run(["reconstruct", "--input", str(sim), "--estimator", "lasso",
                        "--output", str(rec)], capsys)
    assert code == 0
    fid = float(out.split()[1])
    assert fid >= 0.99
    code, out, _ = run(["certify", "--input", str(rec), "--eps", "0.05",
                        "--delta", "0.1", "--seed", "1", "--output",
                        str(tmp_path / "cert.json")], capsys)
    assert code == 0
    report = json.loads((tmp_path / "cert.json").read_text())
    f_true = json.loads(rec.read_text())["fidelity"]
    assert abs(report["F_hat"] - f_true) <= 0.05


def test_subcommand_determinism(tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for out in (a, b):
        code, _, _ = run(["simulate", "--n", "2", "--m", "10", "--t", "500",
                          "--seed", "3", "--output", str(out)], capsys)
        assert code == 0
    assert a.read_bytes() == b.read_bytes()


def test_benchmark_subcommand_and_dry_run(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"n": 2, "T": 2000, "c": 20, "m_grid": [8, 16],
                               "trials": 2, "seed": 1, "estimators": ["lasso"]}))
    code, out, _ = run(["benchmark", "--config", str(cfg), "--dry-run"], capsys)
    assert code == 0
    assert out.splitlines() == ["m,t", "8,1840", "16,1680"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for out_path in (a, b):
        code, _, _ = run(["benchmark", "--config", str(cfg), "--no-timing",
                          "--output", str(out_path)], capsys)
        assert code == 0
    assert a.read_bytes() == b.read_bytes()
    assert a.read_text().startswith(
        "m,estimator,mean_fidelity,std_fidelity,mean_trace_distance,"
        "std_trace_distance,mean_solver_seconds\n")
    with open(str(a) + ".seeds.json") as fh:
        seeds = json.load(fh)
    assert seeds["master_seed"] == 1


def test_packing_subcommand(tmp_path, capsys):
    out_path = tmp_path / "packing.json"
    code, _, _ = run(["packing", "--d", "8", "--epsilon", "0.4", "--size", "3",
                      "--seed", "2", "--output", str(out_path)], capsys)
    assert code == 0
    manifest = json.loads(out_path.read_text())
    assert manifest["size"] == 3 and manifest["complete"]
    assert len(manifest["states"]) == 3


def test_process_subcommand(tmp_path, capsys):
    code, out, _ = run(["process", "--n", "1", "--t", "exact", "--seed", "4",
                        "--output", str(tmp_path / "proc.json")], capsys)
    assert code == 0
    fid = float(out.split()[-1])
    assert fid >= 0.99


def test_error_reporting(capsys):
    code, _, err = run(["reconstruct", "--input", "/nonexistent.json"], capsys)
    assert code == 1
    payload = json.loads(err.strip().splitlines()[-1])
    assert payload["error"] == "FileNotFoundError"
