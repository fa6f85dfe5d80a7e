import json

import numpy as np
import pandas as pd
import pytest
import yaml

from conftest import two_blobs
from pathchain.cli import run
from pathchain.config import OUTPUT_DIR_ENV


def write_cloud(path, cloud) -> str:
    frame = pd.DataFrame(cloud.points, columns=[f"x{i}" for i in range(cloud.dimension)])
    frame.insert(0, "id", list(cloud.ids))
    frame.to_csv(path, index=False)
    return str(path)


def last_error(capsys) -> dict:
    return json.loads(capsys.readouterr().err.strip().splitlines()[-1])


@pytest.fixture
def blob_csv(tmp_path):
    return write_cloud(tmp_path / "blobs.csv", two_blobs())


def test_embed_rnmc_separates_blobs(tmp_path, blob_csv):
    out = tmp_path / "out"
    assert run(["embed", blob_csv, "--epsilon", "1.5", "--m", "2", "--out", str(out)]) == 0
    embedding = pd.read_csv(out / "embedding.csv")
    assert list(embedding.columns) == ["id", "D1", "D2"]
    d1 = embedding["D1"].to_numpy()
    assert np.all(np.sign(d1[:20]) == np.sign(d1[0]))
    assert np.all(np.sign(d1[20:]) == -np.sign(d1[0]))
    eigenvalues = json.loads((out / "eigenvalues.json").read_text())["eigenvalues"]
    assert eigenvalues[0] == pytest.approx(1.0, abs=1e-10)
    diagnostics = json.loads((out / "diagnostics.json").read_text())
    assert diagnostics["chain"] == "rnmc"
    assert diagnostics["report"]["passed"]
    assert yaml.safe_load((out / "config.yaml").read_text())["pipeline"]["epsilon"] == 1.5


def test_embed_prescribed_uniform_writes_chain_and_telemetry(tmp_path, blob_csv):
    out = tmp_path / "out"
    argv = [
        "embed", blob_csv, "--epsilon", "1.5", "--chain", "pnmc-prescribed", "--target", "uniform",
        "--out", str(out), "--write-chain", "--telemetry",
    ]
    assert run(argv) == 0
    report = json.loads((out / "diagnostics.json").read_text())["report"]
    assert report["column_sum_deviation"] <= 1e-8
    assert report["symmetry_residual"] <= 1e-10
    telemetry = json.loads((out / "telemetry.json").read_text())
    assert telemetry["sinkhorn"]["residual"] <= 1e-10

    assert run(["validate", "--chain", str(out / "q.csv"), "--stationary", str(out / "p.csv")]) == 0


def test_validate_reports_corrupted_row(tmp_path, blob_csv, capsys):
    out = tmp_path / "out"
    assert run(["embed", blob_csv, "--epsilon", "1.5", "--out", str(out), "--write-chain"]) == 0
    q = pd.read_csv(out / "q.csv", index_col=0)
    q.iloc[5] *= 1.01
    q.to_csv(out / "q.csv", float_format="%.17g")
    capsys.readouterr()
    assert run(["validate", "--chain", str(out / "q.csv"), "--stationary", str(out / "p.csv")]) == 1
    report = json.loads(capsys.readouterr().out)
    assert report["worst_row"] == 5
    assert report["worst_row_id"] == "p005"
    assert not report["passed"]


def test_validate_rejects_dimension_mismatch(tmp_path, capsys):
    (tmp_path / "q.csv").write_text("id,a,b\na,0.5,0.5\nb,0.5,0.5\n")
    (tmp_path / "p.csv").write_text("id,probability\na,0.3\nb,0.3\nc,0.4\n")
    assert run(["validate", "--chain", str(tmp_path / "q.csv"), "--stationary", str(tmp_path / "p.csv")]) == 2
    assert last_error(capsys)["error"] == "InputError"


def test_malformed_csv_reports_line(tmp_path, capsys):
    path = tmp_path / "bad.csv"
    path.write_text("id,x,y\na,0,0\nb,1,1\nc,one,2\n")
    assert run(["embed", str(path), "--out", str(tmp_path / "out")]) == 2
    error = last_error(capsys)
    assert error["error"] == "InputError"
    assert error["line"] == 4


def test_duplicate_point_is_reported(tmp_path, capsys):
    path = tmp_path / "dup.csv"
    path.write_text("a,0,0\nb,0,0\nc,5,5\nd,6,6\n")
    assert run(["embed", str(path), "--kernel", "phate", "--k", "1", "--out", str(tmp_path / "out")]) == 2
    error = last_error(capsys)
    assert error["error"] == "DegenerateInputError"
    assert error["point_id"] == "a"


def test_config_errors_exit_with_input_code(tmp_path, blob_csv, capsys):
    assert run(["embed", blob_csv, "--chain", "pnmc-prescribed", "--out", str(tmp_path / "out")]) == 2
    assert last_error(capsys)["error"] == "ConfigError"


def test_flags_override_config_file(tmp_path, blob_csv):
    config = tmp_path / "pipeline.yaml"
    config.write_text("pipeline:\n  chain: pnmc-free\n  epsilon: 1.5\n  m: 3\n")
    out = tmp_path / "out"
    assert run(["embed", blob_csv, "--config", str(config), "--chain", "rnmc", "--out", str(out)]) == 0
    effective = yaml.safe_load((out / "config.yaml").read_text())["pipeline"]
    assert effective["chain"] == "rnmc"
    assert effective["m"] == 3
    assert json.loads((out / "diagnostics.json").read_text())["chain"] == "rnmc"


def test_output_dir_from_environment(tmp_path, blob_csv, monkeypatch):
    monkeypatch.setenv(OUTPUT_DIR_ENV, str(tmp_path / "from-env"))
    assert run(["embed", blob_csv, "--epsilon", "1.5", "--chain", "pnmc-free"]) == 0
    assert (tmp_path / "from-env" / "embedding.csv").exists()


def test_update_from_written_prior(tmp_path, blob_csv):
    prior = tmp_path / "prior"
    assert run(["embed", blob_csv, "--epsilon", "1.5", "--out", str(prior), "--write-chain"]) == 0
    out = tmp_path / "out"
    argv = [
        "embed", blob_csv, "--epsilon", "1.5", "--chain", "pnmc-update",
        "--prior-chain", str(prior / "q.csv"), "--prior-stationary", str(prior / "p.csv"), "--out", str(out),
    ]
    assert run(argv) == 0
    assert json.loads((out / "diagnostics.json").read_text())["chain"] == "pnmc_update"


def test_ising_output_is_deterministic(tmp_path):
    first, second = tmp_path / "a.csv", tmp_path / "b.csv"
    for path in (first, second):
        argv = ["ising", "--L", "2", "--n-samples", "100", "--seed", "7", "--burn-in", "10", "--out", str(path)]
        assert run(argv) == 0
    assert first.read_bytes() == second.read_bytes()


def test_ising_sixteen_by_sixteen_layout(tmp_path):
    path = tmp_path / "ising.csv"
    argv = [
        "ising", "--L", "16", "--temperature", "2.4", "--n-samples", "1000", "--seed", "0",
        "--burn-in", "10", "--thinning", "1", "--out", str(path),
    ]
    assert run(argv) == 0
    frame = pd.read_csv(path)
    assert frame.shape == (1000, 3 + 256)
    assert frame["magnetization"].between(-1, 1).all()


def test_energy_bias_pipeline_on_ising_samples(tmp_path):
    samples = tmp_path / "ising.csv"
    assert run(["ising", "--L", "4", "--n-samples", "60", "--burn-in", "20", "--out", str(samples)]) == 0
    target = tmp_path / "target.csv"
    argv = ["target", "energy-bias", str(samples), "--beta-new", str(1 / 2.25), "--beta-old", str(1 / 2.4),
            "--out", str(target)]
    assert run(argv) == 0
    p = pd.read_csv(target)["probability"].to_numpy()
    assert p.sum() == pytest.approx(1.0, abs=1e-12)

    out = tmp_path / "out"
    argv = ["embed", str(samples), "--percentile", "50", "--chain", "pnmc-prescribed", "--target", "custom",
            "--target-file", str(target), "--out", str(out)]
    assert run(argv) == 0
    report = json.loads((out / "diagnostics.json").read_text())["report"]
    assert report["stationarity_residual"] <= 1e-8

    direct = tmp_path / "direct"
    argv = ["embed", str(samples), "--percentile", "50", "--chain", "pnmc-prescribed", "--target", "energy-bias",
            "--beta-new", str(1 / 2.25), "--beta-old", str(1 / 2.4), "--out", str(direct)]
    assert run(argv) == 0
    report = json.loads((direct / "diagnostics.json").read_text())["report"]
    assert report["stationarity_residual"] <= 1e-8


def test_meta_columns_flag_keeps_columns_out_of_geometry(tmp_path):
    rng = np.random.default_rng(0)
    frame = pd.DataFrame(rng.normal(size=(12, 2)), columns=["x", "y"])
    frame.insert(0, "id", [f"c{i}" for i in range(12)])
    frame.to_csv(tmp_path / "plain.csv", index=False)
    frame.insert(1, "weight", rng.uniform(size=12))
    frame.to_csv(tmp_path / "weighted.csv", index=False)

    assert run(["embed", str(tmp_path / "plain.csv"), "--percentile", "50", "--out", str(tmp_path / "a")]) == 0
    argv = ["embed", str(tmp_path / "weighted.csv"), "--meta-columns", "weight", "--percentile", "50",
            "--out", str(tmp_path / "b")]
    assert run(argv) == 0
    assert (tmp_path / "a" / "embedding.csv").read_bytes() == (tmp_path / "b" / "embedding.csv").read_bytes()


def test_chain_flag_clears_target_from_config_file(tmp_path, blob_csv):
    config = tmp_path / "pipeline.yaml"
    config.write_text(
        "pipeline:\n  chain: pnmc-prescribed\n  target: energy-bias\n  beta_new: 0.44\n  beta_old: 0.42\n"
    )
    out = tmp_path / "out"
    assert run(["embed", blob_csv, "--config", str(config), "--chain", "rnmc", "--epsilon", "1.5",
                "--out", str(out)]) == 0
    effective = yaml.safe_load((out / "config.yaml").read_text())["pipeline"]
    assert effective["chain"] == "rnmc"
    assert effective["target"] is None
    assert effective["beta_new"] is None


def test_directory_as_input_is_an_input_error(tmp_path, capsys):
    assert run(["embed", str(tmp_path), "--out", str(tmp_path / "out")]) == 2
    error = last_error(capsys)
    assert error["error"] == "InputError"
    assert error["message"]


def test_output_path_that_is_a_file_is_an_input_error(tmp_path, blob_csv, capsys):
    taken = tmp_path / "taken"
    taken.write_text("not a directory\n")
    assert run(["embed", blob_csv, "--epsilon", "1.5", "--out", str(taken)]) == 2
    assert last_error(capsys)["error"] == "InputError"


def test_embed_takes_no_seed(tmp_path, blob_csv):
    with pytest.raises(SystemExit) as excinfo:
        run(["embed", blob_csv, "--seed", "0", "--out", str(tmp_path / "out")])
    assert excinfo.value.code == 2


def test_seed_in_config_file_is_a_config_error(tmp_path, blob_csv, capsys):
    config = tmp_path / "pipeline.yaml"
    config.write_text("pipeline:\n  seed: 0\n")
    assert run(["embed", blob_csv, "--config", str(config), "--out", str(tmp_path / "out")]) == 2
    assert last_error(capsys)["error"] == "ConfigError"
