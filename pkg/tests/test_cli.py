import json
import subprocess
import sys

import numpy as np
import pytest

from nrs.cli import main
from nrs.data import Dataset, write_csv


def run(argv, capsys):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def train_args(path, out, *extra):
    return ["train", "--train_path", path, "--n_mul", 2, "--n_h", 2,
            "--epochs", 2, "--batch_size", 32, "--output_dir", out, *extra]


def test_train_writes_run_artifacts(small_dataset_file, tmp_path, capsys):
    out = tmp_path / "run"
    code, stdout, _ = run(train_args(small_dataset_file, out,
                                     "--test_fraction", 0.3), capsys)
    assert code == 0
    summary = json.loads(stdout)
    assert summary["epochs"] == 2 and "test" in summary["final"]
    for name in ("config.txt", "metrics.jsonl", "metrics.csv", "final.ckpt",
                 "best.ckpt", "summary.json"):
        assert (out / name).exists(), name
    rec = json.loads((out / "metrics.jsonl").read_text().splitlines()[0])
    assert set(rec) == {"config", "seed", "epoch", "split", "metric", "value"}


def test_zero_epochs_evaluates_initial_model(small_dataset_file, tmp_path,
                                             capsys):
    out = tmp_path / "run"
    code, stdout, _ = run(train_args(small_dataset_file, out, "--epochs", 0),
                          capsys)
    assert code == 0
    recs = [json.loads(l) for l in (out / "metrics.jsonl").read_text().splitlines()]
    assert {r["epoch"] for r in recs} == {0}
    assert {r["split"] for r in recs} == {"val"}


def test_two_runs_bit_identical(small_dataset_file, tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run(train_args(small_dataset_file, a), capsys)[0] == 0
    assert run(train_args(small_dataset_file, b), capsys)[0] == 0
    for name in ("final.ckpt", "best.ckpt", "metrics.jsonl", "metrics.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes(), name


def test_eval_overfit_tiny_set(toy_separable_file, tmp_path, capsys):
    out = tmp_path / "run"
    code, _, _ = run(["train", "--train_path", toy_separable_file,
                      "--n_mul", 2, "--n_h", 2, "--epochs", 60,
                      "--batch_size", 8, "--lr", 1e-2, "--val_fraction", 0,
                      "--output_dir", out], capsys)
    assert code == 0
    code, stdout, _ = run(["eval", "--checkpoint", out / "final.ckpt",
                           "--data", toy_separable_file], capsys)
    assert code == 0
    assert json.loads(stdout)["accuracy"] == 1.0


def test_eval_dimension_mismatch(toy_separable_file, tmp_path, capsys):
    out = tmp_path / "run"
    run(train_args(toy_separable_file, out, "--epochs", 1), capsys)
    other = tmp_path / "wide.libsvm"
    other.write_text("1 1:1 9:2\n2 3:1\n")
    code, _, err = run(["eval", "--checkpoint", out / "final.ckpt",
                        "--data", other], capsys)
    assert code == 2 and "d=" in err


def test_regression_eval_reports_mse(tmp_path, capsys):
    rng = np.random.default_rng(0)
    X = rng.standard_normal((60, 5))
    ds = Dataset(X, X @ np.arange(1.0, 6.0), task="regression")
    path = tmp_path / "reg.csv"
    write_csv(ds, path)
    out = tmp_path / "run"
    code, _, _ = run(["train", "--train_path", path, "--format", "csv",
                      "--task", "regress", "--n_mul", 2, "--n_h", 2,
                      "--epochs", 3, "--output_dir", out], capsys)
    assert code == 0
    code, stdout, _ = run(["eval", "--checkpoint", out / "final.ckpt",
                           "--data", path, "--format", "csv"], capsys)
    assert code == 0
    mse = json.loads(stdout)["mse"]
    assert isinstance(mse, float) and mse >= 0


def test_count_satimage_config(capsys):
    code, stdout, _ = run(["count", "--dataset", "satimage", "--json"], capsys)
    assert code == 0
    rep = json.loads(stdout)
    assert rep["conv"]["nrs_params"] == 6480
    assert rep["param_reduction"] == 720


def test_count_needs_shapes(capsys):
    assert run(["count"], capsys)[0] == 1


def test_gradcheck_default_passes(capsys):
    code, stdout, _ = run(["gradcheck"], capsys)
    assert code == 0
    assert stdout.strip().splitlines()[-1] == "PASS"


def test_sweep_empty_grid_is_usage_error(small_dataset_file, capsys):
    code, _, err = run(["sweep", "--train_path", small_dataset_file], capsys)
    assert code == 1 and "grid" in err


@pytest.mark.parametrize("argv", [
    ["bogus"], ["train", "--no_such_key", "1"], ["train", "--n_mul", "x"],
    ["train", "--repeats", "0"], ["ablate", "--rows", "xz"],
    ["train", "--config", "/nonexistent/cfg.txt"], ["train", "--epochs"],
])
def test_usage_errors(argv, capsys, small_dataset_file):
    if argv[0] == "ablate":
        argv = argv + ["--train_path", str(small_dataset_file)]
    assert run(argv, capsys)[0] == 1


def test_runtime_error_exit_code(tmp_path, capsys):
    assert run(["train", "--train_path", tmp_path / "missing.libsvm"],
               capsys)[0] == 2


def test_config_file_and_flag_precedence(small_dataset_file, tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(f"train_path = {small_dataset_file}\nnMul = 2\nnH = 2\n"
                   "epochs = 5\nbatch_size = 32\n")
    out = tmp_path / "run"
    code, stdout, _ = run(["train", "--config", cfg, "--epochs", 1,
                           "--output_dir", out], capsys)
    assert code == 0 and json.loads(stdout)["epochs"] == 1
    assert "n_mul = 2" in (out / "config.txt").read_text()


def test_ablate_reference(small_dataset_file, tmp_path, capsys):
    code, stdout, _ = run(["ablate", "--train_path", small_dataset_file,
                           "--n_mul", 2, "--n_h", 2, "--epochs", 1,
                           "--repeats", 1, "--rows", "cd", "--reference",
                           "--output_dir", tmp_path], capsys)
    assert code == 0
    res = json.loads(stdout)
    assert res["d_matches_reference"] is True
    assert [r["row"] for r in res["rows"]] == ["c", "d"]


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "nrs.cli", "count",
                           "--n_features", "5", "--outputs", "2",
                           "--n_mul", "2"], capture_output=True, text=True)
    assert proc.returncode == 0 and "group_conv" in proc.stdout
