import csv
import json
import subprocess
import sys

import pytest

from stationary_polymer import cli

FAST = ["--n", "3", "--dt", "0.02", "--samples", "40", "--bootstrap", "40", "--ladder-samples", "4", "--seed", "3"]


def test_simulate_writes_files(tmp_path):
    assert cli.main(["simulate", *FAST, "--out-dir", str(tmp_path)]) == 0
    rows = list(csv.reader(open(tmp_path / "samples.csv")))
    header = rows[0]
    assert header[:5] == ["sample_index", "log_z", "r_1", "r_2", "r_3"]
    assert "kappa_plus_2" in header and "H_tau_6" in header and header[-1] == "fb_gap"
    assert len(rows) == 41
    manifest = json.load(open(tmp_path / "manifest.json"))
    assert manifest["files"]["samples.csv"] == {"rows": 40, "fields": len(header)}
    assert manifest["config"]["seed"] == 3
    assert manifest["grid"]["dt"] == 0.02
    summary = json.load(open(tmp_path / "summary.json"))
    assert set(summary) == set(cli.SUMMARY_FIELDS)


def test_csv_round_trips_floats(tmp_path):
    from stationary_polymer.ensemble import RunConfig, run_ensemble

    cli.main(["simulate", *FAST, "--out-dir", str(tmp_path)])
    s = run_ensemble(RunConfig(n=3, dt=0.02, samples=40, bootstrap=40, seed=3))
    with open(tmp_path / "samples.csv") as fh:
        first = next(csv.DictReader(fh))
    assert float(first["log_z"]) == s.columns["log_z"][0]


def test_json_format_and_no_burke_columns(tmp_path):
    assert cli.main(["simulate", *FAST, "--format", "json", "--no-burke-columns", "--out-dir", str(tmp_path)]) == 0
    data = json.load(open(tmp_path / "samples.json"))
    assert "r_1" not in data["columns"]
    assert len(data["rows"]) == 40


def test_outputs_identical_across_thread_counts(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    # tiny ensembles may fail individual checks; only the bytes matter here
    code_a = cli.main(["all", *FAST, "--threads", "1", "--out-dir", str(a)])
    code_b = cli.main(["all", *FAST, "--threads", "4", "--out-dir", str(b)])
    assert code_a == code_b
    for name in ("samples.csv", "summary.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_k2_and_variance_give_identical_residuals(tmp_path):
    cli.main(["verify-cumulants", "--k", "2", *FAST, "--out-dir", str(tmp_path / "k")])
    cli.main(["verify-variance", *FAST, "--out-dir", str(tmp_path / "v")])
    k = json.load(open(tmp_path / "k" / "summary.json"))["checks"]["cumulant_k2"]
    v = json.load(open(tmp_path / "v" / "summary.json"))["checks"]["variance"]
    assert k["residual"] == v["residual"]


@pytest.mark.parametrize("argv", [
    ["verify-cumulants"],
    ["verify-cumulants", "--k", "5"],
    ["simulate", "--t", "3", "--characteristic"],
    ["simulate", "--n-list", "8,16"],
    ["exponents", "--n-list", "8,16"],
    ["simulate", "--theta", "-1"],
    ["simulate", "--n", "8", "--t-offset", "50"],
])
def test_usage_errors_exit_2(tmp_path, argv):
    assert cli.main(argv + ["--out-dir", str(tmp_path)]) == 2


def test_argparse_errors_exit_2():
    with pytest.raises(SystemExit) as exc:
        cli.main(["not-a-command"])
    assert exc.value.code == 2


def test_failing_suite_exits_1(tmp_path, capsys):
    # a single sample cannot produce a finite CI, so the mean check fails
    code = cli.main(["verify-mean", "--n", "2", "--t", "1", "--dt", "0.05", "--samples", "1", "--bootstrap", "2",
                     "--ladder-samples", "0", "--out-dir", str(tmp_path)])
    assert code == 1
    assert "failing residuals" in capsys.readouterr().err


def test_config_file_and_environment_precedence(tmp_path, monkeypatch):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# comment\nn = 2\nsamples=12\nbootstrap = 10\nthreads = 2\ndt=0.05\nladder-samples=0\n")
    monkeypatch.setenv("POLYMER_OUT_DIR", str(tmp_path / "from_env"))
    monkeypatch.setenv("POLYMER_THREADS", "3")
    args = cli.build_parser().parse_args(["simulate", "--config", str(cfg), "--samples", "20"])
    settings = cli.resolve_settings(args)
    assert settings["n"] == 2
    assert settings["samples"] == 20
    assert settings["threads"] == 3
    assert settings["out_dir"] == str(tmp_path / "from_env")
    assert cli.main(["simulate", "--config", str(cfg)]) == 0
    assert (tmp_path / "from_env" / "samples.csv").exists()


def test_bad_config_file(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("colour = blue\n")
    assert cli.main(["simulate", "--config", str(cfg), "--out-dir", str(tmp_path)]) == 2
    cfg.write_text("just words\n")
    assert cli.main(["simulate", "--config", str(cfg), "--out-dir", str(tmp_path)]) == 2
    assert cli.main(["simulate", "--config", str(tmp_path / "missing"), "--out-dir", str(tmp_path)]) == 2


def test_exponents_command(tmp_path):
    code = cli.main(["exponents", "--n-list", "2,4,8,16", "--dt", "0.05", "--samples", "24", "--bootstrap", "20",
                     "--out-dir", str(tmp_path)])
    assert code in (0, 1)
    summary = json.load(open(tmp_path / "summary.json"))
    assert set(summary["fits"]) >= {"var_log_z", "annealed_abs_s0"}
    assert "slope_se" in summary["fits"]["var_log_z"]
    manifest = json.load(open(tmp_path / "manifest.json"))
    assert manifest["files"]["samples_n16.csv"]["rows"] == 24


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "stationary_polymer", "verify-mean", *FAST, "--out-dir",
                           str(tmp_path)], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert "[PASS] mean" in proc.stdout


def test_documented_verify_mean_invocation(tmp_path):
    code = cli.main(["verify-mean", "--theta", "1", "--n", "8", "--characteristic", "--A", "2", "--dt", "0.01",
                     "--samples", "2000", "--seed", "7", "--out-dir", str(tmp_path)])
    assert code == 0
    row = json.load(open(tmp_path / "summary.json"))["checks"]["mean"]
    assert row["passed"] and row["ci"][0] <= 0 <= row["ci"][1]
