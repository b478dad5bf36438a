import csv
import io
import json
import os
import subprocess

import pytest

CLI = os.environ.get("SUBSPACE_PERTURB_CLI", "subspace-perturb")


def run(*args, cwd=None):
    return subprocess.run([CLI, *map(str, args)], capture_output=True, text=True, cwd=cwd)


def write_config(tmp_path, doc, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return path


def write_matrix(tmp_path, name, rows):
    path = tmp_path / name
    lines = [f"{len(rows)} {len(rows[0])}"] + [" ".join(repr(float(v)) for v in r) for r in rows]
    path.write_text("\n".join(lines) + "\n")
    return path


def test_norm_suite_exit_zero_and_csv_header(tmp_path):
    cfg = write_config(tmp_path, {"experiment": "norm_suite", "replicates": 5, "threads": 1})
    res = run("norm_suite", "--config", cfg)
    assert res.returncode == 0, res.stderr
    rows = list(csv.reader(io.StringIO(res.stdout)))
    assert rows[0] == ["section", "group", "replicate", "seed", "status", "metric", "value"]
    assert rows[1][0] == "meta"
    assert "0 violations" in res.stderr


def test_runs_without_config(tmp_path):
    res = run("entrywise", "--replicates", 3, "--format", "json")
    assert res.returncode == 0, res.stderr
    doc = json.loads(res.stdout)
    assert doc["experiment"] == "entrywise"
    assert doc["replicates"] == 3
    assert doc["violation_count"] == 0


def test_unknown_config_key_is_usage_error(tmp_path):
    cfg = write_config(tmp_path, {"experiment": "norm_suite", "replicate": 5})
    res = run("norm_suite", "--config", cfg)
    assert res.returncode == 1
    assert "unknown key" in res.stderr


def test_unknown_parameter_key_is_usage_error(tmp_path):
    cfg = write_config(tmp_path, {"experiment": "omnibus", "parameters": {"sizes": [50], "n": 3}})
    assert run("omnibus", "--config", cfg).returncode == 1


def test_experiment_mismatch_is_usage_error(tmp_path):
    cfg = write_config(tmp_path, {"experiment": "covariance"})
    assert run("omnibus", "--config", cfg).returncode == 1


def test_invalid_values_are_usage_errors(tmp_path):
    cfg = write_config(tmp_path, {"experiment": "omnibus", "parameters": {"rho": [2.0]}})
    assert run("omnibus", "--config", cfg).returncode == 1
    assert run("entrywise", "--replicates", 0).returncode == 1


def test_bad_flags_are_usage_errors(tmp_path):
    assert run("norm_suite", "--bogus").returncode == 1
    assert run("norm_suite", "--format", "xml").returncode == 1
    assert run("norm_suite", "--config", tmp_path / "missing.json").returncode == 1
    assert run().returncode == 1
    assert run("nonsense").returncode == 1


def test_help_exits_zero():
    assert run("--help").returncode == 0


def test_out_file_and_seed_override(tmp_path):
    out = tmp_path / "report.json"
    res = run("norm_suite", "--replicates", 4, "--seed", 99, "--out", out, "--format", "json")
    assert res.returncode == 0, res.stderr
    assert res.stdout == ""
    doc = json.loads(out.read_text())
    assert doc["base_seed"] == 99
    assert len([r for r in doc["rows"] if r["group"] == "norms"]) == 4


def test_rerun_is_byte_identical(tmp_path):
    cfg = write_config(
        tmp_path,
        {
            "experiment": "decomposition_suite",
            "replicates": 4,
            "parameters": {"shapes": [[20, 15]]},
        },
    )
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run("decomposition_suite", "--config", cfg, "--out", a).returncode == 0
    assert run("decomposition_suite", "--config", cfg, "--out", b, "--threads", 3).returncode == 0
    assert a.read_bytes() == b.read_bytes()


def test_csv_values_round_trip_seventeen_digits(tmp_path):
    res = run("norm_suite", "--replicates", 2)
    for row in list(csv.reader(io.StringIO(res.stdout)))[1:]:
        if row[5] == "worst_relative_excess" and row[6] not in ("0",):
            value = float(row[6])
            assert repr(value) == row[6] or float(repr(value)) == value


def test_norms_subcommand(tmp_path):
    m = write_matrix(tmp_path, "a.txt", [[1, 1], [0, 1]])
    res = run("norms", "--matrix", m)
    assert res.returncode == 0, res.stderr
    values = dict(list(csv.reader(io.StringIO(res.stdout)))[1:])
    assert float(values["two_to_inf"]) == pytest.approx(2**0.5, abs=1e-15)
    assert float(values["max"]) == 1.0
    assert float(values["frobenius"]) == pytest.approx(3**0.5, abs=1e-15)

    js = run("norms", "--matrix", m, "--format", "json")
    assert json.loads(js.stdout)["rows"] == 2


def test_norms_rejects_malformed_matrix(tmp_path):
    bad = tmp_path / "bad.txt"
    bad.write_text("2 2\n1 2 3\n")
    assert run("norms", "--matrix", bad).returncode == 1


def test_align_subcommand(tmp_path):
    u = write_matrix(tmp_path, "u.txt", [[1], [0]])
    uhat = write_matrix(tmp_path, "uhat.txt", [[-1], [0]])
    res = run("align", "--u", u, "--uhat", uhat, "--format", "json")
    assert res.returncode == 0, res.stderr
    doc = json.loads(res.stdout)
    assert doc["w[0,0]"] == -1.0
    assert doc["residual_frobenius"] == 0.0
    assert doc["sin_theta_spectral"] == 0.0


def test_align_rejects_non_orthonormal(tmp_path):
    u = write_matrix(tmp_path, "u.txt", [[1], [1]])
    uhat = write_matrix(tmp_path, "uhat.txt", [[1], [0]])
    assert run("align", "--u", u, "--uhat", uhat).returncode == 1
