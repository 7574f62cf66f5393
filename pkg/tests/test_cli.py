"""Command line: config merging, outputs, exit codes."""

import json
import subprocess
import sys

import numpy as np
import pytest

from rrms.cli import EXIT_DIAGNOSTIC, EXIT_OK, EXIT_USAGE, main

RRT_FLAGS = ["--family", "k2", "--alpha", "0", "--fitness", "const:1"]


def run_cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


# -- usage errors ----------------------------------------------------------------


def test_no_subcommand(capsys):
    code, _, err = run_cli(capsys)
    assert code == EXIT_USAGE
    assert "a subcommand is required" in err


def test_unknown_flag(capsys):
    code, _, err = run_cli(capsys, "theory", "--bogus")
    assert code == EXIT_USAGE
    assert "error:" in err


def test_missing_family(capsys):
    code, _, err = run_cli(capsys, "theory")
    assert code == EXIT_USAGE
    assert "missing required field 'family'" in err


def test_bad_fitness_spec(capsys):
    code, _, err = run_cli(
        capsys, "theory", "--family", "k2", "--alpha", "0", "--fitness", "wat:1"
    )
    assert code == EXIT_USAGE
    assert "error:" in err


@pytest.mark.parametrize(
    "extra, message",
    [
        (["--n", "1", "--reps", "200"], "at least 2"),
        (["--n", "50", "--reps", "99"], "at least 100"),
        (["--n", "50", "--reps", "200", "--sampler", "coupled"],
         "sampler 'coupled' produces pairs; use the gap command for it"),
        (["--reps", "200"], "missing required field 'n'"),
    ],
)
def test_run_usage_errors(capsys, extra, message):
    code, _, err = run_cli(capsys, "run", *RRT_FLAGS, *extra)
    assert code == EXIT_USAGE
    assert message in err


def test_config_file_errors(tmp_path, capsys):
    missing = tmp_path / "nope.json"
    code, _, err = run_cli(capsys, "theory", "--config", str(missing))
    assert code == EXIT_USAGE and "cannot read config file" in err

    bad = tmp_path / "bad.json"
    bad.write_text("{nope")
    code, _, err = run_cli(capsys, "theory", "--config", str(bad))
    assert code == EXIT_USAGE and "not valid JSON" in err

    arr = tmp_path / "arr.json"
    arr.write_text("[1, 2]")
    code, _, err = run_cli(capsys, "theory", "--config", str(arr))
    assert code == EXIT_USAGE and "JSON object" in err

    unknown = tmp_path / "unknown.json"
    unknown.write_text(json.dumps({"family": {"kind": "k2"}, "grid": [2, 3]}))
    code, _, err = run_cli(capsys, "theory", "--config", str(unknown))
    assert code == EXIT_USAGE and "unknown config field 'grid'" in err

    floaty = tmp_path / "floaty.json"
    floaty.write_text(json.dumps(
        {"family": {"kind": "geometric_path", "p": 0.5}, "n": 5.5, "reps": 200}
    ))
    code, _, err = run_cli(capsys, "run", "--config", str(floaty))
    assert code == EXIT_USAGE and "must be an integer" in err


# -- theory ----------------------------------------------------------------------


def test_theory_geometric_path(tmp_path, capsys):
    out = tmp_path / "t"
    code, text, _ = run_cli(
        capsys, "theory", "--family", "geometric_path", "--p", "0.5",
        "--out", str(out),
    )
    assert code == EXIT_OK
    assert "mu          = 2" in text
    assert "sigma2      = 6" in text
    assert "moment hypotheses: satisfied" in text
    doc = json.loads((out / "summary.json").read_text())
    assert doc["command"] == "theory"
    assert doc["mu"] == 2.0 and doc["sigma2"] == 6.0
    assert doc["moments"] == {"e_w": 2.0, "e_w0": 2.0, "e_wd": 4.0, "e_wd2": 12.0}
    assert doc["moment_hypotheses"] is True
    assert doc["config"]["family"]["kind"] == "geometric_path"


def test_theory_custom_catalog(tmp_path, capsys):
    catalog = tmp_path / "cat.json"
    catalog.write_text(json.dumps({
        "blocks": [
            {"weight": 2.0, "pmf": [[0.0, 0.5], [1.0, 0.5]], "prob": 0.5},
            {"weight": 1.0, "pmf": [[2.0, 1.0]], "prob": 0.5},
        ],
        "initial": {"weight": 1.0, "pmf": [[0.0, 1.0]]},
    }))
    code, text, _ = run_cli(
        capsys, "theory", "--family", "custom_discrete", "--catalog", str(catalog)
    )
    assert code == EXIT_OK
    assert "E[W]        = 1.5" in text


# -- exact -----------------------------------------------------------------------


def test_exact_uniform_attachment(tmp_path, capsys):
    out = tmp_path / "e"
    code, text, _ = run_cli(
        capsys, "exact", *RRT_FLAGS, "--n", "4", "--out", str(out)
    )
    assert code == EXIT_OK
    assert "11/24" in text
    assert "[pass]" in text
    pmf_csv = (out / "pmf.csv").read_text()
    assert pmf_csv.splitlines()[0] == "depth,prob"
    assert "11/24" in pmf_csv
    doc = json.loads((out / "summary.json").read_text())
    assert doc["tv_distance"] == 0.0
    assert doc["verdicts"] == {"exact": "pass"}


def test_exact_cap_and_family_errors(capsys):
    code, _, err = run_cli(capsys, "exact", *RRT_FLAGS, "--n", "7")
    assert code == EXIT_USAGE and "exceeds the enumeration cap" in err
    code, _, err = run_cli(
        capsys, "exact", "--family", "uniform_segment", "--lambda", "1.0",
        "--n", "3",
    )
    assert code == EXIT_USAGE and "exact mode" in err


# -- run -------------------------------------------------------------------------


def test_run_writes_summary_and_samples(tmp_path, capsys):
    # a horizon this short has not converged to the limit shape yet, so the
    # KS tolerance comes from the config file; the default is for large n
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"ks_max": 0.3}))
    out = tmp_path / "r"
    code, text, _ = run_cli(
        capsys, "run", "--family", "uniform_segment", "--lambda", "1.0",
        "--n", "2000", "--reps", "1000", "--seed", "11",
        "--config", str(cfg), "--out", str(out),
    )
    assert code == EXIT_OK
    assert text.count("[pass]") == 2

    doc = json.loads((out / "summary.json").read_text())
    assert doc["command"] == "run"
    assert doc["verdicts"] == {"lln": "pass", "clt": "pass"}
    assert set(doc["config"]) == {
        "family", "n", "reps", "seed", "sampler", "lln_rtol", "ks_max"
    }
    assert doc["config"]["n"] == 2000 and doc["config"]["reps"] == 1000
    assert doc["config"]["sampler"] == "direct"
    assert doc["config"]["ks_max"] == 0.3
    assert doc["lln"]["mu_theory"] == 1.0
    assert doc["clt"]["sigma2_theory"] == 2.0
    assert 0.0 <= doc["clt"]["ks_statistic"] <= 0.3

    lines = (out / "samples.csv").read_text().splitlines()
    assert lines[0] == "rep,value"
    assert len(lines) == 1001
    values = np.array([float(line.split(",")[1]) for line in lines[1:]])
    assert doc["summary"]["count"] == 1000
    assert doc["summary"]["mean"] == pytest.approx(values.mean(), rel=1e-15)


def test_run_diagnostic_failure_exits_2(tmp_path, capsys):
    cfg = tmp_path / "strict.json"
    cfg.write_text(json.dumps({"lln_rtol": 1e-3, "ks_max": 0.5}))
    out = tmp_path / "r"
    code, text, _ = run_cli(
        capsys, "run", "--family", "uniform_segment", "--lambda", "1.0",
        "--n", "2000", "--reps", "1000", "--seed", "11",
        "--config", str(cfg), "--out", str(out),
    )
    assert code == EXIT_DIAGNOSTIC
    assert "[FAIL]" in text
    doc = json.loads((out / "summary.json").read_text())
    assert doc["verdicts"]["lln"] == "fail"


def test_run_config_with_flag_override(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({
        "family": {"kind": "geometric_path", "p": 0.5},
        "n": 500,
        "reps": 150,
        "seed": 3,
        "lln_rtol": 0.5,
        "ks_max": 0.5,
    }))
    out = tmp_path / "o"
    code, _, _ = run_cli(
        capsys, "run", "--config", str(cfg), "--reps", "200", "--out", str(out)
    )
    assert code == EXIT_OK
    doc = json.loads((out / "summary.json").read_text())
    assert doc["config"]["reps"] == 200  # flag beat the config file
    assert doc["config"]["n"] == 500
    assert doc["config"]["lln_rtol"] == 0.5
    assert len((out / "samples.csv").read_text().splitlines()) == 201


def test_run_family_flag_replaces_config_family(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({
        "family": {"kind": "geometric_path", "p": 0.5},
        "n": 300, "reps": 150, "lln_rtol": 0.9, "ks_max": 0.9,
    }))
    out = tmp_path / "o"
    code, _, _ = run_cli(
        capsys, "run", "--config", str(cfg), "--family", "uniform_segment",
        "--lambda", "2.0", "--out", str(out),
    )
    assert code == EXIT_OK
    doc = json.loads((out / "summary.json").read_text())
    assert doc["config"]["family"]["kind"] == "uniform_segment"


def test_run_worker_count_keeps_outputs_identical(tmp_path, capsys):
    def run_with(workers, sub):
        out = tmp_path / sub
        code, _, _ = run_cli(
            capsys, "run", "--family", "geometric_path", "--p", "0.5",
            "--n", "300", "--reps", "600", "--seed", "21",
            "--workers", str(workers), "--out", str(out),
            "--config", str(loose),
        )
        assert code == EXIT_OK
        return (out / "samples.csv").read_bytes(), (out / "summary.json").read_bytes()

    loose = tmp_path / "loose.json"
    loose.write_text(json.dumps({
        "family": {"kind": "geometric_path", "p": 0.5},
        "lln_rtol": 0.5, "ks_max": 0.5,
    }))
    assert run_with(1, "w1") == run_with(8, "w8")


# -- gap -------------------------------------------------------------------------


def test_gap_table_and_outputs(tmp_path, capsys):
    out = tmp_path / "g"
    code, text, _ = run_cli(
        capsys, "gap", "--family", "geometric_path", "--p", "0.5",
        "--grid", "10,100", "--reps", "500", "--epsilon", "2.0",
        "--seed", "1", "--out", str(out),
    )
    assert code == EXIT_OK
    assert "n=10 " in text and "n=100 " in text
    assert "nonincreasing within 2 se [pass]" in text

    lines = (out / "gap.csv").read_text().splitlines()
    assert lines[0] == "n,rep,y_sum,x_sum,gap_over_sqrtlog"
    assert len(lines) == 1 + 2 * 500
    doc = json.loads((out / "summary.json").read_text())
    assert [row["n"] for row in doc["table"]] == [10, 100]
    for row in doc["table"]:
        assert set(row) == {"n", "exceedance", "se", "reps"}
        assert row["reps"] == 500
    assert doc["verdicts"] == {"gap": "pass"}


@pytest.mark.parametrize(
    "extra, message",
    [
        (["--grid", "10", "--epsilon", "1.0"], "at least 2 values"),
        (["--grid", "100,10", "--epsilon", "1.0"], "strictly ascending"),
        (["--grid", "a,b", "--epsilon", "1.0"], "comma-separated integers"),
        (["--grid", "1,10", "--epsilon", "1.0"], "integers at least 2"),
        (["--grid", "10,100"], "missing required field 'epsilon'"),
        (["--grid", "10,100", "--epsilon", "0"], "must be positive"),
        (["--grid", "10,100", "--epsilon", "1.0", "--reps", "499"], "at least 500"),
    ],
)
def test_gap_usage_errors(capsys, extra, message):
    code, _, err = run_cli(
        capsys, "gap", "--family", "geometric_path", "--p", "0.5", *extra
    )
    assert code == EXIT_USAGE
    assert message in err


# -- installed entry points ------------------------------------------------------


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "rrms", "theory", *RRT_FLAGS],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0
    assert "mu          = 1" in proc.stdout
