from __future__ import annotations

import csv
import json
import math

import numpy as np
import pytest

from aeconv.cli import main, read_config
from aeconv.errors import ConfigInvalid


def run(argv, capsys):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_power_converges(tmp_path, capsys):
    code, out, _ = run(["analyze", "--mode", "kappa", "--input", "power", "--phi", "arctan",
                        "--out", tmp_path], capsys)
    assert code == 0
    report = json.loads((tmp_path / "verdict.json").read_text())
    assert report["schema"] == 1 and report["verdict"] == "CONVERGES"
    assert report["config"]["phi"] == "arctan" and "version" in report and "interpretation" in report
    prof = [float(r[1]) for r in read_rows(tmp_path / "tail_profile.csv")[1:]]
    assert all(b < a for a, b in zip(prof, prof[1:]))
    rows = read_rows(tmp_path / "table.csv")
    assert rows[0] == ["n", "m", "value", "std_err"]
    assert len(rows) - 1 == sum(3 * n for n in (4, 8, 16, 32, 64, 128))


def test_typewriter_diverges(tmp_path, capsys):
    code, _, _ = run(["analyze", "--mode", "kappa", "--input", "typewriter", "--out", tmp_path], capsys)
    assert code == 1
    prof = [float(r[1]) for r in read_rows(tmp_path / "tail_profile.csv")[1:]]
    assert all(abs(s - math.pi / 4) < 1e-3 for s in prof)


def test_typewriter_short_window_warns(tmp_path, capsys):
    code, out, _ = run(["analyze", "--input", "typewriter", "--m-cap", "n+1", "--out", tmp_path], capsys)
    assert code == 2
    report = json.loads((tmp_path / "verdict.json").read_text())
    assert any("still rising" in w for w in report["warnings"])
    assert "still rising" in out


def test_config_file_and_override(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# power run\ninput = power\nmode = kappa\nn-grid = 4,8,16,32\neps_pass = 0.05\n")
    assert read_config(cfg)["n_grid"] == (4, 8, 16, 32)
    code, _, _ = run(["analyze", "--config", cfg, "--out", tmp_path / "a"], capsys)
    assert code == 0
    rep = json.loads((tmp_path / "a" / "verdict.json").read_text())
    assert rep["n_grid"] == [4, 8, 16, 32] and rep["thresholds"]["eps_pass"] == 0.05
    code, _, _ = run(["analyze", "--config", cfg, "--input", "typewriter", "--out", tmp_path / "b"], capsys)
    assert code == 1


def test_config_errors(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text("input = power\ncolour = blue\n")
    code, _, err = run(["analyze", "--config", bad], capsys)
    assert code == 3 and "colour" in err
    bad.write_text("input = power\nseed = many\n")
    assert run(["analyze", "--config", bad], capsys)[0] == 3
    with pytest.raises(ConfigInvalid):
        bad.write_text("no equals sign\n")
        read_config(bad)
    assert run(["analyze", "--config", tmp_path / "missing.cfg"], capsys)[0] == 4


@pytest.mark.parametrize("argv,field", [
    (["--eps-pass", "0.3"], "eps_pass"),
    (["--n-grid", "8,4,16,32"], "n_grid"),
    (["--n-grid", "4,8"], "n_grid"),
    (["--phi", "cosh"], "phi"),
    (["--m-cap", "sqrt"], "m_cap"),
])
def test_invalid_flags_name_field(argv, field, capsys):
    code, _, err = run(["analyze", "--input", "power"] + argv, capsys)
    assert code == 3
    assert json.loads(err)["field"] == field


def test_argparse_errors_exit_3(capsys):
    assert run(["analyze", "--mode", "nonsense", "--input", "power"], capsys)[0] == 3
    assert run(["analyze"], capsys)[0] == 3


def test_input_not_found(capsys):
    code, _, err = run(["analyze", "--input", "no-such-entry"], capsys)
    assert code == 4 and json.loads(err)["error"] == "INPUT_NOT_FOUND"


def test_sampled_csv_input(tmp_path, capsys):
    x = (np.arange(50) + 0.5) / 50
    K = 512
    path = tmp_path / "seq.csv"
    with open(path, "w") as fh:
        fh.write("point,weight," + ",".join(f"f_{k}" for k in range(1, K + 1)) + "\n")
        for xi in x:
            fh.write(f"{float(xi)!r},0.02," + ",".join(repr(float(xi) / k) for k in range(1, K + 1)) + "\n")
    code, _, _ = run(["analyze", "--input", path, "--out", tmp_path / "o"], capsys)
    assert code == 0
    code, _, err = run(["analyze", "--input", path, "--m-cap", "8n"], capsys)
    assert code == 3 and "m_cap" in err


def test_fourier_command(tmp_path, capsys):
    code, _, _ = run(["fourier", "--g", "square-wave", "--n-grid", "4,8,16,32,64",
                      "--eps-pass", "0.05", "--out", tmp_path], capsys)
    assert code == 0
    rep = json.loads((tmp_path / "verdict.json").read_text())
    assert set(rep["antonov"]) == {"printed", "conventional"}
    assert rep["antonov"]["printed"] != rep["antonov"]["conventional"]
    assert rep["method_agreement"] < 1e-6
    assert read_rows(tmp_path / "partial_sums.csv")[0] == ["x", "s_64_conv", "s_64_coef"]


def test_fourier_needs_periodic(capsys):
    assert run(["fourier", "--g", "power"], capsys)[0] == 3


def test_spaces_command(tmp_path, capsys):
    code, _, _ = run(["spaces", "--input", "recip", "--N-max", "512", "--out", tmp_path], capsys)
    assert code == 0
    rep = json.loads((tmp_path / "verdict.json").read_text())
    assert rep["gls_bound_max"] <= 1 + 1e-12
    assert read_rows(tmp_path / "psi.csv")[0] == ["p", "psi"]


@pytest.mark.parametrize("mode,expected", [("lp", 0), ("in-prob", 0), ("gamma", 0), ("lambda", 0)])
def test_other_modes_on_recip(mode, expected, tmp_path, capsys):
    assert run(["analyze", "--input", "recip", "--mode", mode, "--out", tmp_path], capsys)[0] == expected


def test_moment_mode(tmp_path, capsys):
    assert run(["analyze", "--input", "power", "--mode", "moment", "--phi", "power:2"], capsys)[0] == 0
    assert run(["analyze", "--input", "power", "--mode", "moment"], capsys)[0] == 3


def test_tau_needs_vectors(capsys):
    assert run(["analyze", "--input", "power", "--mode", "tau"], capsys)[0] == 3


def test_corpus_and_trial_commands(capsys):
    code, out, _ = run(["corpus", "list"], capsys)
    assert code == 0 and "typewriter" in out
    code, out, _ = run(["corpus", "describe", "power"], capsys)
    assert code == 0 and json.loads(out)["expected_verdict"] == "CONVERGES"
    assert run(["corpus", "describe", "zzz"], capsys)[0] == 4
    code, out, _ = run(["validate-trial", "ratio2"], capsys)
    assert code == 0 and json.loads(out)["passed"]


def test_reports_are_byte_identical(tmp_path, capsys):
    args = ["analyze", "--input", "random-decay", "--paths", "2000", "--seed", "9"]
    run(args + ["--out", tmp_path / "a", "--workers", "1"], capsys)
    run(args + ["--out", tmp_path / "b", "--workers", "3"], capsys)
    for name in ("verdict.json", "table.csv", "tail_profile.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
