import json
import math
import subprocess
import sys

import pytest

from arakelov import cli
from arakelov.elliptic import delta_closed_form, log_s_closed_form, log_t_closed_form
from arakelov.surface import PeriodData


def run(argv, capsys):
    code = cli.main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def test_periods_lemniscatic(capsys, tmp_path):
    out_file = tmp_path / "periods.json"
    code, out, _ = run(["periods", "--coeffs", "1,0,-1,0", "--format", "structured", "-o", str(out_file)], capsys)
    assert code == 0
    doc = json.loads(out)
    tau = doc["tau"][0][0]
    assert abs(complex(tau["re"], tau["im"]) - 1j) < 1e-10
    assert doc["symmetry_residual"] <= 1e-8
    pd = PeriodData.from_json(out_file.read_text())
    assert abs(pd.tau.tau[0, 0] - 1j) < 1e-10


def test_periods_curve_file(capsys, tmp_path):
    path = tmp_path / "curve.json"
    path.write_text(json.dumps({"f_coeffs": ["4", "20", "-8", "-39", "2", "17", "4", "0"]}))
    code, out, _ = run(["periods", "--curve", str(path)], capsys)
    assert code == 0
    assert "genus 3" in out and "symmetry residual" in out


def test_malformed_coefficients(capsys):
    code, _, err = run(["periods", "--coeffs", "1,x,3"], capsys)
    assert code == 2
    assert "--coeffs" in err


def test_singular_curve_reports_error(capsys):
    code, _, err = run(["periods", "--coeffs", "1,-2,1,0"], capsys)
    assert code == 2 and "repeated root" in err


def test_theta_command(capsys):
    code, out, _ = run(["theta", "--coeffs", "1,0,-1,0", "--z", "0", "--format", "structured"], capsys)
    assert code == 0
    doc = json.loads(out)
    assert abs(doc["theta"]["re"] - 1.0864348112133080) < 1e-10
    code, out, _ = run(["theta", "--coeffs", "1,0,-1,0", "--z", "0", "--char", "1/2;1/2", "--format",
                        "structured"], capsys)
    assert code == 0 and abs(complex(json.loads(out)["theta"]["re"])) < 1e-12


def test_theta_wrong_dimension(capsys):
    code, _, err = run(["theta", "--coeffs", "1,0,-1,0", "--z", "0,0"], capsys)
    assert code == 2 and "--z" in err


def test_green_command(capsys):
    base = ["green", "--coeffs", "1,0,0,0,0,-1", "--log-s", "0.75", "--format", "structured"]
    code, out, _ = run(base + ["--p", "0.3+0.4i", "--q=-0.5:-1"], capsys)
    assert code == 0
    a = json.loads(out)["log_G"]
    code, out, _ = run(base + ["--p=-0.5:-1", "--q", "0.3+0.4i"], capsys)
    assert abs(json.loads(out)["log_G"] - a) <= 1e-6
    code, out, _ = run(base + ["--p", "W0", "--q", "W2"], capsys)
    doc = json.loads(out)
    assert code == 0 and set(doc["routes"]) >= {"series", "richardson"}
    code, _, err = run(base + ["--p", "W9", "--q", "W2"], capsys)
    assert code == 2 and "--p" in err


def test_quad_depth_too_small(capsys):
    code, _, err = run(["invariants", "--coeffs", "1,0,-1,0", "--quad-depth", "1"], capsys)
    assert code == 1
    assert "compute_s" in err and "not converged" in err


def test_invariants_genus_one_closed_forms(capsys):
    code, out, _ = run(["invariants", "--coeffs", "1,0,-1,0", "--format", "structured"], capsys)
    assert code == 0
    doc = json.loads(out)
    cf = doc["closed_form"]
    assert abs(cf["log_S"] - log_s_closed_form(1j)) < 1e-9
    assert abs(doc["log_S"]["value"] - cf["log_S"]) <= 1e-4
    assert abs(doc["log_T"]["modular"] - log_t_closed_form(1j)) <= 1e-8
    assert abs(doc["delta"] - delta_closed_form(1j)) <= 1e-4
    assert all(abs(r["faltings"]) <= 1e-3 and abs(r["guardia"]) <= 1e-3 for r in doc["residuals"])
    assert "timings" not in out


def test_human_output_has_timings_and_table(capsys):
    code, out, _ = run(["invariants", "--coeffs", "1,0,-1,0", "--log-s", "0.2636720702489180"], capsys)
    assert code == 0
    assert "closed forms (genus 1)" in out and "timings:" in out


def test_structured_output_is_deterministic(capsys):
    argv = ["invariants", "--coeffs", "1,0,0,0,0,-1", "--log-s", "0.75", "--seed", "3", "--format", "structured"]
    _, a, _ = run(argv, capsys)
    _, b, _ = run(argv, capsys)
    assert a == b
    assert json.loads(a)["config"]["seed"] == 3


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "arakelov", "periods", "--coeffs", "1,0,-1,0"],
                          capture_output=True, text=True, timeout=120)
    assert proc.returncode == 0 and "genus 1" in proc.stdout


def test_missing_input_source(capsys):
    with pytest.raises(SystemExit):
        cli.main(["periods"])
