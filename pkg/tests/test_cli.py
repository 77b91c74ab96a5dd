import json
import shutil
import subprocess

import numpy as np
import pytest

from _loops import resonant_system
from reset_verdict.cli import EXIT_HYPOTHESIS, EXIT_INPUT, EXIT_NOT_QS, EXIT_OK, main, round6
from reset_verdict.elements import gfore
from reset_verdict.lti import RationalTF
from reset_verdict.system import SystemDescription, demo_system

FAST_SCAN = ["--res", "30"]


def write_system(tmp_path, system, name="sys.json"):
    path = tmp_path / name
    path.write_text(system.to_json())
    return str(path)


def test_analyze_demo_markdown(capsys):
    assert main(["analyze", "--demo", "C1"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "| verdict | UBIBS_STABLE |" in out
    assert "| I3 | empty |" in out


def test_analyze_accepts_table_labels(capsys):
    assert main(["analyze", "--demo", "L3", "--json"]) == EXIT_OK
    assert json.loads(capsys.readouterr().out)["label"] == "C3"


def test_analyze_json_and_angles(tmp_path):
    out, angles = tmp_path / "rep.json", tmp_path / "angles.csv"
    assert main(["analyze", "--demo", "C2", "--json", "--out", str(out),
                 "--emit-angles", str(angles)]) == EXIT_OK
    rep = json.loads(out.read_text())
    assert rep["verdict"] == "UBIBS_STABLE" and rep["type_I"] is True
    rows = angles.read_text().splitlines()
    assert rows[0] == "omega_rad_s,theta_deg"
    w = np.array([float(r.split(",")[0]) for r in rows[1:]])
    th = np.array([float(r.split(",")[1]) for r in rows[1:]])
    assert np.all(np.diff(w) >= 0) and np.all(np.isfinite(th))


def test_analyze_not_quadratically_stable(tmp_path, capsys):
    path = write_system(tmp_path, resonant_system(1000.0))
    assert main(["analyze", "--input", path]) == EXIT_NOT_QS
    assert "NOT_QUADRATICALLY_STABLE" in capsys.readouterr().out


def test_analyze_hypothesis_failed(tmp_path):
    system = SystemDescription(RationalTF((10.0,), (-1.0, 1.0)), RationalTF.gain(1.0), gfore(1.0))
    assert main(["analyze", "--input", write_system(tmp_path, system)]) == EXIT_HYPOTHESIS


def test_analyze_rejects_linear_gamma(capsys):
    assert main(["analyze", "--demo", "C1", "--gamma", "1"]) == EXIT_INPUT
    assert "gamma" in capsys.readouterr().err


@pytest.mark.parametrize("payload,field", [
    ("{not json", "malformed JSON"),
    ('{"linear_controller": {"num": [1], "den": [1]}, "reset": {"kind": "GFORE", "omega_r": 1}}', "plant"),
    ('{"plant": {"num": [1], "den": "x"}, "linear_controller": {"num": [1], "den": [1]},'
     ' "reset": {"kind": "GFORE", "omega_r": 1}}', "plant.den"),
    ('{"plant": {"num": [1], "den": [1, 1]}, "linear_controller": {"num": [1], "den": [1]},'
     ' "reset": {"omega_r": 1}}', "reset"),
])
def test_malformed_input(tmp_path, capsys, payload, field):
    path = tmp_path / "bad.json"
    path.write_text(payload)
    assert main(["analyze", "--input", str(path)]) == EXIT_INPUT
    assert field in capsys.readouterr().err


def test_missing_input_file(capsys):
    assert main(["analyze", "--input", "/nonexistent/system.json"]) == EXIT_INPUT


def test_usage_error_exits_two():
    with pytest.raises(SystemExit) as exc:
        main(["analyze"])
    assert exc.value.code == 2


def test_system_json_round_trip(tmp_path):
    system = demo_system("C4")
    back = SystemDescription.from_json(system.to_json())
    assert back == system


def test_hbeta_scan_files(tmp_path):
    prefix = tmp_path / "c5"
    assert main(["hbeta-scan", "--demo", "C5", "--out", str(prefix)] + FAST_SCAN) == EXIT_OK
    summary = json.loads((tmp_path / "c5.json").read_text())
    assert summary["nonempty"] and summary["grid_shape"][1] == 30
    lo, hi = summary["ratio_interval_beta_pos"]
    assert lo == pytest.approx(2.25997, rel=1e-4) and hi == pytest.approx(8.69293, rel=1e-4)
    csv = (tmp_path / "c5.csv").read_text().splitlines()
    assert csv[0] == "beta,rho_prime,feasible"


def test_hbeta_scan_empty_region_warns(tmp_path, capsys):
    path = write_system(tmp_path, resonant_system(1000.0))
    assert main(["hbeta-scan", "--input", path] + FAST_SCAN) == EXIT_OK
    cap = capsys.readouterr()
    assert "warning" in cap.err
    assert json.loads(cap.out)["nonempty"] is False


def test_hbeta_scan_bad_box(capsys):
    assert main(["hbeta-scan", "--demo", "C1", "--beta-min", "1", "--beta-max", "0"]) == EXIT_INPUT


def test_simulate_csv(tmp_path):
    out = tmp_path / "step.csv"
    assert main(["simulate", "--demo", "C1", "--step", "--horizon", "0.05", "--out", str(out)]) == EXIT_OK
    lines = out.read_text().splitlines()
    assert lines[0] == "t,y,e,u_r,x_r,reset"
    flags = [int(x.rsplit(",", 1)[1]) for x in lines[1:]]
    assert sum(flags) >= 1


def test_simulate_json_and_summary(tmp_path, capsys):
    out = tmp_path / "sine.json"
    assert main(["simulate", "--demo", "C3", "--sine", "50", "--horizon", "0.04",
                 "--out", str(out)]) == EXIT_OK
    data = json.loads(out.read_text())
    assert len(data["reset_instants"]) >= 3
    assert main(["simulate", "--demo", "C3", "--horizon", "0.02"]) == EXIT_OK
    assert "resets:" in capsys.readouterr().out


def test_simulate_reference_requires_step(capsys):
    assert main(["simulate", "--demo", "C1", "--ramp", "--reference"]) == EXIT_INPUT
    assert main(["simulate", "--demo", "C1", "--reference", "--horizon", "0.01", "--csv"]) == EXIT_OK


def test_simulate_bad_horizon():
    assert main(["simulate", "--demo", "C1", "--horizon", "-1"]) == EXIT_INPUT


def test_output_is_deterministic(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for p in (a, b):
        assert main(["analyze", "--demo", "C5", "--json", "--out", str(p)]) == EXIT_OK
    assert a.read_text() == b.read_text()


def test_round6():
    assert round6({"x": [1.23456789, np.float64(2.0)], "y": None}) == {"x": [1.23457, 2.0], "y": None}
    assert round6(float("inf")) == "inf"


def test_demo_report(tmp_path):
    out = tmp_path / "demo.json"
    assert main(["demo", "--json", "--out", str(out), "--points", "2000"] + FAST_SCAN) == EXIT_OK
    rep = json.loads(out.read_text())
    assert [r["system"] for r in rep["systems"]] == ["C1", "C2", "C3", "C4", "C5"]
    assert all(r["verdict"] == "UBIBS_STABLE" and r["type"] == "I" for r in rep["systems"])
    assert all(r["cross_check"] == "consistent" for r in rep["systems"])
    assert rep["notes"]


@pytest.mark.skipif(shutil.which("reset-verdict") is None, reason="console script not installed")
def test_console_script():
    res = subprocess.run(["reset-verdict", "analyze", "--demo", "C1", "--json"],
                         capture_output=True, text=True, timeout=120)
    assert res.returncode == 0
    assert json.loads(res.stdout)["verdict"] == "UBIBS_STABLE"
