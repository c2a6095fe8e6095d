import csv
import io
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from billiard_twist.billiard_map import PhasePoint, to_cartesian
from billiard_twist.cli import main, parse_grid, portrait_data
from billiard_twist.errors import InvalidParameterError
from billiard_twist.formulas import eh_shift_tau1, rho1
from billiard_twist.normal_form import analyze
from billiard_twist.tables import asymmetric_lemon, asymmetric_lemon_resonant_B, ellipse


def exit_code(argv):
    try:
        return main(list(argv))
    except SystemExit as exc:  # argparse usage errors
        return exc.code


def run(capsys, *argv):
    code = exit_code(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_analyze_example(capsys):
    code, out, _ = run(capsys, "analyze", "--example", "asymmetric-lemon", "--r", "1", "--R", "2", "--B", "0.5")
    assert code == 0
    rep = json.loads(out)
    assert rep["schema_version"] == 1
    assert rep["normal_form"]["map"] == "F2"
    assert rep["normal_form"]["tau1"] == pytest.approx(0.1875, abs=1e-12)
    assert rep["closed_form"]["tau1"] == pytest.approx(0.1875, abs=1e-12)
    assert abs(rep["residuals"]["tau2"]) < 1e-9
    assert rep["stability"]["moser_stable"] is True


@pytest.mark.parametrize(
    "argv,tau1",
    [(["--example", "lemon", "--L", "0.5"], 0.125), (["--example", "ellipse", "--b", "0.6"], 0.3)],
)
def test_analyze_symmetric_examples(capsys, argv, tau1):
    code, out, _ = run(capsys, "analyze", *argv)
    assert code == 0
    rep = json.loads(out)
    assert rep["normal_form"]["tau1"] == pytest.approx(tau1, abs=1e-12)
    assert rep["normal_form"]["verdict"]
    assert rep["stability"]["moser_stable"] is True


def test_analyze_config_file(capsys, tmp_path):
    cfg = tmp_path / "table.json"
    cfg.write_text(json.dumps({"L": 0.6, "left": {"named": {"kind": "circle", "params": [1.0]}}, "right": "same"}))
    out = tmp_path / "report.json"
    code, _, _ = run(capsys, "analyze", "--config", str(cfg), "--out", str(out))
    assert code == 0
    rep = json.loads(out.read_text())
    assert rep["normal_form"]["tau1"] == pytest.approx(0.125, abs=1e-12)


def test_analyze_resonant_lemon_is_refused(capsys):
    code, out, _ = run(capsys, "analyze", "--example", "lemon", "--L", "1")
    assert code == 2
    rep = json.loads(out)
    assert rep["normal_form"]["verdict"] == "not_locally_analytically_integrable"
    assert "refusal" in rep


def test_analyze_hyperbolic_is_refused(capsys):
    code, out, _ = run(capsys, "analyze", "--example", "lemon", "--L", "2.5")
    assert code == 2
    assert json.loads(out)["stability"]["class"] == "hyperbolic"


@pytest.mark.parametrize(
    "argv",
    [
        ["analyze"],
        ["analyze", "--example", "ellipse"],
        ["analyze", "--example", "ellipse", "--b", "1.5"],
        ["analyze", "--example", "nonexistent"],
        ["sweep", "--example", "lemon", "--grid", "L=0.2:0.3:0"],
        ["sweep", "--example", "lemon", "--grid", "b=0.2:0.3:3"],
        ["frobnicate"],
    ],
)
def test_bad_input_exits_one(capsys, argv):
    assert exit_code(argv) == 1


def test_parse_grid():
    assert parse_grid("L=0.2:0.4:3") == ("L", pytest.approx([0.2, 0.3, 0.4]))
    assert parse_grid("s=1,2.5") == ("s", [1.0, 2.5])
    for bad in ("L", "L=1:2", "L=a,b", "L=0:1:0"):
        with pytest.raises(InvalidParameterError):
            parse_grid(bad)


def sweep_rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_lemon_sweep_has_constant_tau1(capsys):
    code, out, _ = run(capsys, "sweep", "--example", "lemon", "--grid", "L=0.1:1.9:19")
    assert code == 0
    rows = sweep_rows(out)
    assert len(rows) == 19
    for row in rows:
        if row["status"] == "ok":
            assert float(row["tau1_pipeline"]) == pytest.approx(0.125, abs=1e-12)
    assert {r["status"] for r in rows} >= {"ok"}
    assert next(r for r in rows if abs(float(r["L"]) - 1) < 1e-12)["status"] in ("pole", "resonance")


def test_eh_shift_sweep_finds_tau1_zero(capsys):
    a = 2.0
    s_zero = rho1(a) * (a - 1 / a)
    code, out, _ = run(capsys, "sweep", "--example", "eh-lens-shift", "--a", "2", "--grid", "s=0.05:1.45:29")
    assert code == 0
    rows = sweep_rows(out)
    s = np.array([float(r["s"]) for r in rows])
    tau1 = np.array([float(r["tau1_pipeline"]) for r in rows])
    np.testing.assert_allclose(tau1, [eh_shift_tau1(a, x) for x in s], atol=1e-11)
    crossing = np.flatnonzero(np.diff(np.sign(tau1)))
    assert len(crossing) == 1
    assert s[crossing[0]] < s_zero < s[crossing[0] + 1]


def test_two_dimensional_sweep(capsys):
    code, out, _ = run(
        capsys, "sweep", "--example", "half-ellipses", "--grid", "b0=0.3,0.5", "--grid", "b1=0.4,0.6,0.8"
    )
    assert code == 0
    assert len(sweep_rows(out)) == 6


def test_portrait_without_iterations_is_header_only(capsys):
    code, out, _ = run(capsys, "portrait", "--example", "ellipse", "--b", "0.6", "--iterations", "0")
    assert code == 0
    assert out.strip() == "orbit,n,s,u,left_domain"


def test_portrait_is_deterministic(tmp_path):
    args = ["portrait", "--example", "asymmetric-lemon", "--r", "1", "--R", "2", "--B", "0.5", "--ns", "3", "--iterations", "50"]
    outputs = []
    for i in range(2):
        csv_path, svg_path = tmp_path / f"p{i}.csv", tmp_path / f"p{i}.svg"
        assert main([*args, "--out-csv", str(csv_path), "--out-svg", str(svg_path)]) == 0
        outputs.append((csv_path.read_bytes(), svg_path.read_bytes()))
    assert outputs[0] == outputs[1]
    assert outputs[0][1].startswith(b"<?xml")


def test_ellipse_portrait_orbits_lie_on_invariant_curves():
    """Every F^2 orbit keeps its Joachimsthal constant: the curves have no thickness."""
    b = 0.6
    table = ellipse(b)
    orbits = portrait_data(table, 4, 2, 0.3, 0.1, 200)
    for orb in orbits:
        assert not orb["left_domain"]
        vals = []
        for s, u in zip(orb["s"], orb["u"]):
            x, v = to_cartesian(table, PhasePoint(0, float(s), float(u)))
            vals.append(abs((x[0] - b) * v[0] / b**2 + x[1] * v[1]))
        assert np.ptp(vals) < 1e-10


def test_ellipse_portrait_curves_are_thin():
    """Distance of each point from the midpoint of its angular neighbours, in normalized coordinates."""
    table = ellipse(0.6)
    eta = analyze(table).linear.eta
    for orb in portrait_data(table, 4, 2, 0.3, 0.1, 300):
        x, y = orb["s"] / eta, orb["u"] * eta
        r = np.hypot(x, y)[np.argsort(np.arctan2(y, x))]
        thickness = np.max(np.abs(r - 0.5 * (np.roll(r, 1) + np.roll(r, -1))))
        assert thickness <= 1e-3


def test_resonant_asymmetric_lemon_orbits_near_center_stay_bounded():
    r, R = 1.0, 2.0
    table = asymmetric_lemon(r, R, asymmetric_lemon_resonant_B(r, R, +1))
    orbits = portrait_data(table, 7, 7, 0.1, 0.1, 1000)
    bounded = [not o["left_domain"] and np.max(np.abs(o["s"]) + np.abs(o["u"])) < 0.5 for o in orbits]
    assert np.mean(bounded) > 0.9


def test_stable_asymmetric_lemon_portrait_stays_bounded():
    table = asymmetric_lemon(1.0, 2.0, 0.5)
    orbits = portrait_data(table, 5, 1, 0.05, 0.0, 500)
    assert all(not o["left_domain"] for o in orbits)
    for o in orbits:
        r0 = abs(o["s0"]) + 1e-3
        assert np.max(np.abs(o["s"]) + np.abs(o["u"])) < 10 * r0


def test_rotation_command(capsys, tmp_path):
    report = tmp_path / "rot.json"
    code, out, _ = run(capsys, "rotation", "--b", "0.6", "--t", "0.05,0.1", "--iterations", "5000", "--report", str(report))
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert [float(r["t"]) for r in rows] == [0.05, 0.1]
    for r in rows:
        assert abs(float(r["err_kn"])) < 1e-8
        assert abs(float(r["err_kt"])) < 1e-6
    rep = json.loads(report.read_text())
    assert rep["command"] == "rotation" and rep["t"] == 0.05
    expected = rep["derivatives"]["expected"]
    assert rep["derivatives"]["kolodziej"][2] == pytest.approx(expected[2], rel=1e-5)
    assert rep["derivatives"]["twist"][4] == pytest.approx(expected[4], rel=1e-3)
    code, out, _ = run(capsys, "rotation", "--b", "0.6", "--no-numeric", "--points", "3")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 3 and all(math.isnan(float(r["rho_num"])) for r in rows)


def test_verify_filter(capsys):
    code, out, _ = run(capsys, "verify", "--filter", "jets")
    assert code == 0
    assert "[PASS] criterion  3" in out
    assert exit_code(["verify", "--filter", "no-such-tag"]) == 1


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "billiard_twist", "analyze", "--example", "ellipse", "--b", "0.4"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["normal_form"]["tau1"] == pytest.approx(0.2, abs=1e-12)
