import json
import subprocess
import sys

import pytest

from cavitycool.cli import main

SOLVE = """
scenario: inside
position: 247.565 um
solve:
  observables: [friction, diffusion, temperature]
"""


def write(tmp_path, text, name="run.yaml"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_solve_csv(tmp_path, capsys):
    assert main(["solve", "--config", write(tmp_path, SOLVE)]) == 0
    out = capsys.readouterr().out
    assert "# kappa_convention: kappa = HWHM" in out
    assert "# diffusion_model:" in out
    header = [l for l in out.splitlines() if not l.startswith("#")][0]
    assert header.startswith("friction [N s/m],diffusion [kg^2 m^2 s^-3],temperature [K]")


def test_scan_json_to_file(tmp_path):
    cfg = SOLVE + "sweep:\n  axis: power\n  lo: 1 pW\n  hi: 2 pW\n  points: 3\n  observables: [friction]\n"
    out = tmp_path / "scan.json"
    assert main(["scan", "--config", write(tmp_path, cfg), "--format", "json", "--output", str(out),
                 "--threads", "2"]) == 0
    doc = json.loads(out.read_text())
    assert doc["metadata"]["command"] == "scan"
    names = [c["name"] for c in doc["columns"]]
    assert names[:2] == ["power", "friction"] and "friction_per_power" in names
    fpp = [r[names.index("friction_per_power")] for r in doc["rows"]]
    assert max(fpp) == pytest.approx(min(fpp), rel=1e-6)


def test_optimize(tmp_path, capsys):
    cfg = ("scenario: inside\noptimize:\n  axes: [position]\n  objective: -friction\n"
           "  bounds: {position: [247.3 um, 247.7 um]}\n")
    assert main(["optimize", "--config", write(tmp_path, cfg)]) == 0
    assert "position [m],objective" in capsys.readouterr().out


def test_saturation_exit_code(tmp_path, capsys):
    assert main(["solve", "--config", write(tmp_path, SOLVE + "power: 20 pW\n")]) == 2
    assert "reduce the pump power" in capsys.readouterr().err


def test_heating_exit_code(tmp_path, capsys):
    assert main(["solve", "--config", write(tmp_path, SOLVE + "detuning: 2.6 kappa\n")]) == 2
    assert "heating" in capsys.readouterr().err


def test_config_error_exit_code(tmp_path, capsys):
    assert main(["solve", "--config", write(tmp_path, "power: 2\n")]) == 1
    assert "line 1" in capsys.readouterr().err


def test_usage_errors(tmp_path):
    assert main(["levitate"]) == 1
    assert main(["scan", "--config", write(tmp_path, SOLVE)]) == 1  # no sweep block
    assert main(["solve", "--config", str(tmp_path / "missing.yaml")]) == 1


def test_console_entry():
    r = subprocess.run([sys.executable, "-m", "cavitycool.cli", "reproduce", "--help"], capture_output=True,
                       text=True)
    assert r.returncode == 0 and "headline-inside" in r.stdout
