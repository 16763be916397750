import io
import json
import math
import subprocess
import sys

import pytest

from indefshoot.cli import COMMANDS, main
from indefshoot.config import KEYS


def run(argv):
    out = io.StringIO()
    code = main(argv, out=out)
    return code, out.getvalue()


@pytest.fixture
def cfg(tmp_path):
    def write(text):
        path = tmp_path / "cfg.yaml"
        path.write_text(text)
        return str(path)

    return write


FIG1_YAML = """\
length: 1.0
weight: sin(3*pi*x)
mu: 0.5
g: max(0, 100*s*atan(abs(s)))
d_max: 5.0
slope_grid: 500
"""


def test_repro_fig1(tmp_path):
    code, text = run(["repro-fig1", "--out", str(tmp_path)])
    assert code == 0
    assert "count=3" in text and text.rstrip().endswith("PASS")
    assert (tmp_path / "report.json").is_file()
    assert sorted(p.name for p in tmp_path.glob("solution_*.csv")) == [
        "solution_01.csv",
        "solution_02.csv",
        "solution_03.csv",
    ]


def test_repro_fig1_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "indefshoot.cli", "repro-fig1"], capture_output=True, text=True, check=False
    )
    assert proc.returncode == 0
    assert "count=3" in proc.stdout and "PASS" in proc.stdout


def test_repro_fig1_fails_when_grid_too_coarse():
    code, text = run(["repro-fig1", "--set", "slope_grid=2"])
    assert code == 1 and "FAIL" in text


def test_eig_constant_weight(cfg):
    code, text = run(["eig", "--config", cfg("weight: '1'\ng: s^3\n")])
    assert code == 0
    lines = text.splitlines()
    assert lines[0] == "interval,left,right,lambda"
    name, left, right, lam = lines[1].split(",")
    assert name == "I" and float(right) == 1.0
    assert abs(float(lam) - math.pi**2) <= 1e-8 * math.pi**2


def test_malformed_expression(cfg, capsys):
    code, _ = run(["solve", "--config", cfg("weight: sin(3*pi*x\ng: s^3\n")])
    err = capsys.readouterr().err
    assert code == 2
    assert "'weight'" in err and "offset 10" in err


def test_malformed_override(capsys):
    code, _ = run(["solve", "--set", "weight=sin(x)", "--set", "g=s^^2"])
    err = capsys.readouterr().err
    assert code == 2 and "'g'" in err and "offset 2" in err


def test_unknown_key(cfg, capsys):
    code, _ = run(["solve", "--config", cfg(FIG1_YAML + "tolerance: 1e-3\n")])
    assert code == 2 and "tolerance" in capsys.readouterr().err


def test_unknown_override(capsys):
    code, _ = run(["check", "--set", "colour=red"])
    assert code == 2 and "colour" in capsys.readouterr().err


def test_nested_config_rejected(cfg, capsys):
    code, _ = run(["solve", "--config", cfg("weight:\n  expr: sin(x)\n")])
    assert code == 2 and "nested" in capsys.readouterr().err


@pytest.mark.parametrize("text, key", [("rtol: -1\n", "rtol"), ("d_min: 3\nd_max: 2\n", "d_min"), ("mu: [0.5, -1]\n", "mu")])
def test_bad_values(cfg, capsys, text, key):
    code, _ = run(["check", "--config", cfg(FIG1_YAML + text)])
    assert code == 2 and f"'{key}'" in capsys.readouterr().err


def test_missing_config_file(capsys):
    code, _ = run(["solve", "--config", "/nonexistent/cfg.yaml"])
    assert code == 2


def test_numeric_failure_names_module(cfg, capsys):
    code, _ = run(["solve", "--config", cfg("weight: -1 - x^2\ng: s^3\n")])
    assert code == 1 and "weights" in capsys.readouterr().err


def test_check_json(cfg):
    code, text = run(["check", "--config", cfg(FIG1_YAML)])
    doc = json.loads(text)
    assert code == 0
    assert doc["g0_below_lambda0"] == "PASS" and doc["ginf_above_max_lambda1"] == "PASS"
    assert doc["caveat"] == "numeric limit estimate"


def test_solve_determinism(cfg, tmp_path):
    path = cfg(FIG1_YAML)
    outputs = []
    for k in range(2):
        out = tmp_path / f"run{k}"
        code, text = run(["solve", "--config", path, "--out", str(out)])
        assert code == 0
        files = sorted(out.iterdir())
        outputs.append([(f.name, f.read_bytes()) for f in files])
    assert outputs[0] == outputs[1]
    names = [name for name, _ in outputs[0]]
    assert names == ["report.json", "solution_01.csv", "solution_02.csv", "solution_03.csv"]
    for _, data in outputs[0]:
        assert b"\r" not in data


def test_threads_do_not_change_output(cfg, tmp_path):
    path = cfg(FIG1_YAML)
    run(["solve", "--config", path, "--out", str(tmp_path / "a")])
    run(["solve", "--config", path, "--out", str(tmp_path / "b"), "--threads", "2"])
    assert (tmp_path / "a/report.json").read_bytes() == (tmp_path / "b/report.json").read_bytes()


def test_report_floats_round_trip(cfg, tmp_path):
    run(["solve", "--config", cfg(FIG1_YAML), "--out", str(tmp_path)])
    doc = json.loads((tmp_path / "report.json").read_text())
    assert doc["count"] == 3
    header = (tmp_path / "solution_01.csv").read_text().splitlines()[0]
    assert header == "x,u,u_prime"


def test_sweep(cfg, tmp_path, capsys):
    code, text = run(["sweep", "--config", cfg(FIG1_YAML.replace("mu: 0.5", "mu: [0.5, 1.0]")), "--out", str(tmp_path)])
    assert code == 0
    lines = (tmp_path / "sweep.csv").read_text().splitlines()
    assert lines[0] == "mu,count,signatures,slopes"
    assert lines[1].startswith("0.5,3,")
    assert "mu_hat=0.5" in capsys.readouterr().err


def test_solve_rejects_mu_list(cfg, capsys):
    code, _ = run(["solve", "--config", cfg(FIG1_YAML.replace("mu: 0.5", "mu: [0.5, 1.0]"))])
    assert code == 2


def test_radial(cfg, tmp_path):
    text = "N: 2\nR1: 1.0\nR2: 2.718281828459045\nA: '1'\ng: s^3\nd_max: 50\n"
    code, out = run(["radial", "--config", cfg(text), "--out", str(tmp_path)])
    assert code == 0
    doc = json.loads(out)
    assert doc["count"] == 1 and len(doc["radial_solutions"]) == 1
    assert doc["annulus"]["L"] == pytest.approx(1.0)
    assert (tmp_path / "radial_01.csv").read_text().splitlines()[0] == "r,v,v_prime"


def test_radial_requires_geometry(cfg, capsys):
    code, _ = run(["radial", "--config", cfg("A: '1'\ng: s^3\n")])
    assert code == 2 and "'N'" in capsys.readouterr().err


@pytest.mark.parametrize("command", sorted(COMMANDS))
def test_help_lists_every_key(command, capsys):
    with pytest.raises(SystemExit) as info:
        main([command, "--help"])
    assert info.value.code == 0
    text = capsys.readouterr().out
    for key in KEYS:
        assert f"  {key} " in text
    for flag in ("--config", "--set", "--out", "--threads"):
        assert flag in text
