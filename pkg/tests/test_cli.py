import json
import shutil

import pytest

from sncalc import serialize
from sncalc.cli import main, parse_grid


@pytest.fixture
def fx(tmp_path, fixtures_dir):
    for p in fixtures_dir.glob("*.json"):
        shutil.copy(p, tmp_path / p.name)
    return tmp_path


def run(*args):
    return main([str(a) for a in args])


def test_grid_parsing():
    g = parse_grid("0:50:0.5")
    assert g.size == 101 and g[-1] == 50.0
    assert parse_grid("1:1:0.3").tolist() == [1.0]


def test_transform_happy_path(fx, capsys):
    assert run("transform", fx / "tac_exp.json", "--to", "vbc", "--theta", 0.1, "--out", fx / "v.json") == 0
    line = capsys.readouterr().out.strip()
    assert line.startswith("kind=vbc theta=0.1 clip_onset_x=")
    m = serialize.load(fx / "v.json")
    assert m.kind.value == "vbc" and m.metadata["transform"] == "tac_to_vbc"


def test_transform_errors(fx, capsys):
    run("transform", fx / "tac_exp.json", "--to", "vbc", "--theta", 0.1, "--out", fx / "v.json")
    assert run("transform", fx / "v.json", "--to", "ws", "--out", fx / "w.json") == 3
    assert run("transform", fx / "tac_exp.json", "--to", "vbc", "--theta", 0, "--out", fx / "w.json") == 3
    assert "theta must be positive" in capsys.readouterr().err
    (fx / "bad.json").write_text('{"version": "1.0", "model": {"kind": 5}}')
    assert run("transform", fx / "bad.json", "--to", "vbc", "--theta", 1, "--out", fx / "w.json") == 2
    assert run("transform", fx / "missing.json", "--to", "vbc", "--theta", 1, "--out", fx / "w.json") == 2


def test_retag_and_bounds(fx):
    assert run("transform", fx / "vbssc_rl.json", "--to", "sc", "--out", fx / "s.json") == 0
    assert run("transform", fx / "tac_poisson.json", "--to", "vbc", "--theta", 0.1, "--out", fx / "v.json") == 0
    assert run("bound", "delay", "--arrival", fx / "v.json", "--service", fx / "sc_exp.json",
               "--grid", "0:50:0.5", "--out", fx / "d.csv") == 0
    lines = (fx / "d.csv").read_text().splitlines()
    assert lines[0] == "x,delay_value,bound_prob" and len(lines) == 102
    assert run("bound", "backlog", "--arrival", fx / "vbc_piecewise.json", "--service", fx / "s.json",
               "--grid", "0:10:1", "--format", "json", "--out", fx / "b.json") == 0
    assert len(json.loads((fx / "b.json").read_text())["samples"]) == 11


def test_bound_output_writes_model(fx):
    assert run("bound", "output", "--arrival", fx / "vbc_handwritten.json", "--service", fx / "sc_exp.json",
               "--out", fx / "o.json") == 0
    m = serialize.load(fx / "o.json")
    assert m.kind.value == "vbc" and m.metadata["transform"] == "output"


def test_bound_unstable(fx, capsys):
    code = run("bound", "backlog", "--arrival", fx / "vbc_unstable.json", "--service", fx / "sc_exp.json")
    assert code == 5
    assert "h(alpha, beta) = inf" in capsys.readouterr().err


def test_tighten(fx, capsys):
    run("transform", fx / "tac_exp.json", "--to", "vbc", "--theta", 1, "--out", fx / "v.json")
    capsys.readouterr()
    assert run("tighten", fx / "v.json", "--epsilon", 0.05, "--x-floor", 1, "--out", fx / "t.json") == 0
    out = capsys.readouterr().out
    theta2 = float(out.split()[0].split("=")[1])
    assert 0.5 < theta2 < 0.6
    assert serialize.load(fx / "t.json").metadata["theta"] == pytest.approx(theta2)
    assert run("tighten", fx / "v.json", "--epsilon", 0, "--x-floor", 1) == 0
    assert capsys.readouterr().out.strip() == "tightest within tolerance 0"
    assert run("tighten", fx / "vbc_handwritten.json", "--epsilon", 0.05, "--x-floor", 1) == 6


def test_mm1_command(fx, capsys):
    assert run("mm1", "--lambda", 20, "--mu", 25, "--theta", 0.1, "--T", "1,2,4", "--out", fx / "m.csv") == 0
    lines = (fx / "m.csv").read_text().splitlines()
    assert lines[0] == "T,theta,x,delay_value,bound_prob,exact_prob,path"
    assert len(lines) == 1 + 3 * 101
    assert {line.split(",")[0] for line in lines[1:]} == {"1", "2", "4"}
    assert run("mm1", "--theta", 5) == 5
    assert "escape to infinity" in capsys.readouterr().err


def test_simulate_command(fx):
    assert run("simulate", "--n", 20000, "--seed", 3, "--T", "1", "--grid", "0:10:1", "--out", fx / "s.csv") == 0
    lines = (fx / "s.csv").read_text().splitlines()
    assert lines[0].endswith("path,empirical_prob,ci") and len(lines) == 12


def test_module_entry_point(fx):
    import subprocess
    import sys

    res = subprocess.run([sys.executable, "-m", "sncalc", "mm1", "--T", "1", "--grid", "0:1:1"],
                         capture_output=True, text=True, check=True)
    assert res.stdout.splitlines()[0].startswith("T,theta")
