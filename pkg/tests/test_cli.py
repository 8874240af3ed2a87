import json
import subprocess
import sys

import pytest

from locstine.cli import main


@pytest.fixture
def run(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)

    def _run(*args):
        return main([str(a) for a in args])

    return _run


def test_gen_is_byte_deterministic(run, tmp_path):
    assert run("gen", "--seed", 5, "--k", 3, "--blocks", "1,2", "--flag", "1,3", "--out", "a.json") == 0
    assert run("gen", "--seed", 5, "--k", 3, "--blocks", "1,2", "--flag", "1,3", "--out", "b.json") == 0
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()
    obj = json.loads((tmp_path / "a.json").read_text())
    assert list(obj) == ["spec", "map", "ground_truth"]


def test_dilated_pipeline(run, tmp_path):
    assert run("gen", "--seed", 2, "--k", 2, "--blocks", "1,1", "--flag", "1,2", "--out", "inst.json") == 0
    assert run("check", "inst.json", "--nmax", 2, "--trials", 10, "--out", "chk.json") == 0
    assert run("dilate", "inst.json", "--out", "triple.json") == 0
    assert run("verify", "--phi", "inst.json", "--triple", "triple.json", "--out", "ver.json") == 0
    triple = json.loads((tmp_path / "triple.json").read_text())
    for key in ("r", "flag", "V", "reps", "embed", "residuals"):
        assert key in triple
    first = (tmp_path / "triple.json").read_bytes()
    assert run("dilate", "inst.json", "--out", "triple.json") == 0
    assert (tmp_path / "triple.json").read_bytes() == first


def test_rn_exit_codes(run, tmp_path):
    assert run("gen", "--seed", 4, "--k", 1, "--blocks", "1,2", "--flag", "2,3", "--kind", "planted",
               "--out", "pl.json") == 0
    assert run("rn", "--phi", "pl.json", "--psi", "pl.json", "--out", "cert.json") == 0
    cert = json.loads((tmp_path / "cert.json").read_text())
    assert list(cert["residuals"]) == ["reconstruction", "commutant", "contraction"]
    assert run("gen", "--seed", 4, "--kind", "double", "--out", "dbl.json") == 0
    assert run("rn", "--phi", "dbl.json", "--psi", "dbl.json") == 1


@pytest.mark.parametrize("kind, command", [
    ("transpose", "check"),
    ("transpose", "dilate"),
    ("symmetry-defect", "dilate"),
    ("invariance-defect", "check"),
])
def test_defects_are_mathematical_failures(run, kind, command):
    assert run("gen", "--kind", kind, "--k", 1, "--blocks", "2", "--flag", "2", "--out", "d.json") == 0
    args = ["d.json", "--trials", 10] if command == "check" else ["d.json"]
    assert run(command, *args) == 1


def test_io_errors(run, tmp_path):
    assert run("dilate", "missing.json") == 2
    (tmp_path / "bad.json").write_text("{not json")
    assert run("check", "bad.json") == 2
    (tmp_path / "nan.json").write_text('{"values": NaN}')
    assert run("check", "nan.json") == 2
    assert run("gen", "--flag", "2,1") == 2
    assert run("frobnicate") == 2


def test_report_text_and_json(run, tmp_path, capsys):
    (tmp_path / "runs").mkdir()
    assert run("gen", "--seed", 1, "--out", "runs/inst.json") == 0
    assert run("dilate", "runs/inst.json", "--out", "runs/triple.json") == 0
    capsys.readouterr()
    assert run("report", "--dir", "runs", "--format", "text") == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines and all(line.startswith("CHECK ") and len(line.split()) == 4 for line in lines)
    assert run("report", "--dir", "runs", "--format", "json", "--out", "rep.json") == 0
    rep = json.loads((tmp_path / "rep.json").read_text())
    assert [c["name"] for c in rep["checks"]] == [line.split()[1] for line in lines]


def test_module_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "locstine", "gen", "--seed", "0"],
                         capture_output=True, text=True, cwd=tmp_path)
    assert out.returncode == 0
    assert json.loads(out.stdout)["spec"]["seed"] == 0
