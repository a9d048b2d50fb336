import json
import subprocess
import sys

import pytest

from wulfflab import io
from wulfflab.cli import main


@pytest.fixture(autouse=True)
def _in_tmp(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)  # default --out is relative to the cwd


@pytest.fixture
def files(tmp_path):
    (tmp_path / "square.json").write_text(json.dumps({"kind": "rectangle", "width": 1, "height": 1, "h": 0.125}))
    (tmp_path / "disk.json").write_text(json.dumps({"kind": "wulff", "R": 1.0, "h": 0.2}))
    (tmp_path / "quad.json").write_text(json.dumps({"kind": "quadratic", "A": [[4, 0], [0, 1]]}))
    return tmp_path


def _manifest(path, **kw):
    path.write_text(json.dumps(kw))
    return str(path)


def test_cheeger1_writes_outputs(files, capsys):
    m = _manifest(files / "m.json", task="cheeger1", domain="square.json")
    assert main(["cheeger1", "--manifest", m, "--out", str(files / "o")]) == 0
    res = json.loads((files / "o" / "cheeger1.json").read_text())
    assert 3.0 < res["h1"] < 4.5
    assert io.read_pgm(files / "o" / "cheeger_set.pgm").shape == (10, 10)


def test_manifest_errors_exit_2(files, capsys):
    m = _manifest(files / "m.json", task="cheeger1", domain="square.json", solver={"tol": -1})
    assert main(["cheeger1", "--manifest", m, "--out", str(files / "o")]) == 2
    err = json.loads(capsys.readouterr().out)
    assert err["field"] == "tol"
    assert json.loads((files / "o" / "error.json").read_text())["field"] == "tol"
    m = _manifest(files / "m2.json", task="cheeger1")
    assert main(["cheeger1", "--manifest", m]) == 2
    assert json.loads(capsys.readouterr().out)["field"] == "domain"


def test_bad_exponent_exit_2(files, capsys):
    code = main(["eigen", "--domain", str(files / "disk.json"), "--p", "0.5", "--out", str(files / "o")])
    assert code == 2
    assert json.loads(capsys.readouterr().out)["field"] == "params.p"


def test_flag_forms(files):
    out = files / "o"
    assert main(["eigen", "--domain", str(files / "disk.json"), "--p", "2", "--which", "1", "--out", str(out)]) == 0
    assert json.loads((out / "eigen.json").read_text())["lambda"] > 0
    assert main(["norm-check", "--norm", str(files / "quad.json"), "--out", str(out)]) == 0
    assert json.loads((out / "norm-check.json").read_text())["passes"]
    assert main(["twisted", "qtilde", "--n", "2", "--tol", "1e-8", "--out", str(out)]) == 0
    r = json.loads((out / "qtilde.json").read_text())
    assert abs(r["q_tilde"] - 1.75) < 1e-6
    assert (out / "qtilde.svg").exists() and (out / "qtilde.csv").exists()


def test_sweep_csv(files):
    out = files / "s"
    code = main(["sweep", "--domain", str(files / "disk.json"), "--p", "1.5,1.3", "--out", str(out / "sweep.csv")])
    assert code == 0
    lines = (out / "sweep.csv").read_text().splitlines()
    assert lines[0] == "p,lambda1,lambda2,h1,h2,margin1,margin2"
    assert len(lines) == 3
    assert "<polyline" in (out / "sweep.svg").read_text()


def test_deterministic_outputs(files):
    m = _manifest(files / "m.json", task="cheeger2", domain="square.json", solver={"seed": 7})
    for d in ("a", "b"):
        assert main(["cheeger2", "--manifest", m, "--out", str(files / d)]) == 0
    for name in ("cheeger2.json", "pair.pgm", "domain.pgm"):
        assert (files / "a" / name).read_bytes() == (files / "b" / name).read_bytes()


def test_console_entry_point(files):
    m = _manifest(files / "m.json", task="cheeger1")
    r = subprocess.run([sys.executable, "-m", "wulfflab", "cheeger1", "--manifest", m],
                       capture_output=True, text=True)
    assert r.returncode == 2
    assert json.loads(r.stdout)["field"] == "domain"


def test_inline_specs_and_nested_fields(files, capsys):
    sq = {"kind": "rectangle", "width": 1, "height": 1, "h": 0.125}
    m = _manifest(files / "m.json", task="cheeger1", domain=sq)
    assert main(["cheeger1", "--manifest", m, "--out", str(files / "o")]) == 0
    capsys.readouterr()
    m = _manifest(files / "m.json", task="cheeger1", domain={"kind": "rectangle", "width": 1, "height": 1})
    assert main(["cheeger1", "--manifest", m]) == 2
    assert json.loads(capsys.readouterr().out)["field"] == "domain.h"
    m = _manifest(files / "m.json", task="cheeger1", domain=sq, norm={"kind": "lq", "q": 1.5})
    assert main(["cheeger1", "--manifest", m]) == 2
    assert json.loads(capsys.readouterr().out)["field"] == "norm.q_norm"
    m = _manifest(files / "m.json", task="cheeger1", domain=5)
    assert main(["cheeger1", "--manifest", m]) == 2
    assert json.loads(capsys.readouterr().out)["field"] == "domain"
