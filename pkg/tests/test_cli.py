import json
import subprocess
import sys

import pytest

from pdobundle import io
from pdobundle.cli import main
from pdobundle.symbols import FormalSymbol, FourierFunction, compose, parametrix


@pytest.fixture
def files(tmp_path):
    u = FormalSymbol.multiplication(FourierFunction.from_modes({0: 1.0, 1: 0.25}, 1), 3)
    io.write_symbol(tmp_path / "u.json", u)
    io.write_symbol(tmp_path / "xi.json", FormalSymbol.xi(3))
    bad = FormalSymbol.multiplication(FourierFunction.from_modes({0: 1.0, 1: -1.0}, 1), 3)
    io.write_symbol(tmp_path / "bad.json", bad)
    (tmp_path / "broken.json").write_text("{oops")
    return tmp_path


def test_compose_matches_library(files):
    out = files / "c.json"
    assert main(["symbols", "compose", "--in", str(files / "xi.json"),
                 "--in2", str(files / "u.json"), "--out", str(out)]) == 0
    expected = compose(io.read_symbol(files / "xi.json"), io.read_symbol(files / "u.json"))
    assert out.read_text() == io.dumps_symbol(expected)


def test_parametrix_and_unit_round_trip(files, capsys):
    assert main(["symbols", "parametrix", "--in", str(files / "u.json")]) == 0
    got = io.loads_symbol(capsys.readouterr().out)
    assert got.max_abs_diff(parametrix(io.read_symbol(files / "u.json"))) == 0
    one = files / "one.json"
    io.write_symbol(one, FormalSymbol.identity(3))
    assert main(["symbols", "compose", "--in", str(one), "--in2", str(one)]) == 0
    assert capsys.readouterr().out == one.read_text()


@pytest.mark.parametrize("argv, code", [
    (["symbols", "parametrix", "--in", "{d}/bad.json"], 3),
    (["symbols", "adjoint", "--in", "{d}/broken.json"], 2),
    (["symbols", "adjoint", "--in", "{d}/missing.json"], 2),
    (["symbols", "compose", "--in", "{d}/u.json"], 2),
    (["sweep", "--K-list", "--what", "cocycle"], 2),
    (["sweep", "--K-list", "1", "--what", "cocycle"], 2),
    (["verify", "everything"], 2),
    (["verify", "fredholm", "--K", "1"], 2),
    (["--config", "{d}/broken.json", "sweep", "--K-list", "8"], 2),
])
def test_exit_codes(files, argv, code):
    assert main([a.format(d=files) for a in argv]) == code


def test_sweep_cocycle(files, capsys):
    assert main(["sweep", "--K-list", "8,16", "--what", "cocycle"]) == 0
    rows = capsys.readouterr().out.strip().splitlines()
    assert rows[0] == "K,quantity,value,residual"
    assert len(rows) == 5
    assert rows[1].endswith(",-1.0,0.0")


def test_config_supplies_defaults(files):
    cfg = files / "cfg.json"
    cfg.write_text(json.dumps({"K_list": ["8"], "what": "cocycle", "out": str(files / "s.csv")}))
    assert main(["--config", str(cfg), "sweep"]) == 0
    assert (files / "s.csv").read_text().count("\n") == 3


def test_verify_report_is_deterministic(files, monkeypatch):
    monkeypatch.setenv("PDOBUNDLE_OUTPUT_DIR", str(files / "out"))
    assert main(["verify", "fredholm", "--K", "8"]) == 0
    first = json.loads((files / "out" / "verify-fredholm.json").read_text())
    r = files / "r.json"
    assert main(["verify", "fredholm", "--K", "8", "--report", str(r)]) == 0
    second = json.loads(r.read_text())
    assert io.report_payload_bytes(first) == io.report_payload_bytes(second)
    assert first["payload"]["criteria"]["7"]["pass"] is True
    assert first["payload"]["conventions"] == io.CONVENTIONS


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "pdobundle", "--help"], capture_output=True,
                          text=True)
    assert proc.returncode == 0 and "verify" in proc.stdout
