from __future__ import annotations

import csv
import io
import json
import subprocess
import sys

import pytest

from dynrmat.cli import main, parse_n_range, parse_sets
from dynrmat.identities import CATALOG

FIELDS = ["check_id", "paper_anchor", "n", "status", "residual_terms", "elapsed_ms"]


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_verify_json(capsys):
    code, out, _ = run(capsys, "verify", "--n", "2..3", "--suite", "all", "--format", "json", "--workers", "1")
    assert code == 0
    doc = json.loads(out)
    assert len(doc) == 2 * len(CATALOG)
    assert all(list(r) == FIELDS for r in doc)
    assert all(r["status"] == "pass" for r in doc)


def test_verify_classical(capsys):
    code, out, _ = run(capsys, "verify", "--suite", "classical", "--n", "2", "--format", "json")
    assert code == 0
    ids = [r["check_id"] for r in json.loads(out)]
    assert ids and all(i.startswith(("cl_", "trig_cl_")) for i in ids)
    assert set(ids) == {c for c in CATALOG if c.startswith(("cl_", "trig_cl_"))}


def test_verify_text_and_set(capsys):
    code, out, _ = run(capsys, "verify", "--suite", "R_unitarity,qLL_rep", "--n", "2", "--set", "hbar=1/2",
                       "--set", "gamma=3")
    assert code == 0
    assert "2 reports: 2 pass" in out


@pytest.mark.parametrize("argv", [
    ["verify", "--n", "1"],
    ["verify", "--n", "two"],
    ["verify", "--suite", "nosuch"],
    ["verify", "--set", "delta=1"],
    ["verify", "--set", "hbar=x"],
    ["verify", "--format", "xml"],
    ["eval", "nosuch"],
    ["eval", "W", "--n", "1"],
    ["simulate", "--dt", "0"],
    ["simulate", "--q0", "0,1"],
    ["bogus"],
    [],
])
def test_usage_errors(capsys, argv):
    code, out, err = run(capsys, *argv)
    assert code == 2
    assert err


def test_eval_w(capsys):
    code, out, _ = run(capsys, "eval", "W", "--n", "2")
    assert code == 0
    lines = out.splitlines()
    assert len(lines) == 4
    assert "W[1,2] = gamma/(q1 - q2)" in lines


def test_eval_r_at_hbar_zero(capsys):
    code, out, _ = run(capsys, "eval", "R", "--n", "2", "--set", "hbar=0", "--format", "json")
    assert code == 0
    doc = json.loads(out)
    entries = {e["index"]: e["value"] for e in doc["entries"]}
    assert entries == {f"R[{a},{a}]": "1" for a in ("11", "12", "21", "22")}


@pytest.mark.parametrize("name", ["F", "L", "I2", "J2", "b", "L_tilde", "R_tilde"])
def test_eval_every_kind(capsys, name):
    code, out, _ = run(capsys, "eval", name, "--n", "2")
    assert code == 0 and out.strip()


def test_simulate(capsys, tmp_path):
    path = tmp_path / "a.csv"
    code, _, err = run(capsys, "simulate", "--n", "2", "--gamma", "1", "--dt", "1e-3", "--horizon", "10",
                       "--seed", "7", "--out", str(path))
    assert code == 0 and err.startswith("ok:")
    rows = list(csv.DictReader(io.StringIO(path.read_text())))
    assert len(rows) == 10001
    assert max(float(r[f"drift{k}"]) for r in rows for k in (1, 2, 3)) <= 1e-8
    path2 = tmp_path / "b.csv"
    run(capsys, "simulate", "--n", "2", "--gamma", "1", "--dt", "1e-3", "--horizon", "10", "--seed", "7",
        "--out", str(path2))
    assert path.read_bytes() == path2.read_bytes()


def test_simulate_free(capsys):
    code, out, _ = run(capsys, "simulate", "--n", "3", "--gamma", "0", "--dt", "1e-2", "--horizon", "1")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    for k in (1, 2, 3):
        vals = {r[f"I{k}"] for r in rows}
        assert len(vals) == 1


def test_simulate_collision(capsys, tmp_path):
    path = tmp_path / "c.csv"
    code, _, err = run(capsys, "simulate", "--n", "2", "--q0", "0,0.5", "--p0", "0,0", "--out", str(path))
    assert code == 3 and err.startswith("halted")
    lines = path.read_text().splitlines()
    assert lines[0].startswith("t,q1,q2,p1,p2")
    assert 2 < len(lines) < 10002


def test_parsers():
    assert parse_n_range("2..4") == [2, 3, 4]
    assert parse_n_range("2,5") == [2, 5]
    assert parse_n_range("3") == [3]
    assert parse_sets(["hbar=1/2,gamma=-3"]) == {"hbar": parse_sets(["hbar=0.5"])["hbar"], "gamma": -3}


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "dynrmat.cli", "verify", "--n", "1"], capture_output=True,
                          text=True)
    assert proc.returncode == 2
    assert "N >= 2" in proc.stderr
