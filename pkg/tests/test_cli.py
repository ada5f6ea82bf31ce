import json
import math
import subprocess
import sys

import numpy as np
import pytest

from shapelab.cli import main
from shapelab.constellation import from_json, is_rotation_invariant
from shapelab.pas import frame_from_bytes


def run(*argv):
    return main([str(a) for a in argv])


def test_construct_greedy(tmp_path):
    out, svg = tmp_path / "c.json", tmp_path / "c.svg"
    assert run("construct", "cqam-greedy", "--q", 8, "-o", out, "--svg", svg) == 0
    c = from_json(out.read_text())
    assert len(c) == 64 and is_rotation_invariant(c)
    text = svg.read_text()
    assert text.startswith("<svg") and text.count("<circle") == 64


def test_construct_shaped_qam(tmp_path):
    out = tmp_path / "q.json"
    assert run("construct", "qam", "--m", 3, "--shape-entropy", 5.45, "-o", out) == 0
    doc = json.loads(out.read_text())
    assert abs(doc["entropy"] - 5.45) < 1e-6
    assert len(set(doc["probs"])) > 1


def test_construct_bad_q(tmp_path, capsys):
    assert run("construct", "cqam-greedy", "--q", 1, "-o", tmp_path / "x.json") == 2
    assert "q >= 2" in capsys.readouterr().err


def test_usage_errors():
    assert run("nonsense") == 2
    assert run("construct", "hexagon") == 2


def test_rates_capacity_and_labels(tmp_path, capsys):
    c = tmp_path / "c.json"
    run("construct", "cqam-star", "--q", 8, "-o", c)
    out = tmp_path / "r.csv"
    assert run("rates", c, "--snr", "10:10:1", "--metrics", "cm", "-o", out) == 0
    row = out.read_text().splitlines()[1].split(",")
    assert float(row[1]) == pytest.approx(math.log2(11), abs=1e-12)
    assert run("rates", c, "--metrics", "bcm") == 2
    assert "bcm" in capsys.readouterr().err


def test_rates_shaped_vs_uniform(tmp_path):
    u, s = tmp_path / "u.json", tmp_path / "s.json"
    run("construct", "qam", "--m", 3, "-o", u)
    run("construct", "qam", "--m", 3, "--shape-entropy", 5.45, "-o", s)
    curves = {}
    for name, f in (("u", u), ("s", s)):
        out = tmp_path / f"{name}.csv"
        run("rates", f, "--snr", "10:40:30", "-o", out)
        curves[name] = [float(l.split(",")[2]) for l in out.read_text().splitlines()[1:]]
    assert curves["s"][0] > curves["u"][0]
    assert curves["u"][1] == pytest.approx(6.0, abs=1e-6)


def test_mc_reruns_identical(tmp_path):
    c = tmp_path / "c.json"
    run("construct", "qam", "--m", 2, "-o", c)
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for f in (a, b):
        assert run("--seed", 7, "rates", c, "--snr", "5:6:1", "--method", "mc",
                   "--samples", 20000, "-o", f) == 0
    assert a.read_bytes() == b.read_bytes()


def test_pas_plan(tmp_path):
    out = tmp_path / "p.json"
    assert run("pas-plan", "--q", 8, "--rdm", 0.9, "--r", 0, "-o", out) == 0
    doc = json.loads(out.read_text())
    assert doc["R_C"] == 0.5 and doc["R_T_bits"] == pytest.approx(2.7, abs=1e-12)
    assert run("pas-plan", "--q", 8, "--rdm", 0.9, "--rc", 0.3) == 3


def test_pas_frame_and_transmit(tmp_path):
    c, f = tmp_path / "c.json", tmp_path / "f.bin"
    run("construct", "cqam-greedy", "--q", 8, "--shape-lambda", 1.0, "-o", c)
    assert run("pas-frame", c, "--n", 800, "--r", 0.1, "-o", f) == 0
    meta = json.loads((tmp_path / "f.json").read_text())
    head, amps, regions = frame_from_bytes(f.read_bytes())
    assert tuple(np.bincount(amps, minlength=8)) == tuple(meta["composition"])
    t1, t2 = tmp_path / "t1.csv", tmp_path / "t2.csv"
    for t in (t1, t2):
        assert run("transmit", c, "--frame", f, "--snr", 12, "-o", t) == 0
    assert t1.read_bytes() == t2.read_bytes()
    assert len(t1.read_text().splitlines()) == 801


def test_reach(tmp_path):
    c, cfg, out = tmp_path / "c.json", tmp_path / "link.cfg", tmp_path / "reach.csv"
    run("construct", "qam", "--m", 2, "-o", c)
    cfg.write_text("ase_per_span = 1e-3\neta0 = 1e-3\neta_moment_slope = 2e-4\n")
    assert run("reach", "--config", cfg, "--format", c, "--spans", "10:60:10",
               "--lambda-step", 0.5, "--order", 24, "-o", out) == 0
    rows = [l.split(",") for l in out.read_text().splitlines()]
    assert rows[0] == ["distance_km", "p_opt_dbm_norm", "snr_opt_db", "mi_bits", "lambda_opt"]
    snr = [float(r[2]) for r in rows[1:]]
    assert len(snr) == 6 and np.all(np.diff(snr) < 0)


def test_console_entry(tmp_path):
    res = subprocess.run([sys.executable, "-m", "shapelab", "pas-plan", "--q", "2", "--rdm", "0.95",
                          "--ram", "2", "--r", "0"], capture_output=True, text=True)
    assert res.returncode == 0
    assert json.loads(res.stdout)["R_T_bits"] == pytest.approx(3.8, abs=1e-12)
