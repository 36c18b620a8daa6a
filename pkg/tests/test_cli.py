"""Command line front end: artifacts, reproducibility and exit codes."""

from __future__ import annotations

import csv
import json
import subprocess
import sys
import time

import numpy as np
import pytest

from relvac import transition
from relvac.cli import (EXIT_CONFIG, EXIT_INADMISSIBLE, EXIT_INVARIANT, EXIT_OK, load_snapshot,
                        main)
from relvac.energy import ENERGY_COLUMNS
from relvac.scenarios import load_scenario


def _cfg(tmp_path, text, name="s.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


SHORT = "family = blob1d\nN = 256\nT = 0.03\neps = 0.01\nintegrator = threestep\nlevel = 2\n"


def test_simulate_bundled_blob1d(tmp_path):
    t0 = time.perf_counter()
    assert main(["simulate", "--scenario", "blob1d", "--out", str(tmp_path)]) == EXIT_OK
    assert time.perf_counter() - t0 < 60
    with (tmp_path / "energy.csv").open() as fh:
        rows = list(csv.DictReader(fh))
    assert tuple(rows[0]) == ENERGY_COLUMNS
    assert float(rows[-1]["t"]) == pytest.approx(0.2)
    rep = json.loads((tmp_path / "report.json").read_text())
    assert rep["exit_code"] == 0 and rep["scenario"]["name"] == "blob1d"
    assert (tmp_path / "scenario.cfg").read_text().count("=") == len(load_scenario("blob1d").values)
    sc = load_scenario("blob1d")
    last = sorted((tmp_path / "snapshots").glob("*.npz"))[-1]
    s = load_snapshot(last, sc.grid, sc.params)
    assert s.t == pytest.approx(0.2)


def test_simulate_is_deterministic(tmp_path):
    cfg = _cfg(tmp_path, SHORT)
    for sub in ("a", "b"):
        assert main(["simulate", "--scenario", cfg, "--out", str(tmp_path / sub), "--seed", "7"]) == 0
    assert (tmp_path / "a" / "energy.csv").read_bytes() == (tmp_path / "b" / "energy.csv").read_bytes()
    za = np.load(sorted((tmp_path / "a" / "snapshots").glob("*.npz"))[-1])
    zb = np.load(sorted((tmp_path / "b" / "snapshots").glob("*.npz"))[-1])
    assert np.array_equal(za["r"], zb["r"], equal_nan=True)


def test_eps_sweep_one_csv_each(tmp_path):
    cfg = _cfg(tmp_path, SHORT)
    assert main(["simulate", "--scenario", cfg, "--out", str(tmp_path), "--eps", "0.01,0.015",
                 "--threads", "2"]) == 0
    assert sorted(p.name for p in tmp_path.glob("energy_eps*.csv")) == [
        "energy_eps0.01.csv", "energy_eps0.015.csv"]


def test_rk4_scenario(tmp_path):
    cfg = _cfg(tmp_path, "family = offcenter1d\ngamma = 0.3\nN = 256\nT = 0.02\n"
                         "integrator = rk4\nlevel = 0\nsnapshot_every = 5\n")
    assert main(["simulate", "--scenario", cfg, "--out", str(tmp_path)]) == 0
    assert len(list((tmp_path / "snapshots").glob("*.npz"))) >= 2


def test_compare_zero_and_recomputed_amplification(tmp_path):
    cfg = _cfg(tmp_path, "family = blob1d\nN = 256\nT = 0.05\nintegrator = rk4\n")
    assert main(["compare", "--scenario", cfg, "--out", str(tmp_path), "--delta", "0,1e-3"]) == 0
    with (tmp_path / "pair_delta0.csv").open() as fh:
        rows = list(csv.DictReader(fh))
    assert all(float(r["D_H"]) == 0.0 and float(r["tilde_D_H"]) == 0.0 for r in rows)
    with (tmp_path / "pair_delta0.001.csv").open() as fh:
        D = np.array([float(r["D_H"]) for r in csv.DictReader(fh)])
    with (tmp_path / "delta_sweep.csv").open() as fh:
        sweep = {float(r["delta"]): r for r in csv.DictReader(fh)}
    assert float(sweep[1e-3]["amplification"]) == pytest.approx(D.max() / D[0], rel=1e-12)


def test_verify_ops_passes_in_budget(tmp_path):
    t0 = time.perf_counter()
    assert main(["verify", "ops", "--out", str(tmp_path)]) == EXIT_OK
    assert time.perf_counter() - t0 < 120
    rep = json.loads((tmp_path / "verify_report.json").read_text())
    assert set(rep) == {"schema", "suite", "passed", "failed", "criteria"}
    assert set(rep["criteria"][0]) == {"number", "title", "passed", "property_ok", "seconds",
                                       "budget", "message", "measured"}


def test_verify_ops_fails_on_tampered_adjoint(monkeypatch, capsys):
    """Negative control: a non-symmetric discretization of L1 fails the suite."""
    orig = transition._IMPL["L1"]
    monkeypatch.setitem(transition._IMPL, "L1",
                        lambda vals, bg: orig(vals, bg) + transition._d0(vals, 0, bg.h[0]))
    assert main(["verify", "ops"]) == EXIT_INVARIANT
    assert "criterion 09" in capsys.readouterr().out


def test_single_criterion(capsys):
    assert main(["verify", "--criterion", "1"]) == EXIT_OK
    assert "criterion 01" in capsys.readouterr().out
    assert main(["verify", "--criterion", "99"]) == EXIT_CONFIG


def test_exit_codes(tmp_path):
    assert main(["simulate", "--scenario", "nope", "--out", str(tmp_path)]) == EXIT_CONFIG
    assert main(["simulate", "--eps", "abc", "--out", str(tmp_path)]) == EXIT_CONFIG
    assert main(["frobnicate"]) == EXIT_CONFIG
    bad = _cfg(tmp_path, "family = blob1d\nN = 128\nh0 = 30.0\nalpha = 40.0\nT = 0.01\n"
                         "eps = 0.005\nintegrator = threestep\nlevel = 0\n", "bad.cfg")
    assert main(["simulate", "--scenario", bad, "--out", str(tmp_path / "b")]) == EXIT_INADMISSIBLE
    guard = _cfg(tmp_path, SHORT + "c_max = -50\n", "guard.cfg")
    assert main(["simulate", "--scenario", guard, "--out", str(tmp_path / "g")]) == EXIT_INVARIANT
    rep = json.loads((tmp_path / "g" / "report.json").read_text())
    assert "last_step" in rep
    # the A <= 0.2 precondition of the coercivity bound is a configuration error
    assert main(["coercivity-test", "--scenario", "blob1d"]) == EXIT_CONFIG


def test_coercivity_and_interp_commands(tmp_path):
    assert main(["coercivity-test", "--scenario", "small_a", "--out", str(tmp_path)]) == EXIT_OK
    rep = json.loads((tmp_path / "coercivity.json").read_text())
    assert 0.1 <= rep["E_over_norm"] <= 10
    assert main(["interp-test", "--prop", "Linf", "--N", "257", "--out", str(tmp_path)]) == EXIT_OK
    lines = (tmp_path / "interp.csv").read_text().splitlines()
    assert lines[0] == "kind,prop,j,m,sigma_m,sigma_0,ratio" and len(lines) > 10


def test_console_entry_point():
    out = subprocess.run([sys.executable, "-m", "relvac.cli", "--help"], capture_output=True,
                         text=True)
    assert out.returncode == 0
    for cmd in ("simulate", "compare", "verify", "interp-test", "coercivity-test"):
        assert cmd in out.stdout
