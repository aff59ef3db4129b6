import json
import math
import struct
from pathlib import Path

import numpy as np
import pytest

from darcy_ec import io
from darcy_ec.cli import EXIT_BLOWUP, EXIT_CONFIG, EXIT_FAIL, EXIT_OK, main
from darcy_ec.config import parse_config
from darcy_ec.spectral import Grid, SpectralField

from conftest import random_field

BASE = {"n": 16, "alpha": 1.0, "T": 0.1, "dt": 0.01, "ic": {"kind": "two_mode", "amplitude": 0.5}}


def write_cfg(tmp_path, **kw):
    d = dict(BASE) | kw
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(d))
    return str(p)


def tree(d: Path) -> dict:
    return {str(p.relative_to(d)): p.read_bytes() for p in sorted(d.rglob("*")) if p.is_file()}


def test_snapshot_layout_bit_exact(tmp_path, rng):
    g = Grid(8, 2.5)
    f = random_field(g, rng, band=3)
    p = tmp_path / "s.pecf"
    io.write_snapshot(p, f, 0.125, 1.25, 1e-3)
    raw = p.read_bytes()
    assert raw[:4] == b"PECF"
    assert struct.unpack_from("<II", raw, 4) == (1, 8)
    assert struct.unpack_from("<4d", raw, 12) == (2.5, 0.125, 1.25, 1e-3)
    body = np.frombuffer(raw, "<f8", offset=44).reshape(8, 8, 2)
    # first entry is mode (-4, -4), entry [4, 5] is mode (0, 1)
    m = g.index(0, 1)
    assert body[4, 5, 0] == f.coeffs[m].real and body[4, 5, 1] == f.coeffs[m].imag
    assert body[0, 0, 0] == f.coeffs[g.index(-4, -4)].real
    assert len(raw) == 44 + 16 * 64


def test_snapshot_rejects_garbage(tmp_path):
    p = tmp_path / "bad.pecf"
    p.write_bytes(b"NOPE" + bytes(40))
    with pytest.raises(io.FormatError):
        io.read_snapshot(p)
    p.write_bytes(io.encode_snapshot(SpectralField.zeros(Grid(8)), 0, 1, 0)[:-1])
    with pytest.raises(io.FormatError):
        io.read_snapshot(p)


def test_float_formatting():
    assert io.fmt(0.1) == "0.1"
    assert io.fmt(1 / 3) == repr(1 / 3)
    assert io.fmt(float("nan")) == "nan"
    assert io.fmt(True) == "true" and io.fmt(np.int64(3)) == "3"


def test_json_strict_with_nonfinite():
    text = io.dumps({"a": float("nan"), "b": [float("inf"), 1.0]})
    assert json.loads(text) == {"a": "nan", "b": ["inf", 1.0]}


def test_run_outputs_and_determinism(tmp_path, capsys):
    cfg = write_cfg(tmp_path)
    assert main(["run", "--config", cfg, "--out", str(tmp_path / "a")]) == EXIT_OK
    assert main(["run", "--config", cfg, "--out", str(tmp_path / "b")]) == EXIT_OK
    a, b = tree(tmp_path / "a"), tree(tmp_path / "b")
    assert a == b
    assert "series.csv" in a and "verdict.json" in a and "manifest.json" in a
    assert len([k for k in a if k.startswith("snapshots/")]) == 11
    head = a["series.csv"].decode().splitlines()[0]
    assert head == ",".join(io.SERIES_COLUMNS)
    verdict = json.loads(a["verdict.json"])
    assert set(verdict["diagnostics"]) == set(parse_config(Path(cfg).read_text()).diagnostics)
    assert len(verdict["config_hash"]) == 64 and verdict["version"]


def test_single_mode_run_exact_decay(tmp_path):
    cfg = write_cfg(tmp_path, ic={"kind": "single_mode"}, T=0.5, dt=0.01)
    assert main(["run", "--config", cfg, "--out", str(tmp_path / "o")]) == EXIT_OK
    _, rows = io.read_csv(tmp_path / "o" / "series.csv")
    l2 = [float(r[1]) for r in rows]
    assert abs(l2[-1] / l2[0] - math.exp(-0.5)) < 1e-8 * math.exp(-0.5)


def test_analyze_reproduces(tmp_path, capsys):
    cfg = write_cfg(tmp_path)
    out = tmp_path / "o"
    main(["run", "--config", cfg, "--out", str(out)])
    capsys.readouterr()
    assert main(["analyze", str(out)]) == EXIT_OK
    res = json.loads(capsys.readouterr().out)
    assert res[0]["verdict_match"] and res[0]["series_match"]
    # tamper with one snapshot -> mismatch
    snap = sorted((out / "snapshots").iterdir())[-1]
    s = io.read_snapshot(snap)
    io.write_snapshot(snap, s.field * 1.5, s.t, s.alpha, s.epsilon)
    assert main(["analyze", str(out)]) == EXIT_FAIL


def test_config_error_exit(tmp_path, capsys):
    cfg = write_cfg(tmp_path, alpha=2.5)
    assert main(["run", "--config", cfg, "--out", str(tmp_path / "o")]) == EXIT_CONFIG
    err = json.loads(capsys.readouterr().err)
    assert err["exit_code"] == 2 and err["message"].startswith("config.alpha")
    assert main(["run", "--out", str(tmp_path / "o")]) == EXIT_CONFIG


def test_blowup_exit(tmp_path, capsys):
    cfg = write_cfg(tmp_path, n=16, dt=0.5, T=20.0, ic={"kind": "random", "amplitude": 40.0, "kmax": 5},
                    alpha=0.1)
    code = main(["run", "--config", cfg, "--out", str(tmp_path / "o")])
    assert code == EXIT_BLOWUP
    fail = json.loads((tmp_path / "o" / "failure.json").read_text())
    assert fail["error"] == "blowup" and "t" in fail


def test_diagnostic_failure_exit(tmp_path):
    cfg = write_cfg(tmp_path, tolerances={"energy": 1e-30})
    assert main(["run", "--config", cfg, "--out", str(tmp_path / "o")]) == EXIT_FAIL
    v = json.loads((tmp_path / "o" / "verdict.json").read_text())
    assert v["diagnostics"]["energy"]["status"] == "fail" and not v["passed"]


def test_env_overrides(tmp_path, monkeypatch):
    cfg = write_cfg(tmp_path, ic={"kind": "random", "kmax": 4})
    monkeypatch.setenv("DARCY_EC_CONFIG", cfg)
    monkeypatch.setenv("DARCY_EC_OUT", str(tmp_path / "env"))
    monkeypatch.setenv("DARCY_EC_SEED", "99")
    monkeypatch.setenv("DARCY_EC_STRICT_DEALIAS", "1")
    assert main(["run"]) == EXIT_OK
    stored = parse_config((tmp_path / "env" / "config.json").read_text())
    assert stored.ic.seed == 99 and stored.dealias == "padded" and stored.strict_nyquist
    # flags beat the environment
    assert main(["run", "--seed", "5", "--out", str(tmp_path / "flag")]) == EXIT_OK
    assert parse_config((tmp_path / "flag" / "config.json").read_text()).ic.seed == 5


def test_picard_command(tmp_path, capsys):
    cfg = write_cfg(tmp_path, T=1.0, ic={"kind": "two_mode", "amplitude": 1e-3})
    assert main(["picard", "--config", cfg, "--out", str(tmp_path / "p")]) == EXIT_OK
    rep = json.loads((tmp_path / "p" / "picard.json").read_text())
    assert rep["diagnostics"]["contraction"]["status"] == "pass"
    assert rep["diagnostics"]["mild_residual"]["status"] == "pass"
    head, rows = io.read_csv(tmp_path / "p" / "picard.csv")
    assert head == ["iteration", "diff", "ep_norm", "factor"] and len(rows) >= 2


def test_picard_large_data_flagged(tmp_path):
    cfg = write_cfg(tmp_path, T=1.0, ic={"kind": "two_mode", "amplitude": 10.0})
    assert main(["picard", "--config", cfg, "--out", str(tmp_path / "p")]) == EXIT_OK
    rep = json.loads((tmp_path / "p" / "picard.json").read_text())
    assert rep["diagnostics"]["contraction"]["status"] == "flag"


@pytest.mark.parametrize("workers", ["1", "3"])
def test_sweep(tmp_path, workers):
    cfg = write_cfg(tmp_path, sweep={"param": "ic.amplitude", "values": [1e-3, 1e-2, 1e-1]})
    out = tmp_path / "s"
    assert main(["sweep", "--config", cfg, "--out", str(out), "--workers", workers]) == EXIT_OK
    points = sorted(p.name for p in out.iterdir() if p.is_dir())
    assert points == ["point_000", "point_001", "point_002"]
    head, rows = io.read_csv(out / "threshold_table.csv")
    assert [r[head.index("value")] for r in rows] == ["0.001", "0.01", "0.1"]
    assert all(r[head.index("contracted")] == "true" for r in rows)
    for p in points:
        assert (out / p / "verdict.json").exists() and (out / p / "picard.json").exists()


def test_sweep_outputs_independent_of_workers(tmp_path):
    cfg = write_cfg(tmp_path, sweep={"param": "ic.amplitude", "values": [1e-2, 1e-1]})
    main(["sweep", "--config", cfg, "--out", str(tmp_path / "a"), "--workers", "1"])
    main(["sweep", "--config", cfg, "--out", str(tmp_path / "b"), "--workers", "2"])
    ta, tb = tree(tmp_path / "a"), tree(tmp_path / "b")
    # the top-level config records the worker count; everything else matches
    for key in ("config.json", "manifest.json", "threshold.json"):
        ta.pop(key), tb.pop(key)
    assert ta == tb


def test_selftest_exit_zero(capsys):
    assert main(["selftest"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "FAIL" not in out and out.count("PASS") >= 10


@pytest.mark.parametrize("extra, status", [(0.0, "fail"), (1.0, "flag")])
def test_linf_failure_flagged_when_h15_blows_up(extra, status):
    from darcy_ec.evolution import Trajectory
    from darcy_ec.report import build_verdict
    from darcy_ec.spectral import field_from_function
    g = Grid(32)
    a = field_from_function(g, lambda x, y: np.cos(x))
    b = field_from_function(g, lambda x, y: 2 * np.cos(x) + extra * np.cos(10 * x))
    traj = Trajectory(g, np.array([0.0, 0.1]), np.stack([a.coeffs, b.coeffs]), 1.0, 0.0)
    cfg = parse_config('{"n":32,"alpha":1.0,"T":0.1,"dt":0.1,"ic":{"kind":"single_mode"},'
                       '"diagnostics":["linf_decay"]}')
    entry = build_verdict(cfg, traj).entries["linf_decay"]
    assert entry["status"] == status
    assert entry["params"]["c"] < 0
