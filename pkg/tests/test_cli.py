import csv
import json
import math
import shutil
import subprocess

import numpy as np
import pytest

from qic import _kernels, cli
from qic.lambda_system import coherent_info_surface

HALF = [[0.5, 0], [0, 0.5]]


def _run(tmp_path, kind, cfg, *extra):
    path = tmp_path / "config.json"
    path.write_text(json.dumps(cfg))
    return cli.main([kind, "--config", str(path), *extra])


def _scalars(text):
    out = {}
    for line in text.splitlines():
        key, _, val = line.partition(": ")
        try:
            out[key] = float(val)
        except ValueError:
            pass
    return out


def test_entropy(tmp_path, capsys):
    assert _run(tmp_path, "entropy", {"rho": HALF}) == 0
    assert _scalars(capsys.readouterr().out)["entropy"] == 1.0


def test_entropy_complex_entries(tmp_path, capsys):
    rho = [[[0.5, 0], [0, -0.5]], [[0, 0.5], [0.5, 0]]]  # pure state (|0> + i|1>)/sqrt2
    assert _run(tmp_path, "entropy", {"rho": rho}) == 0
    assert abs(_scalars(capsys.readouterr().out)["entropy"]) < 1e-12


def test_nats(tmp_path, capsys):
    assert _run(tmp_path, "entropy", {"rho": HALF}, "--nats") == 0
    out = capsys.readouterr().out
    assert "units: nats" in out
    assert _scalars(out)["entropy"] == pytest.approx(math.log(2), abs=1e-9)


def test_epsilon(tmp_path, capsys):
    out_path = tmp_path / "eps.csv"
    assert _run(tmp_path, "epsilon", {"order": 8}, "--out", str(out_path)) == 0
    rows = list(csv.reader(out_path.open()))
    assert rows[0] == ["index", "eigenvalue"]
    vals = [float(r[1]) for r in rows[1:]]
    assert np.abs(np.array(vals) - [1, 1 / 3, 1 / 3, 1 / 3]).max() < 1e-8
    assert _scalars(capsys.readouterr().out)["singlet_overlap"] == pytest.approx(1.0, abs=1e-9)


def test_bad_trace_exits_3(tmp_path, capsys):
    assert _run(tmp_path, "entropy", {"rho": [[0.6, 0], [0, 0.6]]}) == 3
    assert "trace" in capsys.readouterr().err


@pytest.mark.parametrize(
    "cfg",
    [
        {"rho": "nope"},
        {"rho": [[0.5, 0], [0]]},
        {},
        {"kind": "coherent", "rho": HALF},
        {"rho": [[True, 0], [0, 1]]},
    ],
)
def test_config_errors_exit_2(tmp_path, capsys, cfg):
    assert _run(tmp_path, "entropy", cfg) == 2
    assert "config error" in capsys.readouterr().err


def test_unreadable_config(tmp_path):
    assert cli.main(["entropy", "--config", str(tmp_path / "missing.json")]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert cli.main(["entropy", "--config", str(bad)]) == 2


def test_bad_thread_setting(tmp_path, monkeypatch):
    monkeypatch.setenv("QIC_THREADS", "many")
    assert _run(tmp_path, "entropy", {"rho": HALF}) == 2


def test_non_convergence_exits_4(tmp_path, monkeypatch, capsys):
    monkeypatch.setattr(_kernels, "MAX_SWEEPS", 0)
    rho = [[0.5, 0.25], [0.25, 0.5]]
    assert _run(tmp_path, "entropy", {"rho": rho}) == 4
    assert "converge" in capsys.readouterr().err


def test_io_failure_exits_5(tmp_path):
    out = tmp_path / "no" / "such" / "dir.csv"
    assert _run(tmp_path, "entropy", {"rho": HALF}, "--out", str(out)) == 5


def test_coherent(tmp_path, capsys):
    cfg = {"kraus": [[[1, 0], [0, 1]]], "rho": HALF}
    assert _run(tmp_path, "coherent", cfg) == 0
    s = _scalars(capsys.readouterr().out)
    assert s["coherent_information_raw"] == pytest.approx(1.0, abs=1e-12)
    assert s["entropy_exchange"] == pytest.approx(0.0, abs=1e-12)


def test_one_time_classical(tmp_path, capsys):
    cfg = {"rho": np.diag([0.25, 0.25, 0.25, 0.25]).tolist(), "dims": [2, 2]}
    assert _run(tmp_path, "one-time", cfg) == 0
    s = _scalars(capsys.readouterr().out)
    assert s["one_time_coherent_information_raw"] == pytest.approx(-1.0, abs=1e-12)
    assert s["one_time_coherent_information_clamped"] == 0.0


def test_compatible_classical(tmp_path, capsys):
    z = {"type": "basis", "vectors": [[1, 0], [0, 1]]}
    cfg = {"rho": np.diag([0.5, 0, 0, 0.5]).tolist(), "dims": [2, 2], "measure_a": z, "measure_b": z}
    assert _run(tmp_path, "compatible", cfg) == 0
    assert _scalars(capsys.readouterr().out)["compatible_information_raw"] == pytest.approx(1.0, abs=1e-10)


def _surface_cfg():
    return {"gamma_t": {"start": 0.5, "stop": 3.0, "count": 2}, "theta": [1.0, 3.141592653589793]}


def test_surface_csv(tmp_path):
    out = tmp_path / "s.csv"
    assert _run(tmp_path, "lambda-surface", _surface_cfg(), "--out", str(out)) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "gamma_t,theta,value"
    assert len(lines) == 5
    gt, th, val = lines[4].split(",")
    assert (gt, th) == ("3", "3.14159265")
    assert float(val) == pytest.approx(0.6752204473459835, rel=1e-8)


def test_surface_rerun_byte_identical(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert _run(tmp_path, "lambda-surface", _surface_cfg(), "--out", str(a)) == 0
    assert _run(tmp_path, "lambda-surface", _surface_cfg(), "--out", str(b)) == 0
    assert a.read_bytes() == b.read_bytes()


def test_surface_json_round_trip(tmp_path):
    out = tmp_path / "s.json"
    assert _run(tmp_path, "lambda-surface", _surface_cfg(), "--out", str(out), "--format", "json") == 0
    records = json.loads(out.read_text())
    direct = coherent_info_surface([0.5, 3.0], [1.0, np.pi]).rows()
    for rec, row in zip(records, direct):
        assert list(rec) == ["gamma_t", "theta", "value"]
        assert np.allclose([rec["gamma_t"], rec["theta"], rec["value"]], row, atol=1e-9, rtol=0)


def test_emit_surface_direct(tmp_path):
    out = tmp_path / "direct.csv"
    cli.emit_surface(coherent_info_surface([1.0], [0.0, 2.0]), "csv", out)
    assert out.read_text().splitlines()[0] == "gamma_t,theta,value"
    with pytest.raises(ValueError):
        cli.emit_surface([], "csv", out)


def test_lambda_rate(tmp_path, capsys):
    cfg = {"gamma1": 1.0, "gamma2": 1.0, "n_t": 32, "n_theta": 32, "n_coupling": 0}
    assert _run(tmp_path, "lambda-rate", cfg) == 0
    s = _scalars(capsys.readouterr().out)
    assert s["rate_per_gamma"] == pytest.approx(0.35681852633458877, rel=1e-5)
    assert s["rate_per_total_gamma"] == pytest.approx(s["rate_per_gamma"] / 2, rel=1e-9)


def test_setup_capacity_with_controls(tmp_path, capsys):
    z = {"type": "basis", "angle": 0.0}
    cfg = {
        "preparation": z,
        "measurement": {"type": "basis", "angle": "$phi"},
        "rho_in": HALF,
        "controls": {"phi": [0.0, 0.39269908169872414, 0.7853981633974483]},
    }
    out = tmp_path / "cap.csv"
    assert _run(tmp_path, "setup-capacity", cfg, "--out", str(out)) == 0
    s = _scalars(capsys.readouterr().out)
    assert s["best_phi"] == 0.0 and s["capacity_raw"] == pytest.approx(1.0, abs=1e-12)
    rows = list(csv.reader(out.open()))
    assert rows[0] == ["phi", "capacity"] and len(rows) == 4


def test_setup_capacity_bit_flip(tmp_path, capsys):
    q = 0.1
    cfg = {
        "preparation": {"type": "projectors", "states": [[1, 0], [0, 1]], "weights": [1, 1]},
        "channel": {"kraus": [[[math.sqrt(1 - q), 0], [0, math.sqrt(1 - q)]], [[0, math.sqrt(q)], [math.sqrt(q), 0]]]},
        "measurement": {"type": "basis"},
        "rho_in": HALF,
    }
    assert _run(tmp_path, "setup-capacity", cfg) == 0
    assert _scalars(capsys.readouterr().out)["capacity_raw"] == pytest.approx(0.5310044064107188, abs=1e-9)


def test_unknown_control_reference(tmp_path):
    cfg = {"preparation": {"type": "basis", "angle": "$nope"}, "measurement": {"type": "basis"}, "rho_in": HALF}
    assert _run(tmp_path, "setup-capacity", cfg) == 2


def test_parse_helpers():
    assert cli.parse_grid({"start": 0, "stop": 1, "count": 3}).tolist() == [0.0, 0.5, 1.0]
    with pytest.raises(cli.ConfigError):
        cli.parse_grid({"start": 0, "stop": 1, "count": 0})
    with pytest.raises(cli.ConfigError):
        cli.parse_grid([])
    m = cli.parse_matrix([[[1, 2], 0], [0, [3, -4]]])
    assert m[0, 0] == 1 + 2j and m[1, 1] == 3 - 4j


@pytest.mark.skipif(shutil.which("qic") is None, reason="console script not installed")
def test_console_script(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"rho": HALF}))
    res = subprocess.run(["qic", "entropy", "--config", str(path)], capture_output=True, text=True)
    assert res.returncode == 0 and "entropy: 1" in res.stdout
