import csv
import json

import numpy as np
import pytest
from click.testing import CliRunner

from heatdd import build_mesh, manufactured
from heatdd.cli import main
from heatdd.fractime import TimeGrid
from heatdd.harness import OUT_ENV, ConfigError, parse_config, run_experiment
from heatdd.interface import REPORT_COLUMNS

BASE = {"mesh": {"dim": 2, "nx": 8}, "time": {"n_t": 16, "T": 8.0, "padding": 1}}


def write(tmp_path, cfg, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return p


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.reader(fh))


def test_direct_minimal(tmp_path):
    cfg = {**BASE, "iteration": {"method": "direct"}}
    res = CliRunner().invoke(main, ["run", str(write(tmp_path, cfg)), "--out", str(tmp_path / "o")])
    assert res.exit_code == 0, res.output
    rows = read_csv(tmp_path / "o" / "summary.csv")
    assert len(rows) == 2
    it = read_csv(tmp_path / "o" / "iterations_000.csv")
    assert tuple(it[0]) == REPORT_COLUMNS and len(it) == 2


def test_exact_guess_single_iteration(tmp_path):
    cfg = {**BASE, "iteration": {"method": "robin_robin", "initial_guess": "exact"}}
    res = CliRunner().invoke(main, ["run", str(write(tmp_path, cfg)), "--out", str(tmp_path / "o")])
    assert res.exit_code == 0
    it = read_csv(tmp_path / "o" / "iterations_000.csv")
    assert it[-1][0] == "1" and float(it[-1][1]) < 1e-12


def test_sweep_and_determinism(tmp_path):
    cfg = {**BASE, "iteration": {"method": "robin_robin"},
           "sweep": {"s": [0.25, 0.5, 1, 2, 4]}}
    path = write(tmp_path, cfg)
    runner = CliRunner()
    outs = []
    for name, workers in (("a", "1"), ("b", "3")):
        res = runner.invoke(main, ["run", str(path), "--out", str(tmp_path / name),
                                   "--workers", workers])
        assert res.exit_code == 0, res.output
        outs.append(tmp_path / name)
    files = sorted(p.name for p in outs[0].glob("*.csv"))
    assert files == [f"iterations_{i:03d}.csv" for i in range(5)] + ["summary.csv"]
    for name in files:
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()
    summary = read_csv(outs[0] / "summary.csv")
    assert [r[2] for r in summary[1:]] == ["0.25", "0.5", "1.0", "2.0", "4.0"]
    meta = json.loads((outs[0] / "summary.json").read_text())
    meta_b = json.loads((outs[1] / "summary.json").read_text())
    assert meta["config_hash"] == meta_b["config_hash"]


def test_max_iter_exit_code(tmp_path):
    cfg = {**BASE, "iteration": {"method": "robin_robin", "max_iter": 3}}
    res = CliRunner().invoke(main, ["run", str(write(tmp_path, cfg)), "--out", str(tmp_path / "o")])
    assert res.exit_code == 2


def test_env_out_override(tmp_path, monkeypatch):
    cfg = {**BASE, "iteration": {"method": "direct"}, "output": {"dir": "from_config"}}
    monkeypatch.setenv(OUT_ENV, str(tmp_path / "env"))
    res = CliRunner().invoke(main, ["run", str(write(tmp_path, cfg))])
    assert res.exit_code == 0
    assert (tmp_path / "env" / "summary.csv").exists()
    assert not (tmp_path / "from_config").exists()


def test_timing_column(tmp_path):
    cfg = {**BASE, "iteration": {"method": "robin_robin", "max_iter": 4},
           "output": {"record_timing": True}}
    CliRunner().invoke(main, ["run", str(write(tmp_path, cfg)), "--out", str(tmp_path / "o")])
    rows = read_csv(tmp_path / "o" / "iterations_000.csv")
    assert float(rows[-1][-1]) > 0


@pytest.mark.parametrize("cfg,field", [
    ({"mesh": {"dim": 4}}, "mesh.dim"),
    ({"mesh": {"nx": 2}}, "mesh.nx"),
    ({"time": {"n_t": 48}}, "time"),
    ({"iteration": {"method": "gmres"}}, "iteration.method"),
    ({"iteration": {"s": -1}}, "iteration.s"),
    ({"sweep": {"s": []}}, "sweep.s"),
    ({"source": {"manufactured": "nope"}}, "source.manufactured"),
    ({"source": {"file": "missing.npy"}}, "source.file"),
    ({"bogus": 1}, "config"),
])
def test_config_diagnostics(tmp_path, cfg, field):
    with pytest.raises(ConfigError, match=field.replace(".", r"\.")):
        parse_config(cfg, tmp_path)
    res = CliRunner().invoke(main, ["run", str(write(tmp_path, cfg))])
    assert res.exit_code == 1 and field in res.output


def test_source_file(tmp_path):
    mesh = build_mesh(2, (1.0, 1.0), 8, 8)
    f = manufactured("bump-sine", mesh, TimeGrid.from_period(16, 8.0)).f
    np.save(tmp_path / "f.npy", f)
    cfg = {**BASE, "time": {"n_t": 16, "T": 8.0, "padding": 2},
           "source": {"file": "f.npy"}, "iteration": {"method": "direct"}}
    summary = run_experiment(parse_config(cfg, tmp_path), tmp_path / "o")
    assert summary.exit_code == 0
    assert summary.points[0]["n_t"] == 32
    # the padded half of the window holds only the decaying tail plus the
    # ringing of a bump resolved by 16 samples
    assert summary.points[0]["tail_energy"] < 1e-3


def test_solver_failure_exit(tmp_path, monkeypatch):
    from heatdd import harness
    from heatdd.solver import SolverError

    def boom(*a, **k):
        raise SolverError("singular block", 5)

    monkeypatch.setattr(harness, "_run_point", boom)
    cfg = {**BASE, "iteration": {"method": "direct"}}
    res = CliRunner().invoke(main, ["run", str(write(tmp_path, cfg)), "--out", str(tmp_path / "o")])
    assert res.exit_code == 1 and "frequency index 5" in res.output


def test_verify_cli():
    runner = CliRunner()
    res = runner.invoke(main, ["verify", "fractime"])
    assert res.exit_code == 0 and "6/6 checks passed" in res.output
    assert runner.invoke(main, ["verify", "nonsense"]).exit_code == 2


def test_manufactured_cli(tmp_path):
    runner = CliRunner()
    res = runner.invoke(main, ["manufactured", "steady-sine", "--emit", str(tmp_path), "--n", "4",
                               "--n-t", "8"])
    assert res.exit_code == 0, res.output
    nodes = read_csv(tmp_path / "nodes.csv")
    src = np.array(read_csv(tmp_path / "source.csv")[1:], dtype=float)[:, 1:]
    u = np.array(read_csv(tmp_path / "exact.csv")[1:], dtype=float)[:, 1:]
    assert len(nodes) == 10
    np.testing.assert_allclose(src, 2 * np.pi**2 * u, rtol=1e-12)
    res = runner.invoke(main, ["manufactured", "zero", "--emit", str(tmp_path / "z"), "--n", "4",
                               "--n-t", "8"])
    z = np.array(read_csv(tmp_path / "z" / "source.csv")[1:], dtype=float)[:, 1:]
    assert np.all(z == 0)
    assert runner.invoke(main, ["manufactured", "nope", "--emit", str(tmp_path)]).exit_code == 2


def test_manufactured_1d_eigenvalue():
    mesh = build_mesh(1, 1.0, 8)
    p = manufactured("steady-sine", mesh, TimeGrid(8, 1.0))
    np.testing.assert_allclose(p.f, np.pi**2 * p.u_exact, rtol=1e-12)
    with pytest.raises(ValueError):
        manufactured("nope", mesh, TimeGrid(8, 1.0))
