"""Configuration-driven experiment runner.

A run is described by one JSON object::

    {
      "mesh": {"dim": 2, "bounds": [1, 1], "nx": 32, "ny": 32, "alpha": 0.5},
      "time": {"n_t": 64, "T": 8.0, "padding": 1},
      "source": {"manufactured": "bump-sine", "amplitude": 1.0},
      "iteration": {"method": "robin_robin", "s": 1.0, "tol": 1e-10},
      "sweep": {"s": [0.5, 1, 2]},
      "output": {"dir": "out", "record_timing": false},
      "seed": 0, "workers": 1
    }

Every sweep point writes ``iterations_NNN.csv``; the run writes
``summary.csv`` and ``summary.json``.  Without ``record_timing`` the
``seconds`` column is left empty so that repeated runs are byte-identical.
"""
from __future__ import annotations

import csv
import dataclasses
import hashlib
import itertools
import json
import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .femgrid import build_mesh, decompose
from .fractime import TimeGrid
from .interface import METHODS, REPORT_COLUMNS, InterfaceSystem, IterationConfig
from .manufactured import MANUFACTURED_IDS, manufactured
from .solver import SpaceTimeSystem

log = logging.getLogger(__name__)

__all__ = ["ConfigError", "ExperimentConfig", "RunSummary", "load_config", "run_experiment",
           "OUT_ENV", "EXIT_OK", "EXIT_ERROR", "EXIT_MAX_ITER"]

OUT_ENV = "HEATDD_OUT"
EXIT_OK, EXIT_ERROR, EXIT_MAX_ITER = 0, 1, 2
SUMMARY_COLUMNS = ("point", "method", "s", "phi", "h", "n_t", "iterations", "converged",
                   "diverged", "err_L2Gamma", "err_Z", "err_L2Lambda", "err_L2H1_u", "err_W_u",
                   "pr_residual", "tail_energy", "csv")
TAIL_FRACTION = 0.125


class ConfigError(ValueError):
    """Invalid configuration; the message starts with the offending field."""


@dataclass
class ExperimentConfig:
    dim: int = 2
    bounds: tuple = (1.0, 1.0)
    nx: int = 16
    ny: int = 16
    alpha: float = 0.5
    n_t: int = 64
    T: float = 8.0
    padding: int = 2
    source: dict = field(default_factory=lambda: {"manufactured": "bump-sine", "amplitude": 1.0})
    iteration: IterationConfig = field(default_factory=IterationConfig)
    sweep: dict = field(default_factory=dict)
    out: str = "heatdd_out"
    record_timing: bool = False
    seed: int = 0
    workers: int = 1
    base_dir: Path = Path(".")

    def canonical(self) -> dict:
        d = dataclasses.asdict(self)
        d.pop("base_dir")
        d.pop("out")
        d.pop("workers")
        d["bounds"] = list(self.bounds)
        return d

    def hash(self) -> str:
        blob = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def points(self) -> list:
        """Cartesian product of the sweep axes as override dicts."""
        axes = [(k, self.sweep[k]) for k in ("s", "phi", "h", "n_t") if k in self.sweep]
        if not axes:
            return [{}]
        keys = [k for k, _ in axes]
        return [dict(zip(keys, combo)) for combo in itertools.product(*(v for _, v in axes))]


def _take(section: dict, name: str, key: str, kind, default):
    if key not in section:
        return default
    value = section[key]
    try:
        if kind is int and (isinstance(value, bool) or int(value) != value):
            raise TypeError
        return kind(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{name}.{key}: expected {kind.__name__}, got {value!r}") from None


def _known(section: dict, name: str, keys) -> None:
    extra = set(section) - set(keys)
    if extra:
        raise ConfigError(f"{name}: unknown keys {sorted(extra)}")


def parse_config(raw: dict, base_dir: Path = Path(".")) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config: top level must be a JSON object")
    _known(raw, "config", ("mesh", "time", "source", "iteration", "sweep", "output", "seed",
                           "workers"))
    cfg = ExperimentConfig(base_dir=base_dir)

    mesh = raw.get("mesh", {})
    _known(mesh, "mesh", ("dim", "bounds", "nx", "ny", "alpha"))
    cfg.dim = _take(mesh, "mesh", "dim", int, 2)
    if cfg.dim not in (1, 2):
        raise ConfigError(f"mesh.dim: must be 1 or 2, got {cfg.dim}")
    bounds = mesh.get("bounds", [1.0] * cfg.dim)
    bounds = [bounds] if np.isscalar(bounds) else list(bounds)
    if len(bounds) != cfg.dim or not all(float(b) > 0 for b in bounds):
        raise ConfigError(f"mesh.bounds: expected {cfg.dim} positive lengths, got {bounds}")
    cfg.bounds = tuple(float(b) for b in bounds)
    cfg.nx = _take(mesh, "mesh", "nx", int, 16)
    cfg.ny = _take(mesh, "mesh", "ny", int, cfg.nx if cfg.dim == 2 else 0)
    if cfg.nx < 3 or (cfg.dim == 2 and cfg.ny < 3):
        raise ConfigError(f"mesh.nx/ny: need at least 3 cells, got {cfg.nx}, {cfg.ny}")
    cfg.alpha = _take(mesh, "mesh", "alpha", float, cfg.bounds[0] / 2)

    tsec = raw.get("time", {})
    _known(tsec, "time", ("n_t", "T", "padding"))
    cfg.n_t = _take(tsec, "time", "n_t", int, 64)
    cfg.T = _take(tsec, "time", "T", float, 8.0)
    cfg.padding = _take(tsec, "time", "padding", int, 2)
    try:
        TimeGrid.from_period(cfg.n_t, cfg.T, cfg.padding)
    except ValueError as exc:
        raise ConfigError(f"time: {exc}") from None

    src = dict(raw.get("source", cfg.source))
    _known(src, "source", ("manufactured", "amplitude", "file"))
    if ("manufactured" in src) == ("file" in src):
        raise ConfigError("source: give exactly one of 'manufactured' or 'file'")
    if "manufactured" in src and src["manufactured"] not in MANUFACTURED_IDS:
        raise ConfigError(f"source.manufactured: unknown id {src['manufactured']!r}; "
                          f"expected one of {MANUFACTURED_IDS}")
    if "file" in src:
        path = (base_dir / src["file"]).resolve()
        if not path.is_file():
            raise ConfigError(f"source.file: {path} does not exist")
        src["file"] = str(path)
    src["amplitude"] = _take(src, "source", "amplitude", float, 1.0)
    cfg.source = src

    it = raw.get("iteration", {})
    known = {f.name for f in dataclasses.fields(IterationConfig)}
    _known(it, "iteration", known)
    if "method" in it and it["method"] not in METHODS:
        raise ConfigError(f"iteration.method: unknown method {it['method']!r}; "
                          f"expected one of {METHODS}")
    typed = {}
    for f in dataclasses.fields(IterationConfig):
        if f.name in it:
            kind = {"int": int, "float": float}.get(f.type, str)
            typed[f.name] = _take(it, "iteration", f.name, kind, None)
    cfg.iteration = IterationConfig(**typed)

    sweep = raw.get("sweep", {})
    _known(sweep, "sweep", ("s", "phi", "h", "n_t"))
    cfg.sweep = {}
    for key, values in sweep.items():
        if not isinstance(values, list) or not values:
            raise ConfigError(f"sweep.{key}: must be a nonempty list")
        kind = int if key == "n_t" else float
        cfg.sweep[key] = [_take({key: v}, "sweep", key, kind, None) for v in values]

    out = raw.get("output", {})
    _known(out, "output", ("dir", "record_timing"))
    cfg.out = str(out.get("dir", cfg.out))
    cfg.record_timing = bool(out.get("record_timing", False))
    cfg.seed = _take(raw, "config", "seed", int, 0)
    cfg.workers = _take(raw, "config", "workers", int, 1)
    if cfg.workers < 1:
        raise ConfigError(f"config.workers: must be >= 1, got {cfg.workers}")

    for point in cfg.points():
        try:
            _point_iteration(cfg, point).validate()
        except ValueError as exc:
            raise ConfigError(f"iteration.{exc}") from None
    return cfg


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError(f"config: file {path} not found") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config: invalid JSON ({exc})") from None
    return parse_config(raw, path.parent)


def _point_iteration(cfg: ExperimentConfig, point: dict) -> IterationConfig:
    over = {k: point[k] for k in ("s", "phi") if k in point}
    return dataclasses.replace(cfg.iteration, seed=cfg.seed, **over)


@dataclass
class RunSummary:
    config_hash: str
    out_dir: Path
    points: list
    files: list
    exit_code: int
    seconds: float

    def to_json(self) -> dict:
        return {"config_hash": self.config_hash, "exit_code": self.exit_code,
                "seconds": self.seconds, "files": [str(f) for f in self.files],
                "points": self.points}


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_iterations_csv(path: Path, records: list, record_timing: bool) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\r\n")
        writer.writerow(REPORT_COLUMNS)
        for rec in records:
            row = [_fmt(rec[c]) for c in REPORT_COLUMNS[:-1]]
            row.append(_fmt(rec["seconds"]) if record_timing else "")
            writer.writerow(row)


def _load_source(cfg: ExperimentConfig, mesh, grid: TimeGrid) -> tuple:
    """Nodal source on the (padded) grid and the exact solution when known."""
    src = cfg.source
    if "manufactured" in src:
        prob = manufactured(src["manufactured"], mesh, grid, src["amplitude"])
        return prob.f, prob.u_exact
    path = Path(src["file"])
    data = np.loadtxt(path, delimiter=",", ndmin=2) if path.suffix == ".csv" else np.load(path)
    n_t = grid.n_t // cfg.padding
    if data.shape != (n_t, mesh.n_free):
        raise ConfigError(f"source.file: expected shape ({n_t}, {mesh.n_free}), got {data.shape}")
    f = np.zeros((grid.n_t, mesh.n_free))
    f[:n_t] = src["amplitude"] * data
    return f, None


def tail_energy(system: SpaceTimeSystem, u: np.ndarray) -> float:
    """Share of the ``L2(Omega)`` energy of ``u`` in the last eighth of the window."""
    _, M = system.matrices(0)
    per_t = np.einsum("ti,ti->t", u, (M @ u.T).T)
    total = per_t.sum()
    if total <= 0:
        return 0.0
    n_tail = max(1, int(round(TAIL_FRACTION * len(per_t))))
    return float(per_t[-n_tail:].sum() / total)


def _run_point(cfg: ExperimentConfig, index: int, point: dict, out_dir: Path) -> dict:
    n_t = int(point.get("n_t", cfg.n_t))
    nx, ny = cfg.nx, cfg.ny
    if "h" in point:
        h = float(point["h"])
        nx = max(3, int(round(cfg.bounds[0] / h)))
        ny = max(3, int(round(cfg.bounds[1] / h))) if cfg.dim == 2 else 0
    grid = TimeGrid.from_period(n_t, cfg.T, cfg.padding)
    mesh = build_mesh(cfg.dim, cfg.bounds, nx, ny)
    dec = decompose(mesh, cfg.alpha)
    system = SpaceTimeSystem(grid, mesh, dec, workers=1)
    iface = InterfaceSystem(system)
    itcfg = _point_iteration(cfg, point)
    f, _ = _load_source(cfg, mesh, grid)
    report = iface.run(itcfg, f)
    name = f"iterations_{index:03d}.csv"
    write_iterations_csv(out_dir / name, report.records, cfg.record_timing)
    f1, f2 = iface.subdomain_sources(f)
    u = dec.paste(iface.reconstruct(1, report.eta1, f1), iface.reconstruct(2, report.eta2, f2))
    final = report.final
    row = {"point": index, "method": itcfg.method, "s": itcfg.s, "phi": itcfg.phi,
           "h": mesh.h, "n_t": grid.n_t, "iterations": report.iterations,
           "converged": report.converged, "diverged": report.diverged,
           **{k: final[k] for k in REPORT_COLUMNS[1:-1]},
           "tail_energy": tail_energy(system, u), "csv": name}
    for w in report.warnings:
        log.warning("point %d: %s", index, w)
    row["_seconds"] = report.seconds
    return row


def resolve_out_dir(cfg: ExperimentConfig, override: str | None = None) -> Path:
    """Output directory: command-line flag, then environment, then config."""
    if override:
        return Path(override)
    if os.environ.get(OUT_ENV):
        return Path(os.environ[OUT_ENV])
    path = Path(cfg.out)
    return path if path.is_absolute() else cfg.base_dir / path


def run_experiment(cfg: ExperimentConfig, out_dir: Path | None = None) -> RunSummary:
    """Run every sweep point of ``cfg`` and write the CSV artifacts."""
    out_dir = Path(out_dir) if out_dir is not None else resolve_out_dir(cfg)
    out_dir.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    points = cfg.points()
    if cfg.workers > 1 and len(points) > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            rows = list(pool.map(lambda ip: _run_point(cfg, ip[0], ip[1], out_dir),
                                 enumerate(points)))
    else:
        rows = [_run_point(cfg, i, p, out_dir) for i, p in enumerate(points)]

    files = [out_dir / r["csv"] for r in rows]
    summary_csv = out_dir / "summary.csv"
    with open(summary_csv, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\r\n")
        writer.writerow(SUMMARY_COLUMNS)
        for r in rows:
            writer.writerow([_fmt(r[c]) for c in SUMMARY_COLUMNS])
    files.append(summary_csv)

    if any(r["diverged"] or not r["converged"] for r in rows):
        code = EXIT_MAX_ITER
    else:
        code = EXIT_OK
    points_meta = [{**{k: v for k, v in r.items() if not k.startswith("_")},
                    "seconds": r["_seconds"]} for r in rows]
    summary = RunSummary(cfg.hash(), out_dir, points_meta, files, code,
                         time.perf_counter() - t0)
    summary_json = out_dir / "summary.json"
    files.append(summary_json)
    payload = summary.to_json()
    payload["config"] = cfg.canonical()
    summary_json.write_text(json.dumps(payload, indent=2, sort_keys=True, default=_fmt))
    return summary
