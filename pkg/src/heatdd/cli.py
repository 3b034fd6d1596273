"""Command line entry point: ``heatdd run | verify | manufactured``."""
from __future__ import annotations

import csv
import os
import logging
import sys
from pathlib import Path

import click
import numpy as np

from .femgrid import build_mesh
from .fractime import TimeGrid
from .harness import (EXIT_ERROR, OUT_ENV, ConfigError, load_config, resolve_out_dir,
                      run_experiment)
from .manufactured import MANUFACTURED_IDS, manufactured
from .solver import SolverError
from .verify import SUITES, run_suite


@click.group()
@click.option("-v", "--verbose", count=True, help="Repeat for more logging.")
def main(verbose: int) -> None:
    """Space-time domain decomposition experiments for the heat equation."""
    level = logging.WARNING - 10 * min(verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


@main.command()
@click.argument("config", type=click.Path(dir_okay=False))
@click.option("--workers", type=click.IntRange(min=1), default=None,
              help="Concurrent sweep points (overrides config).")
@click.option("--seed", type=int, default=None, help="Seed for random initial guesses.")
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None,
              help=f"Output directory (else ${OUT_ENV}, else config).")
def run(config: str, workers: int | None, seed: int | None, out_dir: str | None) -> None:
    """Run the experiment described by CONFIG (JSON)."""
    try:
        cfg = load_config(config)
        if workers is not None:
            cfg.workers = workers
        if seed is not None:
            cfg.seed = seed
        summary = run_experiment(cfg, resolve_out_dir(cfg, out_dir))
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_ERROR)
    except SolverError as exc:
        click.echo(f"solver failure: {exc}", err=True)
        sys.exit(EXIT_ERROR)
    for p in summary.points:
        state = "converged" if p["converged"] else ("diverged" if p["diverged"] else "max_iter")
        click.echo(f"point {p['point']}: {p['method']} {state} after {p['iterations']} "
                   f"iterations, err_L2Gamma={p['err_L2Gamma']:.3e}")
    click.echo(f"wrote {len(summary.files)} files to {summary.out_dir} "
               f"(config {summary.config_hash})")
    sys.exit(summary.exit_code)


@main.command()
@click.argument("suite", type=click.Choice(SUITES + ("all",)))
def verify(suite: str) -> None:
    """Run an invariant SUITE and print one line per check."""
    checks = run_suite(suite)
    for c in checks:
        click.echo(c.line())
    failed = sum(not c.passed for c in checks)
    click.echo(f"{len(checks) - failed}/{len(checks)} checks passed")
    sys.exit(0 if failed == 0 else 1)


def _write_matrix(path: Path, t: np.ndarray, values: np.ndarray) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\r\n")
        writer.writerow(["t"] + [f"node_{j}" for j in range(values.shape[1])])
        for tj, row in zip(t, values):
            writer.writerow([repr(float(tj))] + [repr(float(v)) for v in row])


@main.command(name="manufactured")
@click.argument("case", metavar="ID", type=click.Choice(MANUFACTURED_IDS))
@click.option("--emit", "emit_dir", type=click.Path(file_okay=False), default=None,
              help="Directory for nodes.csv, source.csv and exact.csv.")
@click.option("--dim", type=click.IntRange(1, 2), default=2)
@click.option("--n", "n_cells", type=click.IntRange(min=3), default=16, help="Cells per axis.")
@click.option("--n-t", type=int, default=64)
@click.option("--period", type=float, default=8.0)
@click.option("--amplitude", type=float, default=1.0)
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None,
              help="Used when --emit is absent.")
def manufactured_cmd(case, emit_dir, dim, n_cells, n_t, period, amplitude, out_dir) -> None:
    """Write the nodal source and exact solution of a manufactured case."""
    target = emit_dir or out_dir or os.environ.get(OUT_ENV) or "."
    try:
        grid = TimeGrid.from_period(n_t, period)
    except ValueError as exc:
        raise click.BadParameter(str(exc), param_hint="--n-t/--period")
    mesh = build_mesh(dim, (1.0,) * dim, n_cells, n_cells if dim == 2 else 0)
    prob = manufactured(case, mesh, grid, amplitude)
    out = Path(target)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "nodes.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\r\n")
        writer.writerow(["node", "x", "y"])
        for j, p in enumerate(mesh.nodes):
            writer.writerow([j, repr(float(p[0])), repr(float(p[1])) if dim == 2 else "0.0"])
    _write_matrix(out / "source.csv", grid.t, prob.f)
    _write_matrix(out / "exact.csv", grid.t, prob.u_exact)
    click.echo(f"wrote nodes.csv, source.csv, exact.csv to {out}")


if __name__ == "__main__":
    main()
