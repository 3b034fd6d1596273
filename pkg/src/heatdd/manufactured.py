"""Manufactured heat-equation solutions with separable structure ``b(t) * phi(x)``.

``phi`` is the first Dirichlet eigenfunction of ``-Laplace`` on the
rectangle, so ``f = b'(t) phi + lam * b(t) phi`` holds pointwise.  The time
derivative is taken spectrally on the sampling grid; the discrete space-time
solve then carries no temporal consistency error beyond the aliasing of
``b`` itself.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .femgrid import SpaceMesh
from .fractime import TimeGrid, time_derivative

__all__ = ["MANUFACTURED_IDS", "ManufacturedProblem", "manufactured", "bump"]

MANUFACTURED_IDS = ("zero", "steady-sine", "sine-time", "bump-sine")

BUMP_CENTER = 2.5
BUMP_HALF_WIDTH = 1.5  # support [1, 4]


@dataclass(frozen=True)
class ManufacturedProblem:
    name: str
    f: np.ndarray       # (n_t, n_free) nodal source
    u_exact: np.ndarray  # (n_t, n_free) nodal samples of the exact solution
    b: np.ndarray        # temporal profile
    phi: np.ndarray      # spatial profile at free nodes
    eigenvalue: float


def bump(t: np.ndarray, center: float = BUMP_CENTER, half_width: float = BUMP_HALF_WIDTH) -> np.ndarray:
    """Smooth compactly supported ``exp(-1/(1 - tau^2))``, ``tau = (t - center)/half_width``."""
    tau = (np.asarray(t, dtype=float) - center) / half_width
    out = np.zeros_like(tau)
    inside = np.abs(tau) < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - tau[inside] ** 2))
    return out


def _eigenfunction(mesh: SpaceMesh):
    xy = mesh.nodes
    lx = mesh.bounds[0]
    phi = np.sin(np.pi * xy[:, 0] / lx)
    lam = (np.pi / lx) ** 2
    if mesh.dim == 2:
        ly = mesh.bounds[1]
        phi = phi * np.sin(np.pi * xy[:, 1] / ly)
        lam += (np.pi / ly) ** 2
    return phi, lam


def manufactured(name: str, mesh: SpaceMesh, grid: TimeGrid, amplitude: float = 1.0,
                 period: float | None = None) -> ManufacturedProblem:
    """Source and exact solution for a named manufactured case.

    Parameters
    ----------
    name : str
        One of ``MANUFACTURED_IDS``.
    period : float, optional
        Period of the ``sine-time`` profile; defaults to the grid window.
    """
    if name not in MANUFACTURED_IDS:
        raise ValueError(f"unknown manufactured id {name!r}; expected one of {MANUFACTURED_IDS}")
    phi, lam = _eigenfunction(mesh)
    t = grid.t
    if name == "zero":
        b = np.zeros(grid.n_t)
    elif name == "steady-sine":
        b = np.ones(grid.n_t)
    elif name == "sine-time":
        b = np.sin(2.0 * np.pi * t / (period or grid.period))
    else:
        b = bump(t)
    b = amplitude * b
    db = time_derivative(b, grid)
    u = np.outer(b, phi)
    f = np.outer(db + lam * b, phi)
    return ManufacturedProblem(name, f, u, b, phi, lam)
