"""Named invariant suites run by ``heatdd verify``.

Each check yields a :class:`Check` with the measured value, the threshold
and the comparison, so callers can print margins rather than bare booleans.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .femgrid import build_mesh, decompose
from .fractime import TimeGrid, half_derivative, hilbert, h_phi, hs_norm, l2_inner, time_derivative
from .interface import InterfaceSystem
from .manufactured import manufactured
from .solver import SpaceTimeSystem

log = logging.getLogger(__name__)

__all__ = ["Check", "SUITES", "run_suite", "desk_system"]

SUITES = ("fractime", "coercivity", "equivalence", "cayley")


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    threshold: float
    relation: str = "<="  # value <relation> threshold

    @property
    def passed(self) -> bool:
        if not np.isfinite(self.value):
            return False
        if self.relation == "<=":
            return self.value <= self.threshold
        if self.relation == "<":
            return self.value < self.threshold
        return self.value > self.threshold

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"[{tag}] {self.name}: {self.value:.3e} {self.relation} {self.threshold:.1e}"


def desk_system(n: int = 32, n_t: int = 64, period: float = 8.0, dim: int = 2,
                alpha: float = 0.5, workers: int = 1):
    """Unit-square (or unit-interval) system with ``n`` cells per axis."""
    grid = TimeGrid.from_period(n_t, period)
    mesh = build_mesh(dim, (1.0,) * dim, n, n if dim == 2 else 0)
    dec = decompose(mesh, alpha)
    system = SpaceTimeSystem(grid, mesh, dec, workers=workers)
    return system, InterfaceSystem(system)


# ----------------------------------------------------------------------
# fractional calculus

def fractime_checks(n_values=(64, 256), samples: int = 100, seed: int = 0,
                    tol: float = 1e-10) -> list:
    """Worst relative error of the three half-derivative identities."""
    rng = np.random.default_rng(seed)
    out = []
    for n_t in n_values:
        grid = TimeGrid(n_t, 8.0 / n_t)
        e1 = e2 = e3 = 0.0
        for _ in range(samples):
            v = rng.standard_normal(n_t)
            w = rng.standard_normal(n_t)
            plus = half_derivative(v, grid, "plus")
            minus_h = half_derivative(hilbert(v, grid), grid, "minus")
            e1 = max(e1, np.sqrt(l2_inner(plus + minus_h, plus + minus_h, grid))
                     / hs_norm(v, grid, 0.0))
            cross = l2_inner(plus, half_derivative(v, grid, "minus"), grid)
            e2 = max(e2, abs(cross) / hs_norm(v, grid, 0.5) ** 2)
            lhs = l2_inner(time_derivative(v, grid), w, grid)
            rhs = l2_inner(plus, half_derivative(w, grid, "minus"), grid)
            scale = hs_norm(v, grid, 0.5) * hs_norm(w, grid, 0.5)
            e3 = max(e3, abs(lhs - rhs) / scale)
        out += [
            Check(f"plus(v) = -minus(H v), n_t={n_t}", e1, tol),
            Check(f"(plus v, minus v) = 0, n_t={n_t}", e2, tol),
            Check(f"(d_t v, w) = (plus v, minus w), n_t={n_t}", e3, tol),
        ]
    return out


# ----------------------------------------------------------------------
# coercivity

def coercivity_values(system: SpaceTimeSystem, iface: InterfaceSystem, phi: float = 0.1,
                      samples: int = 100, seed: int = 0) -> dict:
    """Minimum Rayleigh quotients of the rotated forms over random samples.

    Returns ``{"a_1": ..., "a_2": ..., "S_1": ..., "S_2": ...}`` where
    ``a_i`` is ``a_i(v, H^phi v) / |v|_W^2`` and ``S_i`` is
    ``<S_i eta, H^phi eta> / |eta|_Z^2``.
    """
    rng = np.random.default_rng(seed)
    grid = system.grid
    out = {}
    for side in (1, 2):
        n = system.n_nodes(side)
        q = np.inf
        for _ in range(samples):
            v = rng.standard_normal((grid.n_t, n))
            val = system.bilinear_a(side, v, h_phi(v, grid, phi))
            q = min(q, val / system.norm(v, "W", side) ** 2)
        out[f"a_{side}"] = q
    for side in (1, 2):
        q = np.inf
        for _ in range(samples):
            eta = rng.standard_normal((grid.n_t, system.dec.n_gamma))
            val = grid.dt * np.sum(iface.apply_S(side, eta) * h_phi(eta, grid, phi))
            q = min(q, val / system.norm(eta, "Z") ** 2)
        out[f"S_{side}"] = q
    return out


def coercivity_checks(n: int = 16, n_t: int = 64, phi: float = 0.1, samples: int = 100,
                      seed: int = 0) -> list:
    system, iface = desk_system(n, n_t)
    vals = coercivity_values(system, iface, phi, samples, seed)
    for k, v in vals.items():
        log.info("min rotated Rayleigh quotient %s = %.6e", k, v)
    labels = {"a_1": "a_1(v, H^phi v)/|v|_W^2", "a_2": "a_2(v, H^phi v)/|v|_W^2",
              "S_1": "<S_1 eta, H^phi eta>/|eta|_Z^2", "S_2": "<S_2 eta, H^phi eta>/|eta|_Z^2"}
    return [Check(f"min {labels[k]}, phi={phi}", v, 1e-6, ">") for k, v in vals.items()]


# ----------------------------------------------------------------------
# equivalence of formulations

def equivalence_values(system: SpaceTimeSystem, iface: InterfaceSystem, f: np.ndarray) -> dict:
    """Relative pairwise gaps between monodomain, SP-direct and pasted DD solutions."""
    dec = system.dec
    u = system.solve_monodomain(f)
    eta = iface.solve_sp_direct(f)
    f1, f2 = iface.subdomain_sources(f)
    u1 = iface.reconstruct(1, eta, f1)
    u2 = iface.reconstruct(2, eta, f2)
    u_dd = dec.paste(u1, u2)
    trace_mono = u[:, dec.gamma]
    g_scale = system.norm(trace_mono, "L2Gamma")
    u_scale = system.norm(u, "L2H1")
    return {
        "trace(mono) vs eta [L2Gamma]": system.norm(trace_mono - eta, "L2Gamma") / g_scale,
        "trace(mono) vs trace(dd) [L2Gamma]":
            system.norm(trace_mono - u_dd[:, dec.gamma], "L2Gamma") / g_scale,
        "eta vs trace(dd) [L2Gamma]": system.norm(eta - u_dd[:, dec.gamma], "L2Gamma") / g_scale,
        "mono vs dd [L2H1]": system.norm(u - u_dd, "L2H1") / u_scale,
    }


def equivalence_checks(n: int = 32, n_t: int = 64, tol: float = 1e-10) -> list:
    system, iface = desk_system(n, n_t)
    f = manufactured("bump-sine", system.mesh, system.grid).f
    return [Check(k, v, tol) for k, v in equivalence_values(system, iface, f).items()]


# ----------------------------------------------------------------------
# Cayley transforms

def cayley_values(iface: InterfaceSystem, s: float) -> np.ndarray:
    """Composition norm at every one-sided mode."""
    return np.array([iface.cayley_contraction_check(s, k) for k in range(iface.system.n_modes)])


def cayley_checks(n: int = 32, n_t: int = 64, s_values=(0.5, 1.0, 2.0)) -> list:
    _, iface = desk_system(n, n_t)
    out = []
    for s in s_values:
        vals = cayley_values(iface, s)
        out.append(Check(f"max_k |C_1 C_2|, s={s}", float(vals.max()), 1.0 + 1e-12))
        out.append(Check(f"|C_1 C_2| at xi=0, s={s}", float(vals[0]), 1.0, "<"))
    return out


def run_suite(name: str) -> list:
    if name == "all":
        return [c for s in SUITES for c in run_suite(s)]
    table = {"fractime": fractime_checks, "coercivity": coercivity_checks,
             "equivalence": equivalence_checks, "cayley": cayley_checks}
    if name not in table:
        raise ValueError(f"unknown suite {name!r}; expected one of {SUITES + ('all',)}")
    return table[name]()
