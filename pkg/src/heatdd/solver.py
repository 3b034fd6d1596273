"""Frequency-diagonalized space-time solves for the heat equation.

After a DFT in time the discrete space-time operator splits into one
complex elliptic problem ``(1j*xi_k*M + K) u_k = b_k`` per frequency.
Real fields only need the one-sided spectrum (``numpy.fft.rfft``), so all
per-mode data below is indexed by ``k = 0 .. n_t // 2``.

Fields are plain arrays of shape ``(n_t, n_nodes)``: ``n_free`` nodes for
whole-domain fields (``side=0``), subdomain-local nodes (interior then
interface) for ``side`` 1 or 2, and interface nodes for interface fields.
"""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .femgrid import Decomposition, SparseOperators, SpaceMesh, assemble, lambda_gram
from .fractime import ContractError, TimeGrid

log = logging.getLogger(__name__)

__all__ = ["SpaceTimeSystem", "SolverError"]

RESIDUAL_TOL = 1e-12
NORM_TAGS = ("L2H1", "W", "Z", "L2Lambda", "L2Gamma")


class SolverError(RuntimeError):
    """A per-frequency solve failed."""

    def __init__(self, message: str, mode: int):
        super().__init__(f"{message} (frequency index {mode})")
        self.mode = mode


class SpaceTimeSystem:
    """Per-frequency block systems for one mesh, decomposition and time grid.

    Parameters
    ----------
    grid, mesh, dec :
        Time grid, spatial mesh and its two-subdomain decomposition.
    ops : SparseOperators, optional
        Assembled matrices; assembled here when omitted.
    cache : bool
        Keep sparse factorizations between calls.
    workers : int
        Thread count for the per-frequency loops.
    """

    def __init__(self, grid: TimeGrid, mesh: SpaceMesh, dec: Decomposition,
                 ops: SparseOperators | None = None, cache: bool = True,
                 workers: int = 1):
        self.grid = grid
        self.mesh = mesh
        self.dec = dec
        self.ops = ops if ops is not None else assemble(mesh, dec)
        self.cache = cache
        self.workers = max(1, int(workers))
        sym = grid.symbols
        self.xi = sym.half("xi")
        self.tau = sym.half("i_xi")  # time-derivative symbol per one-sided mode
        self.weights = grid.rfft_weights
        self.n_modes = grid.n_half
        self._lu = {}
        self._blocks = {}

    # ------------------------------------------------------------------
    # spectral plumbing

    def to_freq(self, u: np.ndarray) -> np.ndarray:
        return np.fft.rfft(self.grid.check(u), axis=0)

    def to_time(self, U: np.ndarray) -> np.ndarray:
        return np.fft.irfft(U, n=self.grid.n_t, axis=0)

    def _map(self, fn, modes=None):
        modes = range(self.n_modes) if modes is None else modes
        if self.workers == 1:
            return [fn(k) for k in modes]
        with ThreadPoolExecutor(self.workers) as pool:
            return list(pool.map(fn, modes))

    def matrices(self, side: int):
        """``(K, M)`` of the whole domain (``side=0``) or of a subdomain."""
        if side == 0:
            return self.ops.K, self.ops.M
        return self.ops.K_i(side), self.ops.M_i(side)

    def n_nodes(self, side: int) -> int:
        return self.mesh.n_free if side == 0 else self.dec.n_local(side)

    def n_interior(self, side: int) -> int:
        return self.dec.interior(side).shape[0]

    def operator(self, side: int, k: int) -> sp.csc_matrix:
        K, M = self.matrices(side)
        return (self.tau[k] * M + K).tocsc()

    def blocks(self, side: int):
        """Interior/interface blocks of ``K_i`` and ``M_i``."""
        if side not in self._blocks:
            K, M = self.matrices(side)
            n_i = self.n_interior(side)
            I, G = slice(0, n_i), slice(n_i, None)
            self._blocks[side] = {
                name: (mat[a][:, b].tocsc())
                for mat_name, mat in (("K", K), ("M", M))
                for name, a, b in (
                    (mat_name + "II", I, I), (mat_name + "IG", I, G),
                    (mat_name + "GI", G, I), (mat_name + "GG", G, G),
                )
            }
        return self._blocks[side]

    def block(self, side: int, name: str, k: int):
        b = self.blocks(side)
        return self.tau[k] * b["M" + name] + b["K" + name]

    def _factor(self, key, k: int, build):
        if key in self._lu:
            return self._lu[key]
        try:
            lu = spla.splu(build().astype(complex).tocsc())
        except RuntimeError as exc:  # scipy reports exact singularity this way
            raise SolverError(f"singular block {key[0]}", k) from exc
        if self.cache:
            self._lu[key] = lu
        return lu

    def full_lu(self, side: int, k: int):
        return self._factor(("full", side, k), k, lambda: self.operator(side, k))

    def interior_lu(self, side: int, k: int):
        return self._factor(("II", side, k), k, lambda: self.block(side, "II", k))

    def _checked_solve(self, lu, A, b, k: int) -> np.ndarray:
        x = lu.solve(b)
        res = np.linalg.norm(A @ x - b)
        scale = np.linalg.norm(b) + 1e-300
        if not np.all(np.isfinite(x)) or res > RESIDUAL_TOL * scale and res > 1e-300:
            raise SolverError(f"residual {res / scale:.2e} above tolerance", k)
        return x

    # ------------------------------------------------------------------
    # weak forms

    def _pair(self, side: int, U: np.ndarray, V: np.ndarray) -> float:
        K, M = self.matrices(side)
        MU = (M @ U.T).T
        KU = (K @ U.T).T
        per_mode = self.tau * np.sum(np.conj(V) * MU, axis=1) + np.sum(np.conj(V) * KU, axis=1)
        return float(np.dot(self.weights, per_mode.real))

    def _check_field(self, u: np.ndarray, side: int) -> np.ndarray:
        u = self.grid.check(np.asarray(u, dtype=float))
        if u.ndim != 2 or u.shape[1] != self.n_nodes(side):
            raise ContractError(
                f"field shape {u.shape} does not match side {side} "
                f"({self.grid.n_t}, {self.n_nodes(side)})"
            )
        return u

    def _check_iface(self, eta: np.ndarray) -> np.ndarray:
        eta = self.grid.check(np.asarray(eta, dtype=float))
        if eta.ndim != 2 or eta.shape[1] != self.dec.n_gamma:
            raise ContractError(f"interface field shape {eta.shape} does not match "
                                f"({self.grid.n_t}, {self.dec.n_gamma})")
        return eta

    def bilinear_a(self, side: int, u: np.ndarray, v: np.ndarray) -> float:
        """``a(u, v)`` (``side=0``) or ``a_i(u, v)``."""
        U = self.to_freq(self._check_field(u, side))
        V = self.to_freq(self._check_field(v, side))
        return self._pair(side, U, V)

    def load(self, side: int, f: np.ndarray) -> np.ndarray:
        """One-sided spectrum of the Galerkin load ``M f``."""
        _, M = self.matrices(side)
        F = self.to_freq(self._check_field(f, side))
        return (M @ F.T).T

    # ------------------------------------------------------------------
    # solves

    def solve_monodomain(self, f: np.ndarray) -> np.ndarray:
        """Whole-domain space-time solution for the nodal source ``f``."""
        B = self.load(0, f)

        def one(k):
            return self._checked_solve(self.full_lu(0, k), self.operator(0, k), B[k], k)

        return self.to_time(np.array(self._map(one)))

    def extension_spectrum(self, side: int, H: np.ndarray) -> np.ndarray:
        """Interior values of ``F_i`` for interface spectra ``H``."""
        def one(k):
            rhs = -(self.block(side, "IG", k) @ H[k])
            return self._checked_solve(self.interior_lu(side, k), self.block(side, "II", k), rhs, k)

        return np.array(self._map(one))

    def extension_F(self, side: int, eta: np.ndarray) -> np.ndarray:
        """Discrete ``a_i``-harmonic extension with trace ``eta``."""
        eta = self._check_iface(eta)
        X = self.extension_spectrum(side, self.to_freq(eta))
        n_i = self.n_interior(side)
        out = np.empty((self.grid.n_t, self.n_nodes(side)))
        out[:, :n_i] = self.to_time(X)
        out[:, n_i:] = eta
        return out

    def lift_spectrum(self, side: int, B: np.ndarray) -> np.ndarray:
        """Interior values of ``G_i`` given the subdomain load spectrum ``B``."""
        n_i = self.n_interior(side)

        def one(k):
            return self._checked_solve(self.interior_lu(side, k), self.block(side, "II", k),
                                       B[k, :n_i], k)

        return np.array(self._map(one))

    def lift_G(self, side: int, f_i: np.ndarray) -> np.ndarray:
        """Solution with zero trace on the whole subdomain boundary."""
        B = self.load(side, f_i)
        X = self.lift_spectrum(side, B)
        out = np.zeros((self.grid.n_t, self.n_nodes(side)))
        out[:, : self.n_interior(side)] = self.to_time(X)
        return out

    def trace(self, side: int, u_i: np.ndarray) -> np.ndarray:
        u_i = self._check_field(u_i, side)
        return u_i[:, self.n_interior(side):].copy()

    def residual_spectrum(self, side: int, U: np.ndarray, B: np.ndarray) -> np.ndarray:
        K, M = self.matrices(side)
        return self.tau[:, None] * (M @ U.T).T + (K @ U.T).T - B

    def flux_functional(self, side: int, u_i: np.ndarray, f_i: np.ndarray,
                        tol: float = 1e-8) -> np.ndarray:
        """Galerkin residual on the interface rows (weak normal flux of ``u_i``)."""
        U = self.to_freq(self._check_field(u_i, side))
        B = self.load(side, f_i)
        R = self.residual_spectrum(side, U, B)
        n_i = self.n_interior(side)
        K, M = self.matrices(side)
        scale = np.linalg.norm((K @ U.T).T) + np.linalg.norm(self.tau[:, None] * (M @ U.T).T) \
            + np.linalg.norm(B)
        interior = np.linalg.norm(R[:, :n_i])
        if interior > tol * scale and interior > 1e-300:
            raise ValueError(
                f"u_i does not solve the interior equations (relative residual "
                f"{interior / scale:.2e}); the flux functional is undefined"
            )
        return self.to_time(R[:, n_i:])

    # ------------------------------------------------------------------
    # norms

    def lambda_gram(self, side: int = 1) -> np.ndarray:
        return lambda_gram(self.dec, side)

    def _quad(self, side: int | None, X: np.ndarray, which: str, lambda_side: int) -> float:
        w = self.weights
        h12 = np.sqrt(1.0 + self.xi**2)
        if which in ("L2H1", "W"):
            K, M = self.matrices(side)
            k_part = np.sum(np.conj(X) * (K @ X.T).T, axis=1).real
            m_part = np.sum(np.conj(X) * (M @ X.T).T, axis=1).real
            if which == "L2H1":
                return float(np.sqrt(max(np.dot(w, k_part + m_part), 0.0)))
            return float(np.sqrt(max(np.dot(w, k_part + h12 * m_part), 0.0)))
        Mg = self.ops.M_gamma
        g_part = np.einsum("ki,ij,kj->k", np.conj(X), Mg, X).real
        if which == "L2Gamma":
            return float(np.sqrt(max(np.dot(w, g_part), 0.0)))
        L = self.lambda_gram(lambda_side)
        l_part = np.einsum("ki,ij,kj->k", np.conj(X), L, X).real
        if which == "L2Lambda":
            return float(np.sqrt(max(np.dot(w, l_part), 0.0)))
        h14 = (1.0 + self.xi**2) ** 0.25  # H^{1/4} in time on the L2(Gamma) part
        return float(np.sqrt(max(np.dot(w, h14 * g_part + l_part), 0.0)))

    def norm(self, field: np.ndarray, which: str, side: int = 0, lambda_side: int = 1) -> float:
        """``L2H1`` / ``W`` for space-time fields, ``Z`` / ``L2Lambda`` / ``L2Gamma``
        for interface fields."""
        if which not in NORM_TAGS:
            raise ValueError(f"unknown norm {which!r}; expected one of {NORM_TAGS}")
        if which in ("L2H1", "W"):
            X = self.to_freq(self._check_field(field, side))
        else:
            X = self.to_freq(self._check_iface(field))
        return self._quad(side, X, which, lambda_side)

    def spectral_norm(self, X: np.ndarray, which: str, side: int = 0,
                      lambda_side: int = 1) -> float:
        """Same as :meth:`norm` for a one-sided spectrum."""
        if which not in NORM_TAGS:
            raise ValueError(f"unknown norm {which!r}; expected one of {NORM_TAGS}")
        return self._quad(side, X, which, lambda_side)
