"""Time-dependent Steklov-Poincare operators and interface iterations.

Per one-sided frequency ``k`` the Steklov-Poincare operator of subdomain
``i`` is the dense Schur complement

    S_i(k) = A_GG(k) - A_GI(k) A_II(k)^{-1} A_IG(k),   A(k) = 1j*xi_k*M_i + K_i,

and the Riesz map of ``L2(Gamma x R)`` is the interface mass matrix
``M_gamma``.  Every iteration below is run mode by mode on spectra of shape
``(n_modes, n_gamma)`` and reported through time-domain norms.

Sign convention for interface data: ``apply_S`` and ``chi`` return dual
vectors (Galerkin rows), so ``S eta = chi`` is the interface equation.
"""
from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .fractime import h_phi_symbol
from .solver import SolverError, SpaceTimeSystem

log = logging.getLogger(__name__)

__all__ = [
    "IterationConfig",
    "IterationReport",
    "InterfaceSystem",
    "METHODS",
    "REPORT_COLUMNS",
]

METHODS = ("robin_robin", "modified_robin_robin", "dirichlet_neumann",
           "neumann_neumann", "direct")
REPORT_COLUMNS = ("iter", "err_L2Gamma", "err_Z", "err_L2Lambda", "err_L2H1_u",
                  "err_W_u", "pr_residual", "seconds")


@dataclass
class IterationConfig:
    method: str = "robin_robin"
    s: float = 1.0
    phi: float = 0.1
    s0: float = 0.5
    s1: float = 0.25
    s2: float = 0.25
    tol: float = 1e-10
    max_iter: int = 500
    initial_guess: str = "zero"  # zero | random | exact
    seed: int = 0
    monotone_slack: float = 1e-12

    def validate(self) -> "IterationConfig":
        if self.method not in METHODS:
            raise ValueError(f"method: unknown method {self.method!r}; expected one of {METHODS}")
        if self.method in ("robin_robin", "modified_robin_robin") and not self.s > 0:
            raise ValueError(f"s: Robin parameter must be positive, got {self.s}")
        if self.method == "modified_robin_robin" and not (0.0 <= self.phi < math.pi / 2):
            raise ValueError(f"phi: must lie in [0, pi/2), got {self.phi}")
        if self.method == "dirichlet_neumann" and not (0.0 < self.s0 < 1.0):
            raise ValueError(f"s0: must lie in (0, 1), got {self.s0}")
        if self.method == "neumann_neumann" and not (self.s1 > 0 and self.s2 > 0):
            raise ValueError(f"s1, s2: must be positive, got {self.s1}, {self.s2}")
        if not self.tol > 0:
            raise ValueError(f"tol: must be positive, got {self.tol}")
        if int(self.max_iter) != self.max_iter or self.max_iter < 1:
            raise ValueError(f"max_iter: must be a positive integer, got {self.max_iter}")
        if self.initial_guess not in ("zero", "random", "exact"):
            raise ValueError(f"initial_guess: expected zero, random or exact, "
                             f"got {self.initial_guess!r}")
        return self


@dataclass
class IterationReport:
    """Per-iteration error history of one interface iteration."""

    method: str
    config: IterationConfig
    records: list = field(default_factory=list)
    converged: bool = False
    diverged: bool = False
    iterations: int = 0
    monotonicity_violations: list = field(default_factory=list)
    eta1: np.ndarray | None = None  # final interface iterates, time domain
    eta2: np.ndarray | None = None
    lambdas: tuple | None = None
    seconds: float = 0.0

    def column(self, name: str) -> np.ndarray:
        return np.array([r[name] for r in self.records])

    @property
    def final(self) -> dict:
        return self.records[-1]

    @property
    def warnings(self) -> list:
        out = []
        if self.monotonicity_violations:
            out.append(f"transformed residual increased at iterations "
                       f"{self.monotonicity_violations[:10]}")
        if self.diverged:
            out.append("iteration diverged")
        return out


def _hermitian_sqrt(A: np.ndarray):
    w, V = np.linalg.eigh(A)
    return (V * np.sqrt(w)) @ V.conj().T, (V / np.sqrt(w)) @ V.conj().T


class InterfaceSystem:
    """Steklov-Poincare machinery on top of a :class:`SpaceTimeSystem`."""

    def __init__(self, system: SpaceTimeSystem, lambda_side: int = 1):
        self.system = system
        self.dec = system.dec
        self.grid = system.grid
        self.Mg = system.ops.M_gamma
        self.Mg_inv = np.linalg.inv(self.Mg)
        self.lambda_side = lambda_side
        self._ext = {}
        self._schur = {}
        self._grams = {}

    # ------------------------------------------------------------------
    # operators

    def extension_matrices(self, side: int) -> np.ndarray:
        """``E_i(k) = -A_II^{-1} A_IG`` stacked over modes."""
        if side not in self._ext:
            sysm = self.system
            n_g = self.dec.n_gamma

            def one(k):
                rhs = -(sysm.block(side, "IG", k) @ np.eye(n_g)).astype(complex)
                return sysm.interior_lu(side, k).solve(rhs)

            self._ext[side] = np.array(sysm._map(one))
        return self._ext[side]

    def schur(self, side: int) -> np.ndarray:
        """Dense ``S_i(k)`` for all one-sided modes, shape ``(n_modes, n_g, n_g)``."""
        if side not in self._schur:
            sysm = self.system
            E = self.extension_matrices(side)
            S = []
            for k in range(sysm.n_modes):
                gg = sysm.block(side, "GG", k).toarray()
                S.append(gg + sysm.block(side, "GI", k) @ E[k])
            S = np.array(S)
            for k in range(sysm.n_modes):
                herm = 0.5 * (S[k] + S[k].conj().T)
                if np.linalg.eigvalsh(herm)[0] <= 0.0:
                    raise SolverError(f"Schur complement of side {side} lost coercivity", k)
            self._schur[side] = S
        return self._schur[side]

    def grams(self, side: int):
        """Per-mode Gram matrices of ``F_i`` in the L2xH1 and W norms."""
        if side not in self._grams:
            sysm = self.system
            K, M = sysm.matrices(side)
            E = self.extension_matrices(side)
            n_g = self.dec.n_gamma
            h12 = np.sqrt(1.0 + sysm.xi**2)
            G_l2h1, G_w = [], []
            for k in range(sysm.n_modes):
                F = np.vstack([E[k], np.eye(n_g)])
                KF, MF = K @ F, M @ F
                FK, FM = F.conj().T @ KF, F.conj().T @ MF
                G_l2h1.append(FK + FM)
                G_w.append(FK + h12[k] * FM)
            self._grams[side] = (np.array(G_l2h1), np.array(G_w))
        return self._grams[side]

    # ------------------------------------------------------------------
    # spectral helpers

    def _qform(self, A: np.ndarray, X: np.ndarray) -> np.ndarray:
        if A.ndim == 2:
            return np.einsum("ki,ij,kj->k", np.conj(X), A, X).real
        return np.einsum("ki,kij,kj->k", np.conj(X), A, X).real

    def _norm(self, A, X) -> float:
        return float(np.sqrt(max(np.dot(self.system.weights, self._qform(A, X)), 0.0)))

    def j_norm(self, X: np.ndarray) -> float:
        return self._norm(self.Mg, X)

    def dual_norm(self, Y: np.ndarray) -> float:
        """``J^{-1}``-norm of a dual spectrum."""
        return self._norm(self.Mg_inv, Y)

    @staticmethod
    def _matvec(A: np.ndarray, X: np.ndarray) -> np.ndarray:
        return np.einsum("kij,kj->ki", A, X)

    # ------------------------------------------------------------------
    # public operations

    def apply_S(self, side: int, eta: np.ndarray, matrix_free: bool = False) -> np.ndarray:
        """``S_i eta`` as an interface field of dual values."""
        sysm = self.system
        if matrix_free:
            zero = np.zeros((self.grid.n_t, sysm.n_nodes(side)))
            return sysm.flux_functional(side, sysm.extension_F(side, eta), zero)
        H = sysm.to_freq(sysm._check_iface(eta))
        return sysm.to_time(self._matvec(self.schur(side), H))

    def chi_spectrum(self, side: int, f_i: np.ndarray) -> np.ndarray:
        """Per-mode ``chi_i = (M_i f - A_i G_i f)`` on the interface rows."""
        sysm = self.system
        B = sysm.load(side, f_i)
        X = sysm.lift_spectrum(side, B)
        n_i = sysm.n_interior(side)
        out = np.empty((sysm.n_modes, self.dec.n_gamma), dtype=complex)
        for k in range(sysm.n_modes):
            out[k] = B[k, n_i:] - sysm.block(side, "GI", k) @ X[k]
        return out

    def chi(self, side: int, f_i: np.ndarray) -> np.ndarray:
        return self.system.to_time(self.chi_spectrum(side, f_i))

    def subdomain_sources(self, f: np.ndarray):
        return self.dec.restrict(f, 1), self.dec.restrict(f, 2)

    def solve_sp_direct_spectrum(self, chi1: np.ndarray, chi2: np.ndarray,
                                 s: float = 0.0) -> np.ndarray:
        if s < 0:
            raise ValueError(f"s must be nonnegative, got {s}")
        A = self.schur(1) + self.schur(2) + s * self.Mg[None]
        return np.linalg.solve(A, (chi1 + chi2)[..., None])[..., 0]

    def solve_sp_direct(self, f: np.ndarray, s: float = 0.0) -> np.ndarray:
        """Interface solution of ``(s J + S) eta = chi``; ``s = 0`` is the interface equation."""
        f1, f2 = self.subdomain_sources(f)
        H = self.solve_sp_direct_spectrum(self.chi_spectrum(1, f1), self.chi_spectrum(2, f2), s)
        return self.system.to_time(H)

    def reconstruct(self, side: int, eta: np.ndarray, f_i: np.ndarray) -> np.ndarray:
        """``u_i = F_i eta + G_i f_i``."""
        return self.system.extension_F(side, eta) + self.system.lift_G(side, f_i)

    def cayley_contraction_check(self, s: float, k: int) -> float:
        """``M_gamma``-weighted norm of the Peaceman-Rachford composition at mode ``k``.

        ``k`` is a full DFT index in ``[0, n_t)``; negative frequencies are
        complex conjugates of positive ones and share the same norm.
        """
        if not s > 0:
            raise ValueError(f"s must be positive, got {s}")
        n_t = self.grid.n_t
        if not 0 <= k < n_t:
            raise ValueError(f"mode index must lie in [0, {n_t}), got {k}")
        kk = k if k <= n_t // 2 else n_t - k
        S1, S2 = self.schur(1)[kk], self.schur(2)[kk]
        sM = s * self.Mg
        C1 = (sM - S1) @ np.linalg.inv(sM + S1)
        C2 = (sM - S2) @ np.linalg.inv(sM + S2)
        root, root_inv = _hermitian_sqrt(self.Mg)
        T = root_inv @ (C1 @ C2) @ root
        return float(np.linalg.svd(T, compute_uv=False)[0])

    # ------------------------------------------------------------------
    # iterations

    def _initial(self, cfg: IterationConfig, exact: np.ndarray) -> np.ndarray:
        if cfg.initial_guess == "exact":
            return exact.copy()
        if cfg.initial_guess == "random":
            rng = np.random.default_rng(cfg.seed)
            eta0 = rng.standard_normal((self.grid.n_t, self.dec.n_gamma))
            return self.system.to_freq(eta0)
        return np.zeros_like(exact)

    def _errors(self, E1: np.ndarray, E2: np.ndarray) -> dict:
        rec = {}
        L = self.system.lambda_gram(self.lambda_side)
        h14 = (1.0 + self.system.xi**2) ** 0.25
        w = self.system.weights
        rec["err_L2Gamma"] = self.j_norm(E1) + self.j_norm(E2)
        rec["err_L2Lambda"] = self._norm(L, E1) + self._norm(L, E2)
        z = 0.0
        for E in (E1, E2):
            z += float(np.sqrt(max(np.dot(w, h14 * self._qform(self.Mg, E) + self._qform(L, E)), 0.0)))
        rec["err_Z"] = z
        g1, g2 = self.grams(1), self.grams(2)
        rec["err_L2H1_u"] = self._norm(g1[0], E1) + self._norm(g2[0], E2)
        rec["err_W_u"] = self._norm(g1[1], E1) + self._norm(g2[1], E2)
        return rec

    def _exact(self, chi1, chi2) -> np.ndarray:
        return self.solve_sp_direct_spectrum(chi1, chi2, 0.0)

    def run(self, cfg: IterationConfig, f: np.ndarray) -> IterationReport:
        """Run the configured method for the nodal source ``f``."""
        cfg.validate()
        f1, f2 = self.subdomain_sources(np.asarray(f, dtype=float))
        chi1, chi2 = self.chi_spectrum(1, f1), self.chi_spectrum(2, f2)
        t0 = time.perf_counter()
        exact = self._exact(chi1, chi2)
        if cfg.method == "direct":
            return self._direct(cfg, chi1, chi2, exact, t0)
        if cfg.method == "robin_robin":
            return self._peaceman_rachford(cfg, chi1, chi2, exact, symbol=None)
        if cfg.method == "modified_robin_robin":
            sym = h_phi_symbol(self.grid, cfg.phi)[: self.system.n_modes]
            return self._peaceman_rachford(cfg, chi1, chi2, exact, symbol=np.conj(sym))
        return self._fixed_point(cfg, chi1, chi2, exact)

    def _direct(self, cfg, chi1, chi2, H, t0) -> IterationReport:
        E = np.zeros_like(H)
        rec = {"iter": 1, **self._errors(E, E)}
        rec["pr_residual"] = self.dual_norm(
            self._matvec(self.schur(1) + self.schur(2), H) - chi1 - chi2)
        rec["seconds"] = time.perf_counter() - t0
        eta = self.system.to_time(H)
        return IterationReport("direct", cfg, [rec], converged=True, iterations=1,
                               eta1=eta, eta2=eta.copy(), seconds=rec["seconds"])

    def _peaceman_rachford(self, cfg, chi1, chi2, exact, symbol) -> IterationReport:
        S1, S2 = self.schur(1), self.schur(2)
        chi = chi1 + chi2
        if symbol is not None:
            S1 = symbol[:, None, None] * S1
            S2 = symbol[:, None, None] * S2
            chi = symbol[:, None] * chi
        sM = cfg.s * self.Mg[None]
        P1, P2 = sM + S1, sM + S2
        Q1, Q2 = sM - S1, sM - S2
        method = "robin_robin" if symbol is None else "modified_robin_robin"
        report = IterationReport(method, cfg)

        t0 = time.perf_counter()
        eta2 = self._initial(cfg, exact)
        eta1 = eta2.copy()
        E2 = eta2 - exact
        r0 = self.dual_norm(self._matvec(Q2, E2))
        report.records.append({"iter": 0, **self._errors(E2, E2), "pr_residual": r0,
                               "seconds": 0.0})
        scale = self.j_norm(eta2)
        # round-off floor for the monotonicity test, also meaningful when r0 == 0
        slack = cfg.monotone_slack * max(r0, self.dual_norm(chi))
        prev_r = r0
        for n in range(1, cfg.max_iter + 1):
            rhs1 = self._matvec(Q2, eta2) + chi
            new1 = np.linalg.solve(P1, rhs1[..., None])[..., 0]
            rhs2 = self._matvec(Q1, new1) + chi
            new2 = np.linalg.solve(P2, rhs2[..., None])[..., 0]
            update = max(self.j_norm(new1 - eta1) if n > 1 else 0.0, self.j_norm(new2 - eta2))
            eta1, eta2 = new1, new2
            scale = max(scale, self.j_norm(eta1), self.j_norm(eta2))
            E1, E2 = eta1 - exact, eta2 - exact
            r = self.dual_norm(self._matvec(Q2, E2))
            if r > prev_r + slack:
                report.monotonicity_violations.append(n)
            prev_r = r
            report.records.append({"iter": n, **self._errors(E1, E2), "pr_residual": r,
                                   "seconds": time.perf_counter() - t0})
            if update <= cfg.tol * scale:
                report.converged = True
                break
        report.iterations = report.records[-1]["iter"]
        report.seconds = time.perf_counter() - t0
        if report.monotonicity_violations:
            log.warning("%s: %s", method, report.warnings[0])
        report.eta1 = self.system.to_time(eta1)
        report.eta2 = self.system.to_time(eta2)
        return report

    def _fixed_point(self, cfg, chi1, chi2, exact) -> IterationReport:
        """Dirichlet-Neumann or Neumann-Neumann interface iteration."""
        S1, S2 = self.schur(1), self.schur(2)
        S = S1 + S2
        chi = chi1 + chi2
        report = IterationReport(cfg.method, cfg)
        t0 = time.perf_counter()
        eta = self._initial(cfg, exact)
        E = eta - exact
        report.records.append({"iter": 0, **self._errors(E, E),
                               "pr_residual": self.dual_norm(self._matvec(S, eta) - chi),
                               "seconds": 0.0})
        scale = self.j_norm(eta)
        lam1 = lam2 = np.zeros_like(eta)
        for n in range(1, cfg.max_iter + 1):
            res = chi - self._matvec(S, eta)
            if cfg.method == "dirichlet_neumann":
                step = cfg.s0 * np.linalg.solve(S2, res[..., None])[..., 0]
            else:
                lam1 = np.linalg.solve(S1, res[..., None])[..., 0]
                lam2 = np.linalg.solve(S2, res[..., None])[..., 0]
                step = cfg.s1 * lam1 + cfg.s2 * lam2
            eta = eta + step
            if not np.all(np.isfinite(eta)):
                report.diverged = True
                break
            update = self.j_norm(step)
            scale = max(scale, self.j_norm(eta))
            E = eta - exact
            rec = {"iter": n, **self._errors(E, E),
                   "pr_residual": self.dual_norm(self._matvec(S, eta) - chi),
                   "seconds": time.perf_counter() - t0}
            report.records.append(rec)
            if update <= cfg.tol * scale:
                report.converged = True
                break
            if n >= 20:
                before = report.records[n - 20]["err_L2Gamma"]
                if rec["err_L2Gamma"] > 10.0 * before and before > 0:
                    report.diverged = True
                    break
        report.iterations = report.records[-1]["iter"]
        report.seconds = time.perf_counter() - t0
        report.eta1 = self.system.to_time(eta)
        report.eta2 = report.eta1.copy()
        if cfg.method == "neumann_neumann":
            report.lambdas = (self.system.to_time(lam1), self.system.to_time(lam2))
        return report

    # ------------------------------------------------------------------
    # subdomain-solve form of the Robin-Robin method

    def robin_robin_subdomains(self, f: np.ndarray, s: float, eta2_0: np.ndarray,
                               n_iter: int) -> list:
        """Robin-Robin method written with subdomain solves and Robin data.

        Returns ``[(u1^n, u2^n) for n = 1..n_iter]`` as time-domain fields.
        """
        if not s > 0:
            raise ValueError(f"s must be positive, got {s}")
        sysm = self.system
        f1, f2 = self.subdomain_sources(np.asarray(f, dtype=float))
        B1, B2 = sysm.load(1, f1), sysm.load(2, f2)
        n1, n2 = sysm.n_interior(1), sysm.n_interior(2)
        robin = {}

        def lu(side, k):
            if (side, k) not in robin:
                n_i = sysm.n_interior(side)
                pad = sp.block_diag([sp.csc_matrix((n_i, n_i)), sp.csc_matrix(s * self.Mg)])
                A = (sysm.operator(side, k) + pad).astype(complex).tocsc()
                robin[(side, k)] = spla.splu(A)
            return robin[(side, k)]

        # u_2^0 = F_2 eta_2^0 + G_2 f_2
        H0 = sysm.to_freq(eta2_0)
        U2 = np.zeros((sysm.n_modes, sysm.n_nodes(2)), dtype=complex)
        U2[:, :n2] = sysm.extension_spectrum(2, H0) + sysm.lift_spectrum(2, B2)
        U2[:, n2:] = H0
        out = []
        for _ in range(n_iter):
            flux2 = sysm.residual_spectrum(2, U2, B2)[:, n2:]
            U1 = np.empty((sysm.n_modes, sysm.n_nodes(1)), dtype=complex)
            for k in range(sysm.n_modes):
                rhs = B1[k].copy()
                rhs[n1:] += s * self.Mg @ U2[k, n2:] - flux2[k]
                U1[k] = lu(1, k).solve(rhs)
            flux1 = sysm.residual_spectrum(1, U1, B1)[:, n1:]
            for k in range(sysm.n_modes):
                rhs = B2[k].copy()
                rhs[n2:] += s * self.Mg @ U1[k, n1:] - flux1[k]
                U2[k] = lu(2, k).solve(rhs)
            out.append((sysm.to_time(U1), sysm.to_time(U2)))
        return out
