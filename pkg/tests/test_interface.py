import dataclasses

import numpy as np
import pytest

from heatdd import IterationConfig, manufactured
from heatdd.fractime import h_phi

from conftest import make_system


def source(system, name="bump-sine"):
    return manufactured(name, system.mesh, system.grid).f


def tridiag_schur_1d(xi, h, n_int):
    """Schur complement of a 1D P1 interval by continued-fraction elimination."""
    a = 1j * xi * 4 * h / 6 + 2 / h
    b = 1j * xi * h / 6 - 1 / h
    d = a
    for _ in range(n_int - 1):
        d = a - b * b / d
    return 1j * xi * 2 * h / 6 + 1 / h - b * b / d


def test_apply_S_paths_agree(skew2d, rng):
    system, iface = skew2d
    eta = rng.standard_normal((system.grid.n_t, system.dec.n_gamma))
    for side in (1, 2):
        a = iface.apply_S(side, eta)
        b = iface.apply_S(side, eta, matrix_free=True)
        assert np.max(np.abs(a - b)) <= 1e-11 * np.max(np.abs(a))
    assert np.all(iface.apply_S(1, np.zeros_like(eta)) == 0)


def test_schur_1d_recursion_oracle(small1d):
    system, iface = small1d
    h = system.mesh.hx
    for side in (1, 2):
        S = iface.schur(side)
        n_int = system.n_interior(side)
        for k in range(system.n_modes):
            ref = tridiag_schur_1d(system.tau[k].imag, h, n_int)  # Nyquist symbol is 0
            assert S[k, 0, 0] == pytest.approx(ref, rel=1e-12)


def test_schur_properties(skew2d):
    system, iface = skew2d
    for side in (1, 2):
        S = iface.schur(side)
        np.testing.assert_allclose(S[0].imag, 0.0, atol=1e-13)  # xi = 0 block is real
        for k in range(system.n_modes):
            herm = 0.5 * (S[k] + S[k].conj().T)
            assert np.linalg.eigvalsh(herm)[0] > 0
            # transpose symmetry: S(k)^T = S(k), so S(-xi) = conj(S(xi))
            np.testing.assert_allclose(S[k], S[k].T, atol=1e-12)


def test_extension_independence(skew2d, rng):
    system, iface = skew2d
    g = system.grid
    for side in (1, 2):
        n_i = system.n_interior(side)
        for _ in range(10):
            eta = rng.standard_normal((g.n_t, system.dec.n_gamma))
            mu = rng.standard_normal((g.n_t, system.dec.n_gamma))
            Fe = system.extension_F(side, eta)
            R = np.empty((g.n_t, system.n_nodes(side)))
            R[:, :n_i] = rng.standard_normal((g.n_t, n_i))
            R[:, n_i:] = mu
            ref = g.dt * np.sum(iface.apply_S(side, eta) * mu)
            alt = system.bilinear_a(side, Fe, R)
            scale = system.norm(Fe, "W", side) * system.norm(R, "W", side)
            assert abs(ref - alt) <= 1e-10 * scale


def test_chi_consistency_and_linearity(skew2d, rng):
    system, iface = skew2d
    dec = system.dec
    f = rng.standard_normal((system.grid.n_t, system.mesh.n_free))
    u = system.solve_monodomain(f)
    eta = u[:, dec.gamma]
    f1, f2 = iface.subdomain_sources(f)
    res = iface.apply_S(1, eta) + iface.apply_S(2, eta) - iface.chi(1, f1) - iface.chi(2, f2)
    assert np.max(np.abs(res)) <= 1e-10 * np.max(np.abs(iface.chi(1, f1)))
    np.testing.assert_array_equal(iface.chi(1, 2 * f1), 2 * iface.chi(1, f1))
    assert np.all(iface.chi(2, np.zeros_like(f2)) == 0)


def test_sp_direct_matches_monodomain(skew2d, rng):
    system, iface = skew2d
    f = rng.standard_normal((system.grid.n_t, system.mesh.n_free))
    eta = iface.solve_sp_direct(f)
    trace = system.solve_monodomain(f)[:, system.dec.gamma]
    assert system.norm(eta - trace, "L2Gamma") <= 1e-10 * system.norm(trace, "L2Gamma")
    assert np.all(iface.solve_sp_direct(np.zeros_like(f)) == 0)
    with pytest.raises(ValueError):
        iface.solve_sp_direct(f, s=-1.0)


def test_sp_coercivity(skew2d, rng):
    system, iface = skew2d
    g = system.grid
    for side in (1, 2):
        q = np.inf
        for _ in range(100):
            eta = rng.standard_normal((g.n_t, system.dec.n_gamma))
            val = g.dt * np.sum(iface.apply_S(side, eta) * eta)
            q = min(q, val / system.norm(system.extension_F(side, eta), "L2H1", side) ** 2)
        assert q > 0.1
        q = np.inf
        for _ in range(100):
            eta = rng.standard_normal((g.n_t, system.dec.n_gamma))
            val = g.dt * np.sum(iface.apply_S(side, eta) * h_phi(eta, g, 0.1))
            q = min(q, val / system.norm(eta, "Z") ** 2)
        assert q > 1e-6


@pytest.mark.parametrize("method", ["robin_robin", "modified_robin_robin", "dirichlet_neumann",
                                    "neumann_neumann"])
def test_exact_guess_is_stationary(skew2d, method):
    system, iface = skew2d
    cfg = IterationConfig(method=method, initial_guess="exact", max_iter=5)
    rep = iface.run(cfg, source(system))
    assert rep.converged and rep.iterations == 1
    assert rep.final["err_L2Gamma"] <= 1e-10 * system.norm(rep.eta1, "L2Gamma")
    assert not rep.monotonicity_violations
    if method == "neumann_neumann":
        for lam in rep.lambdas:
            assert np.max(np.abs(lam)) <= 1e-10 * np.max(np.abs(rep.eta1))


@pytest.mark.parametrize("method", ["robin_robin", "modified_robin_robin", "dirichlet_neumann",
                                    "neumann_neumann", "direct"])
def test_degenerate_zero_problem(small2d, method):
    system, iface = small2d
    rep = iface.run(IterationConfig(method=method), np.zeros((system.grid.n_t, system.mesh.n_free)))
    assert rep.converged and rep.iterations == 1
    assert all(v == 0 for k, v in rep.final.items() if k.startswith("err"))


def test_rr_random_guess_zero_source(skew2d):
    system, iface = skew2d
    cfg = IterationConfig(initial_guess="random", seed=7, tol=1e-12, max_iter=2000)
    rep = iface.run(cfg, np.zeros((system.grid.n_t, system.mesh.n_free)))
    assert rep.converged
    assert system.norm(rep.eta2, "L2Gamma") < 1e-8
    assert not rep.monotonicity_violations
    r = rep.column("pr_residual")
    assert np.all(np.diff(r) <= 1e-12 * r[0])


def test_modified_phi_zero_is_bitwise_rr(skew2d):
    system, iface = skew2d
    f = source(system)
    a = iface.run(IterationConfig(method="robin_robin", max_iter=40), f)
    b = iface.run(IterationConfig(method="modified_robin_robin", phi=0.0, max_iter=40), f)
    np.testing.assert_array_equal(a.eta1, b.eta1)
    np.testing.assert_array_equal(a.eta2, b.eta2)
    for ra, rb in zip(a.records, b.records):
        assert all(ra[k] == rb[k] for k in ra if k != "seconds")


def test_dn_single_step_dense_oracle(skew2d):
    system, iface = skew2d
    f = source(system)
    s0 = 0.3
    rep = iface.run(IterationConfig(method="dirichlet_neumann", s0=s0, max_iter=1), f)
    f1, f2 = iface.subdomain_sources(f)
    chi = iface.chi_spectrum(1, f1) + iface.chi_spectrum(2, f2)
    S2 = iface.schur(2)
    step = np.array([s0 * np.linalg.inv(S2[k]) @ chi[k] for k in range(system.n_modes)])
    np.testing.assert_allclose(rep.eta1, system.to_time(step), atol=1e-12)


def test_nn_symmetry_1d():
    system, iface = make_system(1, 16, 16, alpha=0.5)
    f = source(system)  # sin(pi x) is mirror symmetric about 1/2
    rep = iface.run(IterationConfig(method="neumann_neumann", max_iter=1), f)
    l1, l2 = rep.lambdas
    np.testing.assert_allclose(l1, l2, rtol=1e-10, atol=1e-14)


def test_nn_symmetry_2d_point_reflection():
    # the fixed diagonal breaks mirror symmetry of the triangulation; the
    # rotation by pi about the centre is an exact symmetry instead
    system, iface = make_system(2, 8, 16, alpha=0.5)
    f = source(system)
    rep = iface.run(IterationConfig(method="neumann_neumann", max_iter=1), f)
    l1, l2 = rep.lambdas
    np.testing.assert_allclose(l1, l2[:, ::-1], rtol=1e-10, atol=1e-14)


def test_dn_nn_run_without_singular_solves(skew2d):
    system, iface = skew2d
    f = source(system)
    for method in ("dirichlet_neumann", "neumann_neumann"):
        rep = iface.run(IterationConfig(method=method, max_iter=200), f)
        assert all(np.isfinite(r["err_L2Gamma"]) for r in rep.records)


def test_robin_subdomain_form_equivalence(skew2d, rng):
    system, iface = skew2d
    g = system.grid
    f = source(system)
    f1, f2 = iface.subdomain_sources(f)
    eta0 = rng.standard_normal((g.n_t, system.dec.n_gamma))
    s = 1.5
    direct = iface.robin_robin_subdomains(f, s, eta0, 6)
    for n in (1, 3, 6):
        cfg = IterationConfig(s=s, tol=1e-300, max_iter=n)
        # interface run started from eta0
        rep = _run_from(iface, cfg, f, eta0)
        u1 = iface.reconstruct(1, rep.eta1, f1)
        u2 = iface.reconstruct(2, rep.eta2, f2)
        d1, d2 = direct[n - 1]
        assert np.max(np.abs(u1 - d1)) <= 1e-11 * np.max(np.abs(d1))
        assert np.max(np.abs(u2 - d2)) <= 1e-11 * np.max(np.abs(d2))


def _run_from(iface, cfg, f, eta0):
    orig = iface._initial
    iface._initial = lambda c, exact: iface.system.to_freq(eta0)
    try:
        return iface.run(cfg, f)
    finally:
        iface._initial = orig


def test_cayley_checks(skew2d):
    system, iface = skew2d
    for s in (0.5, 1.0, 2.0):
        vals = [iface.cayley_contraction_check(s, k) for k in range(system.grid.n_t)]
        assert max(vals) <= 1 + 1e-12
        assert vals[0] < 1
        # negative frequencies mirror the positive ones
        assert vals[1] == vals[-1]
    trend = [iface.cayley_contraction_check(s, 0) for s in (1e1, 1e2, 1e3, 1e4)]
    assert all(a < b < 1 for a, b in zip(trend, trend[1:]))
    with pytest.raises(ValueError):
        iface.cayley_contraction_check(0.0, 0)
    with pytest.raises(ValueError):
        iface.cayley_contraction_check(1.0, system.grid.n_t)


@pytest.mark.parametrize("bad", [dict(method="gmres"), dict(s=0.0), dict(phi=2.0),
                                 dict(method="dirichlet_neumann", s0=1.0),
                                 dict(method="neumann_neumann", s1=0.0), dict(tol=0.0),
                                 dict(max_iter=0), dict(initial_guess="lucky")])
def test_config_validation(bad):
    cfg = IterationConfig(**{**dataclasses.asdict(IterationConfig()), **bad})
    if "phi" in bad:
        cfg.method = "modified_robin_robin"
    with pytest.raises(ValueError):
        cfg.validate()


def test_dn_divergence_is_reported_not_raised():
    system, iface = make_system(2, 8, 16, alpha=0.25)
    rep = iface.run(IterationConfig(method="dirichlet_neumann", s0=0.9, max_iter=200),
                    source(system))
    assert rep.diverged and not rep.converged
    assert "iteration diverged" in rep.warnings
