import math

import numpy as np
import pytest
from scipy import integrate
from scipy.linalg import expm

from dqdsim.greens import (
    GreensSolution,
    PoleExpansion,
    TimeGrid,
    bm_fluctuation,
    compute_fluctuation,
    pole_expansion_lorentzian,
    solve,
    solve_dyson,
    steady_state_fluctuation,
    wbl_greens,
    wbl_steady_fluctuation,
)
from dqdsim.model import (
    ConfigError,
    InvariantViolation,
    SpectralKind,
    build_hamiltonian,
    gamma_matrix,
)
from dqdsim.spectral import SpectralModel, build_kernel_table, fermi_occupation

from conftest import make_config

# cross-validated reference values for the symmetric resonant benchmark
# (eps = mu = 2, G = 0.5, gamma = 0.5 per lead, d = 2, kT = 0.5)
BENCH_POLES = np.array(
    [
        1.413188395912550 - 0.257745288564674j,
        1.913188395912528 - 1.742254711435387j,
        2.086811604087489 - 1.742254711435297j,
        2.586811604087433 - 0.257745288564645j,
    ]
)
BENCH_V_STEADY_OFFDIAG = -0.203610092048039


class TestTimeGrid:
    def test_grid_values(self):
        g = TimeGrid(10.0, 4)
        assert g.dt == 2.5
        np.testing.assert_array_equal(g.times, [0.0, 2.5, 5.0, 7.5, 10.0])

    def test_validation(self):
        with pytest.raises(ConfigError):
            TimeGrid(0.0, 10)
        with pytest.raises(ConfigError):
            TimeGrid(-1.0, 10)
        with pytest.raises(ConfigError):
            TimeGrid(1.0, 0)


class TestGreensSolutionInvariants:
    @staticmethod
    def trivial_solution(n=4):
        grid = TimeGrid(1.0, n)
        u = np.stack([np.eye(2, dtype=complex)] * (n + 1))
        v = np.zeros((n + 1, 2, 2), dtype=complex)
        return grid, u, v

    def test_accepts_trivial(self):
        grid, u, v = self.trivial_solution()
        sol = GreensSolution(grid, u, v)
        assert sol.u_seq.shape == (5, 2, 2)

    def test_rejects_nonidentity_start(self):
        grid, u, v = self.trivial_solution()
        u[0, 0, 0] = 0.5
        with pytest.raises(InvariantViolation):
            GreensSolution(grid, u, v)

    def test_rejects_nonzero_v_start(self):
        grid, u, v = self.trivial_solution()
        v[0, 0, 1] = 1e-6
        with pytest.raises(InvariantViolation):
            GreensSolution(grid, u, v)

    def test_rejects_nonhermitian_v(self):
        grid, u, v = self.trivial_solution()
        v[2, 0, 1] = 0.1
        with pytest.raises(InvariantViolation):
            GreensSolution(grid, u, v)

    def test_rejects_v_eigenvalue_above_one(self):
        grid, u, v = self.trivial_solution()
        u[3] = 0.0
        v[3] = 1.5 * np.eye(2)
        with pytest.raises(InvariantViolation):
            GreensSolution(grid, u, v)

    def test_rejects_expanding_u(self):
        grid, u, v = self.trivial_solution()
        u[2] = 1.2 * np.eye(2)
        with pytest.raises(InvariantViolation):
            GreensSolution(grid, u, v)


class TestSolveDyson:
    def test_decoupled_closed_form(self):
        cfg = make_config(eps1=2.0, eps2=2.0, g=0.5, gamma=0.0, gamma_r=0.0)

        def worst(n):
            grid = TimeGrid(6.0, n)
            u = solve_dyson(cfg, grid)
            t = grid.times
            expect = np.empty_like(u)
            expect[:, 0, 0] = expect[:, 1, 1] = np.exp(-2j * t) * np.cos(0.5 * t)
            expect[:, 0, 1] = expect[:, 1, 0] = (
                -1j * np.exp(-2j * t) * np.sin(0.5 * t)
            )
            return np.max(np.abs(u - expect))

        assert worst(600) < 1e-3
        assert worst(2400) < 5e-5  # second-order step error

    def test_unitary_when_undamped(self):
        cfg = make_config(eps1=1.0, eps2=3.0, g=0.7, gamma=0.0, gamma_r=0.0)
        u = solve_dyson(cfg, TimeGrid(5.0, 500))
        products = np.einsum("tab,tcb->tac", u, u.conj())
        assert np.max(np.abs(products - np.eye(2))) < 1e-12

    def test_second_order_convergence(self):
        cfg = make_config()
        coarse = solve_dyson(cfg, TimeGrid(4.0, 200))[-1]
        fine = solve_dyson(cfg, TimeGrid(4.0, 400))[-1]
        finest = solve_dyson(cfg, TimeGrid(4.0, 800))[-1]
        delta1 = np.max(np.abs(fine - coarse))
        delta2 = np.max(np.abs(finest - fine))
        assert delta1 < 4e-3
        assert 3.0 < delta1 / delta2 < 5.0

    def test_wideband_is_dispatched_away(self):
        cfg = make_config(kind=SpectralKind.WIDE_BAND)
        with pytest.raises(ConfigError):
            solve_dyson(cfg, TimeGrid(1.0, 10))

    def test_large_bandwidth_approaches_wideband(self):
        # the kernel decays on 1/d, so the step must resolve that scale
        lor = make_config(d=1000.0)
        wbl = make_config(kind=SpectralKind.WIDE_BAND)
        grid = TimeGrid(1.0, 5000)
        u_lor = solve_dyson(lor, grid)
        sol_wbl = wbl_greens(wbl, grid)
        assert np.max(np.abs(u_lor - sol_wbl.u_seq)) < 1e-2
        v_lor = compute_fluctuation(u_lor, lor, grid)
        assert np.max(np.abs(v_lor - sol_wbl.v_seq)) < 1e-2


class TestComputeFluctuation:
    def test_matches_direct_double_sum(self):
        cfg = make_config(d=1.5, k_t=0.3, mu=1.0)
        grid = TimeGrid(2.0, 40)
        u = solve_dyson(cfg, grid)
        v = compute_fluctuation(u, cfg, grid)

        model = SpectralModel.from_config(cfg)
        taus = grid.times
        table = build_kernel_table(model, taus, include_noise=True)
        gt = table.noise  # (n+1, 2) diagonal entries, tau >= 0
        dt = grid.dt
        n = grid.n_steps
        direct = np.zeros((n + 1, 2, 2), dtype=complex)
        for m in range(1, n + 1):
            acc = np.zeros((2, 2), dtype=complex)
            for k in range(m + 1):
                wk = 0.5 if k in (0, m) else 1.0
                for kp in range(m + 1):
                    wkp = 0.5 if kp in (0, m) else 1.0
                    lag = kp - k
                    gg = gt[abs(lag)] if lag >= 0 else np.conj(gt[abs(lag)])
                    acc += wk * wkp * (u[k] * gg[None, :]) @ u[kp].conj().T
            direct[m] = dt * dt * acc
        assert np.max(np.abs(v - direct)) < 1e-13

    def test_empty_band_suppresses_fluctuations(self):
        # the band sits 22 Gamma below the dot levels, so only a small
        # transient bump (about 1.5e-3, oracle-confirmed) survives and the
        # late-time fluctuation falls below 1e-3
        cfg = make_config(mu=-20.0, mu_r=-20.0, k_t=0.1)
        grid = TimeGrid(10.0, 800)
        u = solve_dyson(cfg, grid)
        v = compute_fluctuation(u, cfg, grid)
        assert np.max(np.abs(v)) < 2e-3
        assert np.max(np.abs(v[-1])) < 1e-3
        exp = pole_expansion_lorentzian(cfg)
        assert np.max(np.abs(steady_state_fluctuation(exp, cfg))) < 1e-3

    def test_solve_bundles_u_and_v(self):
        cfg = make_config()
        grid = TimeGrid(3.0, 300)
        sol = solve(cfg, grid)
        np.testing.assert_array_equal(sol.u_seq, solve_dyson(cfg, grid))
        np.testing.assert_array_equal(
            sol.v_seq, compute_fluctuation(sol.u_seq, cfg, grid)
        )

    def test_solve_dispatches_wideband(self):
        cfg = make_config(kind=SpectralKind.WIDE_BAND)
        grid = TimeGrid(3.0, 120)
        sol = solve(cfg, grid)
        ref = wbl_greens(cfg, grid)
        np.testing.assert_allclose(sol.u_seq, ref.u_seq, atol=1e-14)
        np.testing.assert_allclose(sol.v_seq, ref.v_seq, atol=1e-14)


class TestPoleExpansion:
    def test_benchmark_poles(self):
        exp = pole_expansion_lorentzian(make_config())
        np.testing.assert_allclose(
            np.sort_complex(exp.poles), BENCH_POLES, atol=1e-9
        )

    def test_poles_satisfy_secular_criterion(self):
        cfg = make_config(eps1=1.0, eps2=3.5, g=0.8, d=1.2, mu=0.5, k_t=0.2)
        exp = pole_expansion_lorentzian(cfg)
        m = build_hamiltonian(cfg.system)
        assert len(exp.poles) == 4
        for r in exp.poles:
            sig = np.diag(
                [
                    0.5 * cfg.left.gamma * cfg.left.bandwidth
                    / (r - cfg.left.mu + 1j * cfg.left.bandwidth),
                    0.5 * cfg.right.gamma * cfg.right.bandwidth
                    / (r - cfg.right.mu + 1j * cfg.right.bandwidth),
                ]
            )
            a = r * np.eye(2) - m - sig
            assert abs(np.linalg.det(a)) < 1e-8

    def test_residues_sum_to_identity(self):
        exp = pole_expansion_lorentzian(make_config())
        total = sum(exp.residues)
        np.testing.assert_allclose(total, np.eye(2), atol=1e-8)

    def test_poles_in_lower_half_plane(self):
        for cfg in (make_config(), make_config(g=0.0), make_config(d=0.5, mu=4.0)):
            exp = pole_expansion_lorentzian(cfg)
            assert all(p.imag <= 1e-12 for p in exp.poles)

    def test_reconstruct_matches_volterra(self):
        cfg = make_config()
        grid = TimeGrid(10.0, 4000)
        u_pole = pole_expansion_lorentzian(cfg).reconstruct(grid.times)
        u_volt = solve_dyson(cfg, grid)
        assert np.max(np.abs(u_pole - u_volt)) < 1e-3

    def test_decoupled_channels(self):
        exp = pole_expansion_lorentzian(make_config(g=0.0, eps1=1.0, eps2=3.0))
        assert len(exp.poles) == 4
        total = sum(exp.residues)
        np.testing.assert_allclose(total, np.eye(2), atol=1e-8)
        # each residue acts on a single channel when G = 0
        for z in exp.residues:
            assert abs(z[0, 1]) < 1e-10 and abs(z[1, 0]) < 1e-10

    def test_large_bandwidth_poles_cluster_on_wbl_modes(self):
        cfg = make_config(d=1000.0)
        exp = pole_expansion_lorentzian(cfg)
        m = build_hamiltonian(cfg.system)
        modes = np.linalg.eigvals(m - 0.5j * gamma_matrix(cfg))
        near = sorted(exp.poles, key=lambda p: -p.imag)[:2]
        for mode in modes:
            assert min(abs(mode - p) for p in near) < 1e-2

    def test_requires_lorentzian(self):
        for kind in (SpectralKind.WIDE_BAND, SpectralKind.CUTOFF_LORENTZIAN):
            with pytest.raises(ConfigError):
                pole_expansion_lorentzian(make_config(kind=kind, cutoff=5.0))

    def test_constructor_rejects_bad_residues(self):
        with pytest.raises(InvariantViolation):
            PoleExpansion(
                poles=np.array([1.0 - 1.0j]), residues=[0.5 * np.eye(2)]
            )
        with pytest.raises(InvariantViolation):
            PoleExpansion(
                poles=np.array([1.0 + 1.0j]), residues=[np.eye(2)]
            )


class TestSteadyStateFluctuation:
    def test_benchmark_value(self):
        cfg = make_config()
        vs = steady_state_fluctuation(pole_expansion_lorentzian(cfg), cfg)
        np.testing.assert_allclose(vs[0, 0], 0.5, atol=1e-8)
        np.testing.assert_allclose(vs[1, 1], 0.5, atol=1e-8)
        np.testing.assert_allclose(vs[0, 1], BENCH_V_STEADY_OFFDIAG, atol=1e-8)

    def test_long_time_limit_agrees(self):
        cfg = make_config()
        grid = TimeGrid(12.0, 1500)
        sol = solve(cfg, grid)
        vs = steady_state_fluctuation(pole_expansion_lorentzian(cfg), cfg)
        assert np.max(np.abs(sol.v_seq[-1] - vs)) < 5e-3

    def test_output_is_physical(self):
        for cfg in (make_config(mu=4.0, d=0.5), make_config(k_t=0.0, g=1.5)):
            vs = steady_state_fluctuation(pole_expansion_lorentzian(cfg), cfg)
            assert np.max(np.abs(vs - vs.conj().T)) < 1e-10
            eigs = np.linalg.eigvalsh(vs)
            assert eigs.min() > -1e-8 and eigs.max() < 1.0 + 1e-8

    def test_requires_lorentzian(self):
        cfg = make_config()
        exp = pole_expansion_lorentzian(cfg)
        bad = make_config(kind=SpectralKind.WIDE_BAND)
        with pytest.raises(ConfigError):
            steady_state_fluctuation(exp, bad)


class TestWideBand:
    def test_u_is_matrix_exponential(self):
        cfg = make_config(kind=SpectralKind.WIDE_BAND, gamma=0.3, gamma_r=0.9)
        grid = TimeGrid(4.0, 16)
        sol = wbl_greens(cfg, grid)
        m_eff = build_hamiltonian(cfg.system) - 0.5j * gamma_matrix(cfg)
        for i, t in enumerate(grid.times):
            np.testing.assert_allclose(
                sol.u_seq[i], expm(-1j * m_eff * t), atol=1e-12
            )

    def test_initial_values_exact(self):
        sol = wbl_greens(make_config(kind=SpectralKind.WIDE_BAND), TimeGrid(1.0, 8))
        assert np.array_equal(sol.u_seq[0], np.eye(2))
        assert np.all(sol.v_seq[0] == 0.0)

    def test_single_lead_steady_matches_quadrature(self):
        # one damped mode: V^s_11 is the Lorentzian-weighted Fermi average
        for kt in (0.0, 0.3):
            cfg = make_config(
                eps1=1.0, eps2=3.0, g=0.0, gamma=0.8, gamma_r=0.0,
                mu=1.5, k_t=kt, kind=SpectralKind.WIDE_BAND,
            )
            vs = wbl_steady_fluctuation(cfg)

            def integrand(w):
                return (
                    0.8
                    / ((w - 1.0) ** 2 + 0.16)
                    * fermi_occupation(w, 1.5, kt)
                    / (2.0 * math.pi)
                )

            ref, _ = integrate.quad(
                integrand, -np.inf, np.inf, limit=400, points=None
            )
            np.testing.assert_allclose(vs[0, 0].real, ref, atol=1e-10)
            assert abs(vs[0, 1]) < 1e-12 and abs(vs[1, 1]) < 1e-12

    def test_fluctuation_approaches_steady(self):
        cfg = make_config(kind=SpectralKind.WIDE_BAND)
        sol = wbl_greens(cfg, TimeGrid(24.0, 240))
        vs = wbl_steady_fluctuation(cfg)
        assert np.max(np.abs(sol.v_seq[-1] - vs)) < 1e-4

    def test_thermal_and_sharp_fermi_sea_consistent(self):
        # kT -> 0 thermal panels must vanish against the closed form
        cold = make_config(kind=SpectralKind.WIDE_BAND, k_t=1e-7)
        sharp = make_config(kind=SpectralKind.WIDE_BAND, k_t=0.0)
        grid = TimeGrid(6.0, 60)
        np.testing.assert_allclose(
            wbl_greens(cold, grid).v_seq,
            wbl_greens(sharp, grid).v_seq,
            atol=1e-5,
        )

    def test_requires_wideband_kind(self):
        with pytest.raises(ConfigError):
            wbl_greens(make_config(), TimeGrid(1.0, 4))
        with pytest.raises(ConfigError):
            wbl_steady_fluctuation(make_config())


class TestBornMarkov:
    def test_symmetric_resonant_closed_form(self):
        cfg = make_config(kind=SpectralKind.WIDE_BAND)
        grid = TimeGrid(10.0, 200)
        v_seq, x_steady = bm_fluctuation(cfg, grid)
        nbar = fermi_occupation(2.0, 2.0, 0.5)  # exactly 1/2
        gamma_tot = 0.5
        for i, t in enumerate(grid.times):
            expect = (1.0 - math.exp(-gamma_tot * t)) * nbar * np.eye(2)
            np.testing.assert_allclose(v_seq[i], expect, atol=1e-12)
        np.testing.assert_allclose(x_steady, nbar * np.eye(2), atol=1e-12)

    def test_empty_source_gives_zero(self):
        cfg = make_config(
            eps1=30.0, eps2=30.0, mu=0.0, k_t=0.0, kind=SpectralKind.WIDE_BAND
        )
        v_seq, x_steady = bm_fluctuation(cfg, TimeGrid(5.0, 50))
        assert np.all(v_seq == 0.0)
        assert np.all(x_steady == 0.0)

    def test_long_time_limit_is_steady(self):
        cfg = make_config(
            eps1=1.0, eps2=2.5, g=0.8, mu=1.5, mu_r=3.0, k_t=0.4,
            kind=SpectralKind.WIDE_BAND,
        )
        v_seq, x_steady = bm_fluctuation(cfg, TimeGrid(40.0, 400))
        assert np.max(np.abs(v_seq[-1] - x_steady)) < 1e-7

    def test_requires_wideband_kind(self):
        with pytest.raises(ConfigError):
            bm_fluctuation(make_config(), TimeGrid(1.0, 4))
