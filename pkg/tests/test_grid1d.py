"""Pendulum grid operator: spectra, evolution, and the quadrature oracle."""

import math

import numpy as np
import pytest

from scarforge import fock, grid1d, qnf, quasimode


class TestBuildPendulum:
    def test_free_case_spectrum(self):
        hb = 0.05
        op = grid1d.build_pendulum(hb, 256)
        free = grid1d.GridOperator(256, hb, op.x, np.zeros(256), op.kinetic)
        w, _ = np.linalg.eigh(free.dense())
        k = np.sort(np.abs(np.fft.fftfreq(256, d=1.0 / 256)))
        want = np.sort(0.5 * (hb * k) ** 2)
        assert np.max(np.abs(np.sort(w) - want)) < 1e-10

    def test_lower_bound(self):
        op = grid1d.build_pendulum(1.0 / 40.0)
        w, _ = op.eig()
        assert w[0] >= -1.0

    def test_harmonic_bottom(self):
        op = grid1d.build_pendulum(0.01)
        w, _ = op.eig()
        assert abs(w[0] - (-1.0 + 0.01 / 2)) < 5e-4

    def test_under_resolved_raises(self):
        with pytest.raises(quasimode.ResolutionError):
            grid1d.build_pendulum(0.01, n_grid=256)

    def test_hermitian(self):
        op = grid1d.build_pendulum(1.0 / 30.0)
        rng = np.random.default_rng(4)
        u = rng.standard_normal(op.n_grid) + 1j * rng.standard_normal(op.n_grid)
        v = rng.standard_normal(op.n_grid) + 1j * rng.standard_normal(op.n_grid)
        lhs = np.vdot(op.apply(u), v)
        rhs = np.vdot(u, op.apply(v))
        assert abs(lhs - rhs) <= 1e-12 * abs(lhs)


class TestGridGaussian:
    def test_normalized(self):
        op = grid1d.build_pendulum(1.0 / 50.0)
        psi = grid1d.grid_gaussian(op)
        assert abs(np.linalg.norm(psi) - 1.0) < 1e-10

    def test_energy_at_fixed_point(self):
        # <xi^2/2> = hbar/4 and <cos x> = e^{-hbar/4} put <H> at 1 + O(hbar^2)
        for hb in (1.0 / 50.0, 1.0 / 100.0):
            op = grid1d.build_pendulum(hb)
            psi = grid1d.grid_gaussian(op)
            e1, _ = grid1d.energy_moments(op, psi)
            want = hb / 4.0 + math.exp(-hb / 4.0)
            assert abs(e1 - want) < 1e-8
            assert abs(e1 - 1.0) < hb

    def test_energy_variance_order(self):
        # <(H - E)^2> = O(hbar^2): two-point fit of the hbar-slope
        vs = []
        hbs = (1.0 / 50.0, 1.0 / 200.0)
        for hb in hbs:
            op = grid1d.build_pendulum(hb)
            psi = grid1d.grid_gaussian(op)
            e1, e2 = grid1d.energy_moments(op, psi)
            vs.append(e2 - e1 ** 2)
        slope = (math.log(vs[0]) - math.log(vs[1])) / (math.log(hbs[0]) - math.log(hbs[1]))
        assert slope == pytest.approx(2.0, abs=0.1)


class TestGridEvolve:
    def test_identity_at_zero(self):
        op = grid1d.build_pendulum(1.0 / 40.0)
        psi = grid1d.grid_gaussian(op)
        assert np.array_equal(grid1d.grid_evolve(op, psi, 0.0), psi)

    def test_energy_conservation(self):
        hb = 1.0 / 50.0
        op = grid1d.build_pendulum(hb)
        psi = grid1d.grid_gaussian(op)
        T = qnf.ehrenfest_time(0.1, 1.0, hb)
        e0, _ = grid1d.energy_moments(op, psi)
        out = grid1d.grid_evolve(op, psi, T)
        e1, _ = grid1d.energy_moments(op, out)
        assert abs(np.linalg.norm(out) - 1.0) < 1e-10
        assert abs(e1 - e0) < 1e-9

    def test_unstable_direction_growth_rate(self):
        # position variance grows like e^{2 t} at the separatrix top (lam = 1)
        hb = 1e-3
        op = grid1d.build_pendulum(hb)
        psi = grid1d.grid_gaussian(op)
        d = np.where(op.x > math.pi, op.x - 2 * math.pi, op.x)
        ts = np.linspace(0.5, 2.0, 7)
        logv = []
        cur = psi
        tprev = 0.0
        for t in ts:
            cur = grid1d.grid_evolve(op, cur, t - tprev, n_steps=1500)
            tprev = t
            var = float(np.sum(d ** 2 * np.abs(cur) ** 2))
            logv.append(math.log(var))
        rate = np.polyfit(ts, logv, 1)[0]
        assert rate == pytest.approx(2.0, abs=0.15)


class TestEigWindow:
    def test_separatrix_window_occupied(self):
        op = grid1d.build_pendulum(1.0 / 100.0)
        sd = grid1d.eig_window(op, 1.0, 10.0 / 100.0)
        assert sd.eigenvalues.size >= 1

    def test_masses_complete(self):
        op = grid1d.build_pendulum(1.0 / 30.0)
        w, _ = op.eig()
        sd = grid1d.eig_window(op, (w[0] + w[-1]) / 2, (w[-1] - w[0]) / 2)
        psi = grid1d.grid_gaussian(op)
        assert float(np.sum(sd.masses(psi))) == pytest.approx(1.0, abs=1e-10)
        assert sd.boundary_flag

    def test_eigenvector_residuals(self):
        op = grid1d.build_pendulum(1.0 / 50.0)
        sd = grid1d.eig_window(op, 1.0, 0.2)
        for j in range(sd.eigenvalues.size):
            v = sd.eigenvectors[:, j]
            r = op.apply(v) - sd.eigenvalues[j] * v
            assert np.linalg.norm(r) <= 1e-9

    def test_parity_sectors(self):
        op = grid1d.build_pendulum(1.0 / 30.0)
        sd = grid1d.eig_window(op, 1.0, 0.3)
        for j in range(sd.eigenvalues.size):
            v = sd.eigenvectors[:, j]
            flip = np.roll(v[::-1], 1)       # x -> -x on the periodic grid
            parity = abs(np.vdot(v, flip))
            assert parity == pytest.approx(1.0, abs=1e-9)


class TestWeylOracle:
    def test_examples(self):
        # <phi_2, Op(x xi) phi_0> = +i hbar/sqrt 2 (raising orientation);
        # the (0,2) element is its conjugate
        hb = 0.01
        v = grid1d.grid_weyl_matrix_element(1, 2, 0, hb)
        assert v == pytest.approx(1j * hb / math.sqrt(2), abs=1e-9)
        v = grid1d.grid_weyl_matrix_element(1, 0, 0, hb)
        assert abs(v) < 1e-12
        v = grid1d.grid_weyl_matrix_element(2, 0, 0, hb)
        assert v == pytest.approx(hb ** 2 / 4.0, abs=1e-9)

    @pytest.mark.parametrize("alpha", [1, 2, 3])
    def test_matches_fock_construction(self, alpha):
        hb = 0.5
        op, _ = fock.weyl_power_xxi(alpha, hb, 32)
        dense = op.to_dense()
        for (m1, m2) in ((0, 0), (0, 2), (2, 4), (1, 3), (4, 4)):
            want = dense[m1, m2]
            got = grid1d.grid_weyl_matrix_element(alpha, m1, m2, hb)
            assert abs(got - want) <= 1e-8 * max(1.0, abs(want))


class TestCircleHusimi:
    def test_gaussian_box_mass(self):
        # Husimi variance of a coherent state is hbar per axis: a 5 sigma
        # box captures all but ~1e-6 of the mass
        hb = 1.0 / 100.0
        op = grid1d.build_pendulum(hb)
        psi = grid1d.grid_gaussian(op)
        box = 5.0 * math.sqrt(hb)
        mass = grid1d.husimi_box_mass_circle(psi, hb, box, box)
        assert mass == pytest.approx(1.0, abs=1e-5)
        tight = grid1d.husimi_box_mass_circle(psi, hb, 0.3, 0.3)
        assert tight == pytest.approx(0.99462, abs=2e-3)

    def test_displaced_state_misses_box(self):
        hb = 1.0 / 100.0
        op = grid1d.build_pendulum(hb)
        psi = grid1d.grid_gaussian(op, center=(2.0, 0.0))
        mass = grid1d.husimi_box_mass_circle(psi, hb, 0.3, 0.3)
        assert mass < 1e-6


class TestGridVsFock:
    @pytest.mark.parametrize("hb", [1.0 / 50.0, 1.0 / 100.0, 1.0 / 200.0])
    def test_width_pipeline_consistency(self, hb):
        # the pendulum quasimode width tracks the quadratic Fock model
        epsp = 0.1
        from scarforge import scarscan
        res, extra = scarscan.scar_weight_single(hb, epsp, 0.5)
        coeffs = qnf.quadratic_model(1.0)
        chi = quasimode.optimize_cutoff(epsp)
        T = extra["T"]
        _, rep = quasimode.build_quasimode(None, coeffs, chi, T, 0.0, hb,
                                           method="gram")
        assert extra["width_input"] == pytest.approx(rep.width, rel=0.25)

    def test_grid_quasimode_husimi_localized(self):
        from scarforge import scarscan
        res, extra = scarscan.scar_weight_single(1.0 / 100.0, 0.1, 0.5)
        assert extra["husimi_box_eps03"] >= 0.99


class TestConvergence:
    def test_doubling_n_grid_stable(self):
        hb = 1.0 / 40.0
        vals = []
        for n in (512, 1024):
            op = grid1d.build_pendulum(hb, n)
            psi = grid1d.grid_gaussian(op)
            e1, e2 = grid1d.energy_moments(op, psi)
            w, _ = op.eig()
            vals.append((e1, e2, w[0]))
        assert vals[0] == pytest.approx(vals[1], rel=1e-10)
