"""Number-basis operators: ladder algebra, Weyl powers, dilation."""

import math

import numpy as np
import pytest

from scarforge import fock


def _e(m, dim):
    v = np.zeros(dim, dtype=complex)
    v[m] = 1.0
    return v


class TestLadder:
    def test_ground_annihilation(self):
        a, _ = fock.ladder_matrices(1.0, 16)
        assert np.all(a.apply(_e(0, 16)) == 0)

    def test_raising_ground(self):
        _, astar = fock.ladder_matrices(1.0, 16)
        out = astar.apply(_e(0, 16))
        assert abs(out[1] - 1.0) < 1e-15 and np.sum(np.abs(out)) == pytest.approx(1.0)

    @pytest.mark.parametrize("m", [0, 1, 5])
    def test_number_operator(self, m):
        a, astar = fock.ladder_matrices(1.0, 16)
        out = astar.apply(a.apply(_e(m, 16)))
        assert np.max(np.abs(out - m * _e(m, 16))) < 1e-13

    def test_adjointness_random(self):
        a, astar = fock.ladder_matrices(1.0, 256)
        rng = np.random.default_rng(0)
        for _ in range(5):
            u = rng.standard_normal(256) + 1j * rng.standard_normal(256)
            v = rng.standard_normal(256) + 1j * rng.standard_normal(256)
            # boundary row excluded: the truncated a drops the m=dim component
            u[-1] = v[-1] = 0.0
            lhs = np.vdot(a.apply(u), v)
            rhs = np.vdot(u, astar.apply(v))
            assert abs(lhs - rhs) < 1e-12 * max(1.0, abs(lhs))

    def test_dimension_check(self):
        with pytest.raises(fock.InvalidDimensionError):
            fock.ladder_matrices(1.0, 3)


class TestOpXXi:
    def test_ground_action(self):
        hb = 0.31
        out = fock.op_xxi(hb, 24).apply(_e(0, 24))
        assert abs(out[2] - 1j * hb / math.sqrt(2)) < 1e-15
        assert np.linalg.norm(out) == pytest.approx(hb / math.sqrt(2), rel=1e-14)

    def test_diagonal_vanishes(self):
        out = fock.op_xxi(1.0, 24).apply(_e(0, 24))
        assert out[0] == 0.0

    def test_matrix_element_formula(self):
        hb = 1.7
        op = fock.op_xxi(hb, 40)
        dense = op.to_dense()
        for m in range(0, 30, 3):
            want = 0.5j * hb * math.sqrt((m + 1) * (m + 2))
            assert abs(dense[m + 2, m] - want) < 1e-14 * abs(want)

    def test_against_symmetrization_oracle(self):
        op = fock.op_xxi(1.0, 64).to_dense()
        orc = fock.weyl_oracle(1, 1.0, 64)
        blk = slice(0, 32)
        assert np.max(np.abs(op[blk, blk] - orc[blk, blk])) <= 1e-12


class TestWeylPowers:
    def test_moyal_coefficients(self):
        _, d2 = fock.weyl_power_xxi(2, 1.0, 64)
        _, d3 = fock.weyl_power_xxi(3, 1.0, 64)
        assert d2.c_coeffs == pytest.approx([-0.25], abs=0)
        assert d3.c_coeffs == pytest.approx([-1.25], abs=0)

    def test_alpha_one_is_op_xxi(self):
        op, dec = fock.weyl_power_xxi(1, 0.9, 32)
        assert dec.c_coeffs.size == 0
        assert np.max(np.abs(op.to_dense() - fock.op_xxi(0.9, 32).to_dense())) == 0.0

    def test_order_range(self):
        with pytest.raises(fock.UnsupportedOrderError):
            fock.weyl_power_xxi(7, 1.0, 64)

    @pytest.mark.parametrize("alpha", [1, 2, 3, 4])
    def test_oracle_equivalence(self, alpha):
        dim = 64
        op, _ = fock.weyl_power_xxi(alpha, 1.0, dim)
        orc = fock.weyl_oracle(alpha, 1.0, dim)
        blk = slice(0, dim // 2)
        scale = np.max(np.abs(orc[blk, blk]))
        assert np.max(np.abs(op.to_dense()[blk, blk] - orc[blk, blk])) <= 1e-10 * scale

    def test_even_offsets_and_hermitian(self):
        for alpha in (2, 3, 4, 5, 6):
            op, _ = fock.weyl_power_xxi(alpha, 0.8, 48)
            assert all(o % 2 == 0 and abs(o) <= 2 * alpha for o in op.offsets)
            assert op.hermiticity_defect() <= 1e-14

    def test_hbar_scaling_of_ground_action(self):
        # overall hbar^alpha scaling, checked at two hbar values
        for alpha in (2, 3):
            s1 = fock.xxi_power_on_ground(alpha, 1.0, 32).coeffs
            s2 = fock.xxi_power_on_ground(alpha, 0.5, 32).coeffs
            assert np.allclose(s2, s1 * 0.5 ** alpha, rtol=1e-13, atol=1e-16)


class TestGroundAction:
    def test_alpha_two_example(self):
        hb = 0.62
        st = fock.xxi_power_on_ground(2, hb, 16)
        assert st.coeffs[0] == pytest.approx(hb ** 2 * 0.25, rel=1e-13)
        assert st.coeffs[4] == pytest.approx(-hb ** 2 * math.sqrt(1.5), rel=1e-13)

    def test_alpha_one_example(self):
        hb = 0.62
        st = fock.xxi_power_on_ground(1, hb, 16)
        assert st.coeffs[2] == pytest.approx(1j * hb / math.sqrt(2), rel=1e-13)

    @pytest.mark.parametrize("alpha", [1, 2, 3, 4, 5, 6])
    def test_support(self, alpha):
        st = fock.xxi_power_on_ground(alpha, 1.0, 64)
        allowed = {2 * alpha - 4 * k for k in range(alpha // 2 + 1)}
        off = [m for m in range(64) if m not in allowed]
        assert np.max(np.abs(st.coeffs[off])) <= 1e-14 * np.max(np.abs(st.coeffs))


class TestOracle:
    def test_alpha2_identity(self):
        # oracle(2) - (Op xxi)^2 = -(hbar^2/4) Id on the interior block
        hb = 0.8
        dim = 48
        orc = fock.weyl_oracle(2, hb, dim)
        sq = fock.op_xxi(hb, dim + 4).to_dense()
        sq = (sq @ sq)[:dim, :dim]
        blk = slice(0, dim // 2)
        diff = orc[blk, blk] - sq[blk, blk]
        assert np.max(np.abs(diff + (hb ** 2 / 4) * np.eye(dim // 2))) < 1e-12

    def test_hermiticity(self):
        orc = fock.weyl_oracle(3, 1.0, 40)
        assert np.max(np.abs(orc - orc.conj().T)) <= 1e-13 * np.max(np.abs(orc))

    def test_unsupported(self):
        with pytest.raises(fock.UnsupportedOrderError):
            fock.weyl_oracle(5, 1.0, 32)


class TestDilation:
    def test_identity_at_zero(self):
        M = fock.dilation(0.0, 1.0, 64)
        assert np.max(np.abs(M - np.eye(64))) < 1e-14

    @pytest.mark.parametrize("beta", [0.5, 1.0, 2.0, 4.0])
    def test_vacuum_overlap_law(self, beta):
        # internal truncation grows as 4 e^{2 beta}; the returned block then
        # carries exact elements and the overlap meets 1e-8 at dim 400
        M = fock.dilation(beta, 1.0, 400)
        assert abs(M[0, 0] - 1.0 / math.sqrt(math.cosh(beta))) <= 1e-8

    def test_zero_two_element(self):
        # oracle-convention value; the source's prefactor is half of this,
        # consistent with its factor-2 convention for Op(x xi)
        beta = 1.0
        M = fock.dilation(beta, 1.0, 200)
        want = -math.sinh(beta) / (math.sqrt(2.0) * math.cosh(beta) ** 1.5)
        assert abs(M[0, 2] - want) <= 1e-8

    def test_unitary_on_retained_subspace(self):
        M = fock.dilation(1.5, 1.0, 300)
        cols = M[:, :150]
        gram = cols.conj().T @ cols
        assert np.max(np.abs(gram - np.eye(150))) < 1e-9

    def test_hbar_independent(self):
        assert np.allclose(fock.dilation(0.8, 1.0, 64),
                           fock.dilation(0.8, 1e-3, 64), atol=1e-13)

    def test_cap_warns_with_defect(self):
        with pytest.warns(fock.TruncationWarning):
            fock.dilation(5.5, 1.0, 64, internal_cap=2048)

    def test_apply_matches_matrix(self):
        st = fock.basis_state(2, 1.0, 500)
        out = fock.dilation_apply(1.2, st)
        M = fock.dilation(1.2, 1.0, 500)
        assert np.linalg.norm(out.coeffs - M[:, 2]) < 1e-9

    def test_overlap_curve_matches_closed_form(self):
        betas = np.array([-2.0, -0.5, 0.0, 0.7, 3.0])
        vals = fock.dilation_overlap_curve(0, 0, betas,
                                           internal=fock.dilation_dim_for(3.0))
        want = 1.0 / np.sqrt(np.cosh(betas))
        assert np.max(np.abs(vals - want)) < 1e-9

    def test_squeezed_vacuum_closed_form(self):
        st = fock.squeezed_vacuum(1.3, 1.0, 400)
        via = fock.dilation_apply(1.3, fock.vacuum(1.0, 400))
        assert np.linalg.norm(st.coeffs - via.coeffs) < 1e-9
        assert st.norm() == pytest.approx(1.0, abs=1e-10)

    def test_truncation_control_doubling(self):
        # module-wide convergence: doubling dim moves the overlap < 1e-10
        a = fock.dilation(2.0, 1.0, 128)[0, 0]
        b = fock.dilation(2.0, 1.0, 256)[0, 0]
        assert abs(a - b) < 1e-10


class TestParity:
    def test_even_sector_preserved_exactly(self):
        op, _ = fock.weyl_power_xxi(3, 1.0, 48)
        v = np.zeros(48, dtype=complex)
        v[0::2] = 1.0
        out = op.apply(v)
        assert np.all(out[1::2] == 0.0)


class TestFockState:
    def test_normalized_invariant(self):
        rng = np.random.default_rng(1)
        st = fock.FockState(rng.standard_normal(32) + 0j, 1.0).normalized()
        assert abs(st.norm() ** 2 - 1.0) < 1e-12

    def test_padded_keeps_content(self):
        st = fock.basis_state(3, 0.5, 8).padded(16)
        assert st.dim == 16 and st.coeffs[3] == 1.0
