import numpy as np
import pytest
from scipy.integrate import quad

from memsteer.spectral import (
    BasisSpec,
    control_matrix,
    default_coefficients,
    fractional_power_apply,
    mode_values,
    project,
)

SQRT_2_PI = np.sqrt(2.0 / np.pi)


class TestProject:
    def test_basis_orthonormality(self):
        basis = BasisSpec(4)
        coeffs = project(lambda x: SQRT_2_PI * np.sin(x), basis)
        np.testing.assert_allclose(coeffs, [1.0, 0.0, 0.0, 0.0], atol=1e-13)

    def test_zero_function(self):
        basis = BasisSpec(8)
        np.testing.assert_array_equal(project(lambda x: 0.0 * x, basis), np.zeros(8))

    def test_parabola_against_quadrature_oracle(self):
        # oracle: dense adaptive quadrature of <f, e_n>; frozen values below
        basis = BasisSpec(16)
        coeffs = project(lambda x: x * (np.pi - x), basis)
        frozen = {1: 3.191538243211461, 3: 0.11820512011894292, 5: 0.025532305945691638}
        for n, expected in frozen.items():
            oracle, _ = quad(
                lambda x, n=n: x * (np.pi - x) * SQRT_2_PI * np.sin(n * x),
                0.0,
                np.pi,
                limit=400,
            )
            assert abs(oracle - expected) < 1e-12
            assert abs(coeffs[n - 1] - expected) < 2e-5
        for n in (2, 4, 8, 16):
            assert abs(coeffs[n - 1]) < 1e-12

    def test_parseval_monotone_in_truncation(self):
        f = lambda x: x * (np.pi - x)
        l2 = np.sqrt(quad(lambda x: f(x) ** 2, 0, np.pi)[0])
        prev = 0.0
        for n in (2, 4, 8, 16):
            nrm = np.linalg.norm(project(f, BasisSpec(n)))
            assert nrm >= prev - 1e-12
            assert nrm <= l2 + 1e-8
            prev = nrm
        assert prev == pytest.approx(l2, rel=1e-5)

    def test_rejects_non_finite_values(self):
        basis = BasisSpec(4)
        bad = np.full(basis.collocation_points + 1, np.nan)
        with pytest.raises(ValueError, match="non-finite"):
            project(bad, basis)

    def test_rejects_wrong_sample_count(self):
        with pytest.raises(ValueError, match="point values"):
            project(np.zeros(7), BasisSpec(4))


class TestBasisSpec:
    def test_default_collocation(self):
        assert BasisSpec(8).collocation_points == 32

    @pytest.mark.parametrize("n_modes,colloc", [(0, 0), (4, 6), (4, 9)])
    def test_invalid_specs(self, n_modes, colloc):
        with pytest.raises(ValueError):
            BasisSpec(n_modes, colloc)

    def test_mode_values_roundtrip(self):
        basis = BasisSpec(6)
        x = np.array([1.0, -0.5, 0.25, 0.0, 0.1, -0.2])
        assert project(mode_values(x, basis), basis) == pytest.approx(x, abs=1e-12)


class TestFractionalPower:
    def test_half_power_first_mode(self):
        # (1 - (-2))^(1/2) = sqrt(3), oracle: arbitrary-precision arithmetic
        coeffs = default_coefficients(b0=-2.0, b1=0.0)
        out = fractional_power_apply(np.array([1.0, 0.0, 0.0]), 0.5, 0.0, coeffs)
        assert out[0] == pytest.approx(1.7320508075688772, abs=1e-14)
        assert out[1] == 0.0

    def test_half_power_second_mode(self):
        coeffs = default_coefficients(b0=-2.0, b1=0.0)
        out = fractional_power_apply(np.array([0.0, 1.0]), 0.5, 0.0, coeffs)
        assert out[1] == pytest.approx(2.449489742783178, abs=1e-14)

    def test_inverse_composition(self):
        coeffs = default_coefficients()
        x = np.array([0.3, -1.2, 0.8, 2.0])
        for alpha in (0.25, 0.5, 0.75, 1.0):
            back = fractional_power_apply(
                fractional_power_apply(x, alpha, 0.3, coeffs), -alpha, 0.3, coeffs
            )
            np.testing.assert_allclose(back, x, rtol=1e-14)

    def test_semigroup_in_alpha(self):
        coeffs = default_coefficients()
        x = np.array([1.0, 0.5, -0.25])
        lhs = fractional_power_apply(
            fractional_power_apply(x, 0.25, 0.1, coeffs), 0.5, 0.1, coeffs
        )
        rhs = fractional_power_apply(x, 0.75, 0.1, coeffs)
        np.testing.assert_allclose(lhs, rhs, rtol=1e-13)

    @pytest.mark.parametrize("alpha", [0.0, 1.5, -1.0, 2.0])
    def test_rejects_out_of_range_alpha(self, alpha):
        coeffs = default_coefficients()
        with pytest.raises(ValueError, match="alpha"):
            fractional_power_apply(np.ones(2), alpha, 0.0, coeffs)

    def test_rejects_bad_reaction_coefficient(self):
        coeffs = default_coefficients()
        bad = type(coeffs)(b=lambda t: 0.0 * np.asarray(t))
        with pytest.raises(ValueError, match="b\\(t0\\)"):
            fractional_power_apply(np.ones(2), 0.5, 0.0, bad)


class TestControlMatrix:
    def test_full_window_is_identity(self):
        basis = BasisSpec(6)
        np.testing.assert_allclose(
            control_matrix(0.0, np.pi, basis), np.eye(6), atol=1e-14
        )

    def test_half_window_frozen_entries(self):
        # oracle: dense quadrature of (2/pi) int sin(m xi) sin(n xi)
        basis = BasisSpec(4)
        mat = control_matrix(0.0, np.pi / 2, basis)
        assert mat[0, 0] == pytest.approx(0.5, abs=1e-14)
        assert mat[0, 1] == pytest.approx(0.4244131815783876, abs=1e-14)
        for m in range(1, 5):
            for n in range(1, 5):
                oracle, _ = quad(
                    lambda x, m=m, n=n: (2 / np.pi) * np.sin(m * x) * np.sin(n * x),
                    0.0,
                    np.pi / 2,
                )
                assert mat[m - 1, n - 1] == pytest.approx(oracle, abs=1e-12)

    def test_symmetric_psd_contraction(self):
        basis = BasisSpec(12)
        rng = np.random.default_rng(3)
        for _ in range(8):
            a1, a2 = np.sort(rng.uniform(0.0, np.pi, size=2))
            if a2 - a1 < 1e-3:
                continue
            mat = control_matrix(a1, a2, basis)
            np.testing.assert_allclose(mat, mat.T, atol=1e-15)
            eigs = np.linalg.eigvalsh(mat)
            assert eigs.min() > -1e-12
            assert eigs.max() < 1.0 + 1e-12

    def test_rejects_degenerate_window(self):
        with pytest.raises(ValueError, match="a1"):
            control_matrix(1.0, 1.0, BasisSpec(4))
        with pytest.raises(ValueError, match="a1"):
            control_matrix(2.0, 1.0, BasisSpec(4))
