import math

import numpy as np
import pytest

from wavesieve.hyperbolic import UHPoint, group_inv, group_mul, make_grid
from wavesieve.orthogonality import C0_closed, C_n, C_nm, disk_inner_product, double_orthogonality_residual
from wavesieve.wavelets import (WaveletIndex, admissibility, admissibility_quadrature, basis_coeff, cauchy_coeff,
                                coeff_covariance, coeff_quadrature, cross_level_orthogonality_check, hardy_norm_sq,
                                kernel, kernel_modulus_profile, kernel_quadrature, mixed_coeff, psi_hat,
                                translated_coeff)

ALPHAS = [0.5, 1.0, 2.5, 4.0]
POINTS = [1j, 0.3 + 0.7j, -1.2 + 2.5j, 2.0 + 0.4j]


def random_points(rng, k, spread=2.0):
    return rng.uniform(-spread, spread, k) + 1j * np.exp(rng.uniform(-1.5, 1.5, k))


class TestIndex:
    @pytest.mark.parametrize("n,alpha", [(-1, 1.0), (1.5, 1.0), (0, 0.0), (0, -2.0)])
    def test_rejects(self, n, alpha):
        with pytest.raises(ValueError):
            WaveletIndex(n, alpha)

    def test_integrability_guard(self):
        with pytest.raises(ValueError):
            WaveletIndex(0, 1.0).require_integrable()
        assert WaveletIndex(0, 1.5).require_integrable().alpha == 1.5


class TestMotherWavelet:
    def test_vanishes_on_negative_frequencies(self):
        w = WaveletIndex(2, 1.5)
        assert np.all(psi_hat(w, np.array([-3.0, -1e-9, 0.0])) == 0)

    def test_ground_state_formula(self):
        t = np.linspace(0.01, 10, 50)
        alpha = 2.5
        expected = np.sqrt(2 ** (alpha + 2) * math.pi / math.gamma(alpha + 1)) * t ** (alpha / 2) * np.exp(-t)
        np.testing.assert_allclose(psi_hat(WaveletIndex(0, alpha), t), expected, rtol=1e-13)

    @pytest.mark.parametrize("n", [0, 1, 3, 6])
    @pytest.mark.parametrize("alpha", ALPHAS)
    def test_unit_norm_and_admissibility(self, n, alpha):
        w = WaveletIndex(n, alpha)
        assert hardy_norm_sq(w) == pytest.approx(1.0, rel=1e-10)
        assert admissibility_quadrature(w) == pytest.approx(4 * math.pi / alpha, rel=1e-10)

    def test_checked_admissibility(self):
        res = admissibility(WaveletIndex(3, 1.5), checked=True)
        assert res.value == pytest.approx(4 * math.pi / 1.5) and res.residual < 1e-9
        assert admissibility(WaveletIndex(3, 1.5)).quadrature is None


class TestKernel:
    @pytest.mark.parametrize("n", [0, 1, 3])
    @pytest.mark.parametrize("alpha", ALPHAS)
    def test_diagonal(self, n, alpha, rng):
        z = random_points(rng, 30)
        np.testing.assert_allclose(kernel(WaveletIndex(n, alpha), z, z), alpha / (4 * math.pi), rtol=1e-12)

    def test_hermitian_and_bounded(self, rng):
        for n, alpha in [(0, 0.5), (2, 1.5), (4, 3.0)]:
            w = WaveletIndex(n, alpha)
            z, u = random_points(rng, 500), random_points(rng, 500)
            k = kernel(w, z, u)
            np.testing.assert_allclose(k, np.conj(kernel(w, u, z)), atol=1e-14)
            assert np.all(np.abs(k) <= alpha / (4 * math.pi) * (1 + 1e-12))

    @pytest.mark.parametrize("n,alpha", [(0, 1.0), (1, 2.5), (3, 0.5), (2, 4.0)])
    def test_against_frequency_quadrature(self, n, alpha):
        w = WaveletIndex(n, alpha)
        for z, u in [(1j, 0.5 + 2j), (-1 + 0.5j, 0.7 + 0.8j), (2 + 3j, 1.5 + 1j)]:
            assert kernel(w, z, u) == pytest.approx(kernel_quadrature(w, z, u), abs=1e-9)

    def test_left_invariance(self, rng):
        w = WaveletIndex(2, 1.5)
        z, u, a = random_points(rng, 100), random_points(rng, 100), random_points(rng, 100)
        np.testing.assert_allclose(kernel(w, group_mul(a, z), group_mul(a, u)), kernel(w, z, u), atol=1e-13)

    def test_modulus_profile(self, rng):
        from wavesieve.hyperbolic import pseudo_dist
        w = WaveletIndex(3, 2.0)
        z, u = random_points(rng, 200), random_points(rng, 200)
        prof = w.alpha / (4 * math.pi) * kernel_modulus_profile(w, pseudo_dist(z, u))
        np.testing.assert_allclose(np.abs(kernel(w, z, u)), prof, rtol=1e-10, atol=1e-15)


class TestBasisCoefficients:
    @pytest.mark.parametrize("alpha", ALPHAS)
    def test_identity_at_base_point(self, alpha):
        for n in range(5):
            for m in range(5):
                assert basis_coeff(n, m, alpha, 1j) == pytest.approx(float(n == m), abs=1e-14)

    @pytest.mark.parametrize("alpha", ALPHAS)
    def test_ground_wavelet_matches_cauchy_form(self, alpha, rng):
        z = random_points(rng, 200)
        for m in range(5):
            np.testing.assert_allclose(basis_coeff(0, m, alpha, z), cauchy_coeff(m, alpha, z), rtol=1e-11, atol=1e-15)

    @pytest.mark.parametrize("n,m", [(0, 0), (1, 0), (0, 2), (2, 3), (3, 1)])
    @pytest.mark.parametrize("alpha", [0.5, 1.5, 3.0])
    def test_against_frequency_quadrature(self, n, m, alpha):
        for z in POINTS:
            assert basis_coeff(n, m, alpha, z) == pytest.approx(coeff_quadrature(n, m, alpha, z), abs=1e-9)

    def test_mixed_form_agrees_when_parameters_coincide(self, rng):
        z = random_points(rng, 100)
        for n, m, alpha in [(0, 1, 1.5), (2, 2, 3.0), (3, 1, 0.7)]:
            np.testing.assert_allclose(mixed_coeff(n, alpha, m, alpha, z), basis_coeff(n, m, alpha, z),
                                       rtol=1e-9, atol=1e-13)

    def test_mixed_form_against_quadrature(self):
        for z in POINTS:
            assert mixed_coeff(1, 2.0, 2, 4.0, z) == pytest.approx(coeff_quadrature(1, 2, 0, z, a=2.0, b=4.0), abs=1e-9)

    def test_branch_switch_is_continuous(self):
        # |u| straddling the switch between disk and half-plane evaluation
        for r in (0.98999999, 0.99000001):
            u = r * np.exp(0.7j)
            z = 1j * (1 + u) / (1 - u)
            assert basis_coeff(2, 3, 1.5, z) == pytest.approx(coeff_quadrature(2, 3, 1.5, z), abs=1e-9)

    def test_covariance(self, rng):
        z, w = random_points(rng, 50), random_points(rng, 50)
        for n, m, alpha in [(1, 2, 2.0), (0, 0, 0.5)]:
            got = np.array([coeff_quadrature(n, m, alpha, complex(coeff_covariance(zi, wi))) for zi, wi in
                            zip(z[:5], w[:5])])
            np.testing.assert_allclose(translated_coeff(n, m, alpha, z[:5], w[:5]), got, atol=1e-9)
        assert complex(coeff_covariance(UHPoint(1, 2), UHPoint(1, 2))) == pytest.approx(1j)
        np.testing.assert_allclose(coeff_covariance(z, w), group_mul(group_inv(w), z))

    def test_coefficient_bounded_by_one(self, rng):
        z = random_points(rng, 2000, spread=6)
        for n, m, alpha in [(0, 3, 0.5), (2, 2, 1.5), (4, 1, 3.0)]:
            assert np.all(np.abs(basis_coeff(n, m, alpha, z)) <= 1 + 1e-12)


class TestLocalOrthogonality:
    @pytest.mark.parametrize("alpha", [0.5, 1.5, 3.0])
    def test_constants_closed_form_and_monotone(self, alpha):
        radii = [0.1, 0.3, 0.5, 0.7, 0.9]
        vals = [C_n(0, alpha, R) for R in radii]
        np.testing.assert_allclose(vals, [C0_closed(alpha, R) for R in radii], rtol=1e-10)
        for n, m in [(2, 2), (1, 3)]:
            seq = [C_nm(n, m, alpha, R) for R in radii]
            assert np.all(np.diff(seq) > 0)

    @pytest.mark.parametrize("n,m", [(0, 0), (2, 2), (1, 3)])
    def test_full_disk_limit(self, n, m):
        assert C_nm(n, m, 3.0, 0.9999) == pytest.approx(4 * math.pi / 3.0, rel=1e-6)

    @pytest.mark.parametrize("n,m,k", [(0, 0, 1), (1, 2, 2), (2, 0, 3), (3, 3, 1)])
    def test_disk_orthogonality(self, n, m, k):
        for R in (0.3, 0.7):
            assert double_orthogonality_residual(n, m, k, 1.5, R) < 1e-10

    def test_diagonal_matches_constant(self):
        assert disk_inner_product(2, 3, 3, 2.0, 0.6).real == pytest.approx(C_nm(2, 3, 2.0, 0.6), rel=1e-10)

    def test_rejects_radius(self):
        with pytest.raises(ValueError):
            C_nm(0, 0, 1.0, 1.0)


class TestCrossLevel:
    def test_diagonal_constant(self):
        grid = make_grid(dict(x_min=-40, x_max=40, nx=400, s_min=1e-3, s_max=1e3, ns=400))
        res = cross_level_orthogonality_check(4.5, 1, 1, 0, 0, grid=grid)
        assert res.conclusive
        assert res.matched == "4pi/(2B-2n-1)"
        assert res.value.real == pytest.approx(4 * math.pi / 6, rel=1e-3)

    def test_rejects_small_B(self):
        with pytest.raises(ValueError):
            cross_level_orthogonality_check(0.5, 0, 0, 0, 0)
        with pytest.raises(ValueError):
            cross_level_orthogonality_check(1.2, 1, 0, 0, 0)
