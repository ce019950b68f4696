import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special as sp

from wavesieve import special
from wavesieve.selftest import hypergeometric_series


def laguerre_sum(n, a, t):
    return sum((-1) ** k / math.factorial(k) * sp.binom(n + a, n - k) * t ** k for k in range(n + 1))


def jacobi_sum(n, a, b, x):
    return sum(sp.binom(n + a, n - k) * sp.binom(n + b, k) * ((x - 1) / 2) ** k * ((x + 1) / 2) ** (n - k)
               for k in range(n + 1))


class TestPolyDegreePair:
    def test_accessors(self):
        p = special.PolyDegreePair(2, 5)
        assert (p.low, p.high, p.gap) == (2, 5, 3)

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            special.PolyDegreePair(-1, 2)


class TestGammaRatio:
    @pytest.mark.parametrize("a,b", [(0.5, 3.0), (7.25, 2.5), (30.0, 1.0), (12.0, 29.5)])
    def test_matches_direct_gamma(self, a, b):
        assert special.gamma_ratio(a, b).value == pytest.approx(math.gamma(a) / math.gamma(b), rel=1e-12)

    def test_large_arguments_do_not_overflow(self):
        r = special.gamma_ratio(60 + 50 + 1, 61)
        assert math.isfinite(r.log_value)
        assert r.log_value == pytest.approx(math.lgamma(111) - math.lgamma(61), rel=1e-14)


class TestLaguerre:
    def test_degree_zero(self):
        assert special.laguerre(0, 1.7, 4.2) == 1.0

    def test_worked_values(self):
        assert special.laguerre(1, 2.0, 3.0) == pytest.approx(0.0, abs=1e-15)
        assert special.laguerre(2, 0.0, 2.0) == pytest.approx(-1.0, rel=1e-15)

    @pytest.mark.parametrize("a", [0.5, 1.5, 3.0])
    def test_recurrence_matches_explicit_sum(self, a):
        t = np.linspace(0, 20, 100)
        for n in range(11):
            ref = np.array([laguerre_sum(n, a, tt) for tt in t])
            got = special.laguerre(n, a, t)
            np.testing.assert_allclose(got, ref, rtol=1e-11, atol=1e-11 * np.max(np.abs(ref)))

    def test_matches_scipy(self):
        t = np.linspace(0, 30, 41)
        np.testing.assert_allclose(special.laguerre(7, 2.5, t), sp.eval_genlaguerre(7, 2.5, t), rtol=1e-10, atol=1e-9)


class TestJacobi:
    def test_degree_zero(self):
        assert special.jacobi(0, 0.3, 1.2, 0.1) == 1.0

    @pytest.mark.parametrize("n,a", [(1, 0.0), (3, 2.5), (6, 0.5)])
    def test_value_at_one(self, n, a):
        assert special.jacobi(n, a, 1.5, 1.0) == pytest.approx(sp.binom(n + a, n), rel=1e-13)

    def test_degree_one_worked_value(self):
        assert special.jacobi(1, 0, 2.5, 0.2) == pytest.approx(-0.8, rel=1e-14)

    @pytest.mark.parametrize("a", [0.5, 1.5, 3.0])
    def test_recurrence_matches_explicit_sum(self, a):
        x = np.linspace(-1, 1, 100)
        for n in range(11):
            ref = np.array([jacobi_sum(n, a, 2.0, xx) for xx in x])
            np.testing.assert_allclose(special.jacobi(n, a, 2.0, x), ref, rtol=1e-11,
                                       atol=1e-11 * np.max(np.abs(ref)))

    def test_coefficients_in_t_reproduce_polynomial(self):
        c = special.jacobi_coefficients_in_t(4, 1.0, 2.5)
        t = np.linspace(0, 1, 7)
        np.testing.assert_allclose(np.polynomial.polynomial.polyval(t, c), special.jacobi(4, 1.0, 2.5, 1 - 2 * t),
                                   rtol=1e-12, atol=1e-12)


class TestHypergeometric:
    def test_trivial_when_one_index_is_zero(self):
        assert special.hyp2f1_terminating(0, 4, 2.3, 5.0) == 1.0
        assert special.hyp2f1_terminating(3, 0, 2.3, 5.0) == 1.0

    def test_two_term_value(self):
        # 1 + (-1)(-1)/((-4) 1!) 3 = 1 - 3/4
        assert hypergeometric_series(1, 1, 2.0, 3.0) == pytest.approx(0.25, rel=1e-15)
        assert special.hyp2f1_terminating(1, 1, 2.0, 3.0) == pytest.approx(0.25, rel=1e-14)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 4), st.integers(0, 4), st.floats(0.05, 5.0), st.floats(1.5, 10.0))
    def test_series_oracle_random(self, m, n, a, z):
        ref = hypergeometric_series(m, n, a, z)
        assert special.hyp2f1_terminating(m, n, a, z) == pytest.approx(ref, rel=1e-10)

    def test_integer_alpha_sweep(self):
        for a in (0.7, 2, 4):
            for m in range(6):
                for n in range(6):
                    for z in np.linspace(1.2, 20, 12):
                        assert special.hyp2f1_terminating(m, n, a, z) == pytest.approx(
                            hypergeometric_series(m, n, a, z), rel=1e-10)

    def test_bare_value_at_zero_rejected(self):
        with pytest.raises(ValueError):
            special.hyp2f1_terminating(2, 3, 1.0, 0.0)


class TestZernike:
    def test_trivial_pair(self):
        u = np.array([0.0, 0.3 + 0.4j, -0.7j])
        np.testing.assert_allclose(special.zernike_weighted(0, 0, 2.0, u), 1.0)

    @pytest.mark.parametrize("n", [1, 2, 4])
    def test_origin_limit(self, n):
        a = 2.5
        expected = (-1) ** n * special.jacobi(n, 0, a, 1.0) * special.zernike_norm(n, n, a)
        at0 = special.zernike_weighted(n, n, a, 0.0)
        assert at0 == pytest.approx(expected, rel=1e-12)
        assert abs(special.zernike_weighted(n, n, a, 1e-6) - at0) <= 1e-6 * max(1, abs(at0))

    def test_continuity_near_origin(self):
        # off the diagonal the value is O(|u|^|n-m|) times the normalisation constant
        for n, m in [(1, 1), (2, 3), (3, 1), (0, 2), (4, 4)]:
            a = special.zernike_weighted(n, m, 2.0, 1e-6)
            b = special.zernike_weighted(n, m, 2.0, 1e-8)
            k, gap = min(n, m), abs(n - m)
            lead = special.zernike_norm(n, m, 2.0) * special.jacobi(k, gap, 2.0, 1.0)
            assert abs(a - b) <= 1e-6 * max(1.0, lead)

    def test_direct_formula_away_from_origin(self):
        u = 0.3 + 0.1j
        direct = u ** 2 * np.conj(u) * special.zernike_radial(1, 2, 2.0, abs(u) ** 2)
        assert special.zernike_weighted(1, 2, 2.0, u) == pytest.approx(direct, rel=1e-13)
