import math

import numpy as np
import pytest
from scipy.special import iv, ive, ivp, jn_zeros

from core.errors import DomainError, KinkError
from core.specfun import (
    PUBLISHED_FIRST_ZERO_ORDINATE,
    ComplexPoint,
    GDerivativeRequest,
    Variant,
    bessel_i,
    big_g,
    first_imaginary_zero_of_g,
    g_deriv,
    g_value,
    log_big_g,
)


class TestBessel:
    @pytest.mark.parametrize('order', [0, 1, 2])
    @pytest.mark.parametrize('z', [0.0, 0.3, 2.5, 9.0, 15.0])
    def test_series_matches_scipy(self, order, z):
        """Power-series branch against scipy.special.iv."""
        value = complex(bessel_i(order, z))
        assert value.real == pytest.approx(iv(order, z), rel=1e-12, abs=1e-300)
        assert value.imag == 0.0

    @pytest.mark.parametrize('z', [25.0, 60.0, 400.0])
    def test_asymptotic_branch_matches_scipy(self, z):
        value = complex(bessel_i(1, z))
        assert value.real / (ive(1, z) * math.exp(z)) == pytest.approx(1.0, rel=1e-10)

    def test_complex_argument(self):
        z = 3.0 + 4.0j
        assert complex(bessel_i(0, z)) == pytest.approx(complex(iv(0, z)), rel=1e-12)

    def test_rejects_unsupported_order_and_size(self):
        with pytest.raises(DomainError):
            bessel_i(3, 1.0)
        with pytest.raises(DomainError):
            bessel_i(0, 2e4)

    def test_complex_point_is_finite(self):
        with pytest.raises(DomainError):
            ComplexPoint(float('inf'), 0.0)


class TestBigG:
    def test_value_at_zero(self):
        assert complex(big_g(0.0)) == 1.0

    @pytest.mark.parametrize('u', [0.05, 1.0, 7.5, 30.0])
    def test_matches_bessel_ratio(self, u):
        expected = iv(1, 2.0 * u) / u
        assert complex(big_g(u)).real == pytest.approx(expected, rel=1e-11)

    def test_even(self):
        assert complex(big_g(-2.0)) == pytest.approx(complex(big_g(2.0)), rel=1e-14)

    def test_log_without_overflow(self):
        u = np.array([1e-4, 0.5, 3.0, 500.0, 4000.0])
        expected = 2.0 * u + np.log(ive(1, 2.0 * u) / u)
        assert np.allclose(log_big_g(u).real, expected, rtol=1e-12, atol=1e-15)


class TestGDerivatives:
    @pytest.mark.parametrize('u', [0.2, 1.5, 6.0, 40.0])
    def test_first_derivative(self, u):
        """g'(u) = G'(u)/G(u) with G'(u) = 2 I_1'(2u)/u - I_1(2u)/u^2."""
        big = iv(1, 2.0 * u) / u
        slope = 2.0 * ivp(1, 2.0 * u) / u - iv(1, 2.0 * u) / u ** 2
        assert g_value(u, 1) == pytest.approx(slope / big, rel=1e-9)

    def test_small_u_expansion(self):
        # g(u) = u^2/2 - u^4/24 + ...
        u = 1e-3
        assert g_value(u) == pytest.approx(u * u / 2.0 - u ** 4 / 24.0, rel=1e-12)

    def test_variants(self):
        assert g_value(3.0, 0, Variant.G_STAR) == pytest.approx(g_value(3.0) - 6.0, rel=1e-13)
        assert g_value(0.5, 0, Variant.G_STAR) == g_value(0.5)
        assert g_value(4.0, 0, Variant.H) == pytest.approx(g_value(2.0), rel=1e-14)
        assert g_value(4.0, 0, Variant.H_STAR) == pytest.approx(g_value(2.0) - 4.0, rel=1e-13)
        assert g_value(4.0, 2, Variant.H) == pytest.approx(g_value(2.0, 2) / 4.0, rel=1e-12)

    @pytest.mark.parametrize('variant', [Variant.G_STAR, Variant.H_STAR])
    def test_kink(self, variant):
        with pytest.raises(KinkError):
            g_deriv(GDerivativeRequest(1.0, 1, variant))
        assert math.isfinite(g_deriv(GDerivativeRequest(1.0, 0, variant)))

    def test_request_validation(self):
        with pytest.raises(DomainError):
            GDerivativeRequest(0.0, 1)
        with pytest.raises(DomainError):
            GDerivativeRequest(1.0, 9)


class TestImaginaryZero:
    def test_first_zero_is_half_the_bessel_zero(self):
        assert first_imaginary_zero_of_g() == pytest.approx(jn_zeros(1, 1)[0] / 2.0, abs=1e-9)

    def test_published_ordinate_is_not_the_first_zero(self):
        assert abs(first_imaginary_zero_of_g() - PUBLISHED_FIRST_ZERO_ORDINATE) > 1.0
