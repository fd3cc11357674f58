import math

import numpy as np
import pytest
from scipy.integrate import quad

from core.errors import DomainError
from core.euler import (
    TAIL_ANALYTIC,
    TAIL_NONE,
    ModelConfig,
    auto_cutoff,
    cgf,
    lambda_second_derivative,
    lambda_series,
    lambda_theta,
    local_mgf,
    local_mgf_peak_form,
    mgf_ratio,
    mgf_ratio_array,
    prime_tail,
    sato_tate_ratio,
)
from core.measures import AngleMeasure, expect, plancherel_factor, sato_tate_density
from core.primes import is_prime, prime_power_tail, sieve


@pytest.fixture
def tiny_cfg():
    return ModelConfig(sigma=0.8, prime_cutoff=100, tail_mode=TAIL_NONE)


class TestModelConfig:
    @pytest.mark.parametrize('kwargs', [
        dict(sigma=0.5),
        dict(sigma=1.2),
        dict(sigma=0.8, prime_cutoff=50),
        dict(sigma=0.8, quadrature_order=16),
        dict(sigma=0.8, tail_mode='bogus'),
        dict(sigma=0.5004),
    ])
    def test_rejects(self, kwargs):
        with pytest.raises(DomainError):
            ModelConfig(**kwargs)

    def test_near_half_without_tail(self):
        assert ModelConfig(sigma=0.5004, tail_mode=TAIL_NONE).tail_mode == TAIL_NONE

    def test_auto_cutoff(self):
        assert auto_cutoff(0.8, 1.0) == 10007
        big = auto_cutoff(1.0, 1e4)
        assert big >= 40000 and is_prime(big)
        assert ModelConfig(sigma=0.8, prime_cutoff=1000).resolve_cutoff(50.0) == 1000


class TestLambda:
    def test_closed_form_matches_series(self):
        theta = np.linspace(0.0, math.pi, 41)
        assert np.allclose(lambda_theta(5, 0.8, theta), lambda_series(5, 0.8, theta), rtol=1e-13, atol=1e-15)

    def test_second_derivative_at_ends(self):
        x = 3.0 ** -0.9
        assert lambda_second_derivative(3, 0.9, 0.0) == pytest.approx(-x / (1.0 - x) ** 2, rel=1e-14)
        assert lambda_second_derivative(3, 0.9, math.pi) == pytest.approx(x / (1.0 + x) ** 2, rel=1e-12)


class TestLocalMgf:
    def test_zero(self):
        assert local_mgf(7, 0.8, 0.0).log_modulus == 0.0

    def test_matches_direct_expectation(self):
        direct = expect(AngleMeasure.plancherel(5), lambda t: np.exp(3.0 * lambda_theta(5, 0.8, t)))
        assert math.exp(local_mgf(5, 0.8, 1.5).log_modulus) == pytest.approx(direct, rel=1e-10)

    def test_peaked_branch_matches_adaptive_quadrature(self):
        s, lam0 = 20.0, float(lambda_theta(2, 1.0, 0.0))

        def integrand(t):
            return sato_tate_density(t) * plancherel_factor(2, t) * math.exp(2.0 * s * (lambda_theta(2, 1.0, t) - lam0))

        value, _ = quad(integrand, 0.0, math.pi, points=[0.05, 0.2], epsabs=0.0, epsrel=1e-12, limit=200)
        expected = math.log(value) + 2.0 * s * lam0
        assert local_mgf(2, 1.0, s).log_modulus == pytest.approx(expected, rel=1e-10)

    def test_peak_form_is_the_large_s_limit(self):
        def gap(s):
            return abs(local_mgf(2, 1.0, s).log_modulus - local_mgf_peak_form(2, 1.0, s).log_modulus)

        assert gap(2000.0) < gap(200.0)
        assert gap(2000.0) < 0.05

    def test_negative_real_part(self):
        value = local_mgf(3, 0.8, -2.0)
        direct = expect(AngleMeasure.plancherel(3), lambda t: np.exp(-4.0 * lambda_theta(3, 0.8, t)))
        assert math.exp(value.log_modulus) == pytest.approx(direct, rel=1e-10)
        assert value.phase == pytest.approx(0.0, abs=1e-12)

    def test_sato_tate_ratio_near_one_for_large_p(self):
        assert abs(complex(sato_tate_ratio(10007, 0.8, 2.0)) - 1.0) < 1e-3

    def test_peak_form_domain(self):
        with pytest.raises(DomainError):
            local_mgf_peak_form(2, 1.0, -1.0)


class TestCgf:
    def test_zero_at_origin(self, small_cfg):
        assert abs(cgf(small_cfg, 0.0, 0).f) < 1e-12

    def test_sum_of_local_factors(self, tiny_cfg):
        total = math.fsum(local_mgf(int(p), 0.8, 3.0).log_modulus for p in sieve(100).primes)
        assert cgf(tiny_cfg, 3.0, 0).f == pytest.approx(total, rel=1e-9)

    @pytest.mark.parametrize('kappa', [-2.0, 2.0, 10.0])
    def test_derivatives_match_finite_differences(self, small_cfg, kappa):
        h = 1e-4
        report = cgf(small_cfg, kappa, 3)
        for j in (1, 2, 3):
            up = cgf(small_cfg, kappa + h, j - 1).values[j - 1]
            down = cgf(small_cfg, kappa - h, j - 1).values[j - 1]
            assert report.values[j] == pytest.approx((up - down) / (2.0 * h), rel=1e-5)

    def test_contour_orders(self, tiny_cfg):
        h = 1e-3
        report = cgf(tiny_cfg, 2.0, 5)
        slope = (cgf(tiny_cfg, 2.0 + h, 4).values[4] - cgf(tiny_cfg, 2.0 - h, 4).values[4]) / (2.0 * h)
        assert report.values[5] == pytest.approx(slope, rel=1e-3, abs=1e-6)

    def test_convex(self, small_cfg):
        slopes = [cgf(small_cfg, k, 2).values[1] for k in (-3.0, 0.0, 3.0)]
        assert slopes[0] < slopes[1] < slopes[2]

    def test_regime(self, small_cfg):
        # 100 * 1000^-0.8 > 1/4
        with pytest.raises(DomainError):
            cgf(small_cfg, 100.0)

    def test_j_max(self, small_cfg):
        with pytest.raises(DomainError):
            cgf(small_cfg, 1.0, 7)

    def test_report_without_tail(self, small_cfg):
        report = cgf(small_cfg, 2.0)
        assert report.tail_correction == 0.0
        assert report.cutoff == 1000
        assert report.n_primes == 168
        assert report.finite_part == report.values


class TestPrimeTail:
    def test_formula(self):
        tail = prime_tail(0.8, 1000)
        t2, t21 = prime_power_tail(1.6, 1000), prime_power_tail(2.6, 1000)
        assert tail.s_plus == pytest.approx(t2 + t21, rel=1e-15)
        assert tail.s_minus == pytest.approx(t2 - t21, rel=1e-15)
        assert tail.cgf(2.0) == pytest.approx(2.0 * tail.s_plus - tail.s_minus, rel=1e-14)
        assert tail.derivative(2.0, 2) == tail.s_plus
        assert tail.derivative(2.0, 3) == 0.0

    def test_analytic_tail_improves_truncation(self):
        reference = cgf(ModelConfig(sigma=1.0, prime_cutoff=20000, tail_mode=TAIL_ANALYTIC), 2.0, 0).f
        with_tail = cgf(ModelConfig(sigma=1.0, prime_cutoff=1000, tail_mode=TAIL_ANALYTIC), 2.0, 0).f
        without = cgf(ModelConfig(sigma=1.0, prime_cutoff=1000, tail_mode=TAIL_NONE), 2.0, 0).f
        assert abs(with_tail - reference) < 0.2 * abs(without - reference)


class TestMgfRatio:
    def test_unit_at_zero_and_contraction(self, tiny_cfg):
        ratios = mgf_ratio_array(tiny_cfg, 1.0, [0.0, 0.5, 2.0, 7.0])
        assert ratios[0] == 1.0
        assert np.all(np.abs(ratios) <= 1.0 + 1e-12)

    def test_product_of_local_ratios(self, tiny_cfg):
        kappa, v = 1.0, 0.7
        log_ratio = sum(local_mgf(int(p), 0.8, complex(kappa, v)).log - local_mgf(int(p), 0.8, kappa).log
                        for p in sieve(100).primes)
        assert complex(mgf_ratio(tiny_cfg, kappa, v)) == pytest.approx(complex(np.exp(log_ratio)), rel=1e-8)

    def test_tail_factor_is_gaussian(self):
        cfg = ModelConfig(sigma=0.8, prime_cutoff=100)
        bare = mgf_ratio_array(cfg.with_tail_mode(TAIL_NONE), 0.0, [1.5])[0]
        full = mgf_ratio_array(cfg, 0.0, [1.5])[0]
        tail = prime_tail(0.8, 100)
        expected = bare * np.exp(-0.5 * 1.5 ** 2 * tail.s_plus - 0.75j * tail.s_minus)
        assert full == pytest.approx(expected, rel=1e-12)


class TestLargeTilt:
    # thousands of primes put log Z at its roundoff floor; the doubling check must accept it
    @pytest.mark.parametrize('kappa', [
        3e3,
        1e4,
        pytest.param(1e5, marks=pytest.mark.slow),
    ])
    def test_cgf_converges_at_sigma_one(self, kappa):
        report = cgf(ModelConfig(sigma=1.0), kappa, 2)
        assert report.cutoff == auto_cutoff(1.0, kappa)
        assert all(math.isfinite(v) for v in report.values)
        assert report.values[1] > 0.0
        assert report.values[2] > 0.0

    def test_slope_keeps_increasing(self):
        cfg = ModelConfig(sigma=1.0, prime_cutoff=40009)
        slopes = [cgf(cfg, kappa, 1).values[1] for kappa in (1e3, 3e3, 1e4)]
        assert slopes[0] < slopes[1] < slopes[2]
