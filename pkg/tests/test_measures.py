import math

import numpy as np
import pytest

from core.errors import DomainError
from core.euler import lambda_theta, local_mgf
from core.measures import (
    AngleMeasure,
    cdf,
    density,
    expect,
    gauss_legendre_rule,
    integrate_piecewise,
    plancherel_g,
    sample,
    sato_tate_density,
)
from core.specfun import big_g


class TestAngleMeasure:
    def test_labels(self):
        assert AngleMeasure.sato_tate().label == 'mu_inf'
        assert AngleMeasure.plancherel(7).label == 'mu_7'
        assert AngleMeasure.plancherel(7).tilted(0.8, 2.0).is_tilted

    def test_zero_tilt_is_untilted(self):
        assert not AngleMeasure.plancherel(7).tilted(0.8, 0.0).is_tilted

    def test_validation(self):
        with pytest.raises(DomainError):
            AngleMeasure.plancherel(9)
        with pytest.raises(DomainError):
            AngleMeasure(kind='sato_tate', sigma=0.8, kappa=1.0)
        with pytest.raises(DomainError):
            AngleMeasure.plancherel(5).tilted(0.4, 1.0)

    def test_density_domain(self):
        with pytest.raises(DomainError):
            density(AngleMeasure.sato_tate(), np.array([-0.1]))


class TestQuadrature:
    def test_rule_integrates_polynomials(self):
        rule = gauss_legendre_rule(8, 0.0, 2.0)
        assert np.sum(rule.weights * rule.nodes ** 7) == pytest.approx(2.0 ** 8 / 8.0, rel=1e-14)

    def test_piecewise(self):
        value, scale = integrate_piecewise(np.sin, [0.0, 1.0, math.pi])
        assert value == pytest.approx(2.0, rel=1e-13)
        assert scale == pytest.approx(2.0, rel=1e-13)

    @pytest.mark.parametrize('p', [2, 5, 13, 101])
    def test_plancherel_moments(self, p):
        m = AngleMeasure.plancherel(p)
        assert abs(expect(m, np.cos)) <= 1e-12
        assert expect(m, lambda t: np.cos(t) ** 2) == pytest.approx(0.25 * (1.0 + 1.0 / p), abs=1e-12)
        assert expect(m, lambda t: np.ones_like(t)) == pytest.approx(1.0, abs=1e-13)

    def test_tilted_measure_is_normalized(self):
        m = AngleMeasure.plancherel(3).tilted(0.8, 1.0)
        assert expect(m, lambda t: np.ones_like(t)) == pytest.approx(1.0, rel=1e-9)

    def test_plancherel_g_tends_to_g(self):
        ratio = plancherel_g(101, 1.0) / complex(big_g(1.0))
        assert 101 * abs(ratio - 1.0) <= 5.0

    def test_plancherel_rate(self):
        theta = np.linspace(0.01, math.pi - 0.01, 999)
        for p in (11, 101, 1009):
            ratio = density(AngleMeasure.plancherel(p), theta) / sato_tate_density(theta)
            assert p * np.max(np.abs(ratio - 1.0)) <= 5.0


class TestCdf:
    def test_sato_tate_closed_form(self):
        assert cdf(AngleMeasure.sato_tate(), math.pi / 2.0) == pytest.approx(0.5, abs=1e-15)

    def test_plancherel_table(self):
        m = AngleMeasure.plancherel(5)
        grid = np.linspace(0.0, math.pi, 200)
        values = cdf(m, grid)
        assert values[0] == 0.0
        assert values[-1] == pytest.approx(1.0, abs=1e-12)
        assert np.all(np.diff(values) >= 0.0)
        # mu_5 is symmetric under theta -> pi - theta
        assert cdf(m, math.pi / 2.0) == pytest.approx(0.5, abs=1e-10)


class TestSampling:
    def test_reproducible(self):
        m = AngleMeasure.plancherel(3)
        assert np.array_equal(sample(m, 7, 1000), sample(m, 7, 1000))
        assert not np.array_equal(sample(m, 7, 1000, stream=0), sample(m, 7, 1000, stream=1))

    def test_plancherel_mean_of_cos(self):
        n = 200_000
        draws = np.cos(sample(AngleMeasure.plancherel(2), 11, n))
        assert abs(draws.mean()) <= 4.0 * math.sqrt(0.25 * 1.5 / n)
        assert np.all((draws >= -1.0) & (draws <= 1.0))

    def test_tilted_mean_is_log_derivative(self):
        """E_tilted[2 lambda] = d/dkappa log F_{sigma,p}(kappa)."""
        p, sigma, kappa, h = 2, 0.8, 3.0, 1e-4
        slope = (local_mgf(p, sigma, kappa + h).log_modulus
                 - local_mgf(p, sigma, kappa - h).log_modulus) / (2.0 * h)
        values = 2.0 * lambda_theta(p, sigma, sample(AngleMeasure.plancherel(p).tilted(sigma, kappa), 5, 100_000))
        stderr = values.std(ddof=1) / math.sqrt(len(values))
        assert abs(values.mean() - slope) <= 4.0 * stderr

    def test_sample_size(self):
        with pytest.raises(DomainError):
            sample(AngleMeasure.sato_tate(), 1, 0)
