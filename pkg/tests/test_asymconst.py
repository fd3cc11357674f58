import math
import warnings

import pytest
from scipy.integrate import IntegrationWarning

import core.asymconst as asymconst
from core.asymconst import (
    cgf_asymptotic,
    crosscheck_lamzouri,
    expansion_constants,
    g_integral,
    scaled_slope,
    tail_asymptotic,
)
from core.errors import ConvergenceError, DomainError
from core.euler import ModelConfig, cgf


class TestConstants:
    @pytest.mark.parametrize('sigma', [0.6, 0.75, 0.9])
    def test_integration_by_parts(self, sigma):
        table = expansion_constants(sigma)
        assert table.g(0, 0) == pytest.approx(sigma * table.g(0, 1), abs=1e-8)
        assert table.g(1, 0) == pytest.approx(sigma * (table.g(1, 1) + table.g(0, 0)), abs=1e-8)

    @pytest.mark.parametrize('sigma', [0.6, 0.75, 0.9])
    def test_two_routes_to_a1(self, sigma):
        derived = expansion_constants(sigma).derived
        assert derived['A1_intercept'] == pytest.approx(derived['A1_intercept_via_a'], abs=1e-8)

    def test_positive_constants(self):
        derived = expansion_constants(0.75).derived
        assert derived['A'] > 0.0
        assert derived['B'] > 0.0
        assert derived['c0'] > 0.0
        assert derived['A'] == pytest.approx(0.25 * derived['B'], rel=1e-14)

    def test_sigma_one(self):
        table = expansion_constants(1.0)
        assert table.is_sigma_one
        assert table.g(0, 1) == pytest.approx(2.0 + table.g(0, 0), abs=1e-8)
        assert table.derived['A'] == pytest.approx(table.derived['A_via_a0'], abs=1e-8)
        assert table.derived['a1'] == pytest.approx(table.derived['a1_via_a'], abs=1e-8)

    def test_lamzouri_crosscheck(self):
        via_g, via_h, intermediate = crosscheck_lamzouri()
        assert via_g == pytest.approx(via_h, abs=1e-8)
        assert intermediate == pytest.approx(-math.log(2.0), abs=1e-8)

    def test_as_dict(self):
        data = expansion_constants(0.8).as_dict()
        assert data['sigma'] == 0.8
        assert set(data['g']) == {f"{n},{j}" for n in range(3) for j in range(3)}
        assert 'A' in data and 'B1_intercept' in data

    def test_domain(self):
        with pytest.raises(DomainError):
            expansion_constants(0.5)
        with pytest.raises(DomainError):
            g_integral(0.8, 3, 0)


class TestExpansions:
    def test_cgf_asymptotic_domain(self):
        with pytest.raises(DomainError):
            cgf_asymptotic(0.8, 2.0)
        with pytest.raises(DomainError):
            cgf_asymptotic(0.8, 10.0, terms=4)

    def test_cgf_asymptotic_is_increasing(self):
        assert 0.0 < cgf_asymptotic(0.8, 50.0, 0, terms=1) < cgf_asymptotic(0.8, 100.0, 0, terms=1)

    @pytest.mark.parametrize('sigma', [0.75, 1.0])
    def test_tail_asymptotic_decreases(self, sigma):
        values = [tail_asymptotic(sigma, tau, terms=1) for tau in (6.0, 10.0, 20.0)]
        assert values[0] > values[1] > values[2]
        assert all(v < 0.0 for v in values)

    def test_tail_asymptotic_domain(self):
        with pytest.raises(DomainError):
            tail_asymptotic(0.75, 2.0)


class TestAgainstTheModel:
    KAPPAS = (1e2, 1e3, 1e4)

    @pytest.mark.parametrize('sigma', [0.8, 1.0])
    def test_scaled_slope_moves_toward_g01(self, sigma):
        target = expansion_constants(sigma).g(0, 1)
        cfg = ModelConfig(sigma=sigma)
        gaps = [abs(scaled_slope(sigma, kappa, cgf(cfg, kappa, 1).values[1]) - target)
                for kappa in self.KAPPAS]
        assert gaps[0] > gaps[1] > gaps[2]

    @pytest.mark.parametrize('sigma', [0.8, 1.0])
    def test_expansion_gets_closer(self, sigma):
        cfg = ModelConfig(sigma=sigma)
        errors = []
        for kappa in (self.KAPPAS[0], self.KAPPAS[-1]):
            slope = cgf(cfg, kappa, 1).values[1]
            errors.append(abs(cgf_asymptotic(sigma, kappa, 1, terms=1) / slope - 1.0))
        assert errors[1] < errors[0]

    @pytest.mark.parametrize('kappa', [1e3, 1e4])
    def test_sigma_one_slope(self, kappa):
        slope = cgf(ModelConfig(sigma=1.0), kappa, 1).values[1]
        assert cgf_asymptotic(1.0, kappa, 1, terms=3) == pytest.approx(slope, rel=0.05)

    def test_scaled_slope_domain(self):
        with pytest.raises(DomainError):
            scaled_slope(0.8, 2.0, 1.0)


class TestQuadrature:
    def test_constants_raise_no_integration_warning(self):
        g_integral.cache_clear()
        expansion_constants.cache_clear()
        with warnings.catch_warnings():
            warnings.simplefilter('error', IntegrationWarning)
            for sigma in (0.6, 0.75, 0.9, 1.0):
                expansion_constants(sigma)
            crosscheck_lamzouri()

    def test_partition(self):
        assert asymconst._partition(0.0, 80.0) == [0.0, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0, 80.0]
        assert asymconst._partition(0.5, 1.0) == [0.5, 1.0]

    def test_poor_piece_is_an_error(self, monkeypatch):
        def struggling(func, a, b, **kwargs):
            warnings.warn("The maximum number of subdivisions (400) has been achieved.", IntegrationWarning)
            return 1.0, 1e-3

        monkeypatch.setattr(asymconst, 'quad', struggling)
        with pytest.raises(ConvergenceError):
            asymconst._integrate(math.cos, 0.0, 0.5, 'unit')

    def test_accurate_piece_is_logged(self, monkeypatch, caplog):
        def struggling(func, a, b, **kwargs):
            warnings.warn("The maximum number of subdivisions (400) has been achieved.", IntegrationWarning)
            return 1.0, 1e-12

        monkeypatch.setattr(asymconst, 'quad', struggling)
        with caplog.at_level('WARNING', logger='satotate_debug'):
            value, err = asymconst._integrate(math.cos, 0.0, 0.5, 'unit')
        assert (value, err) == (1.0, 1e-12)
        assert 'unit: quad on [0, 0.5]' in caplog.text
