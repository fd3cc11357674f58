import math

import numpy as np
import pytest

import core.saddle as saddle_module
from core.errors import BracketingError, ConvergenceError, DomainError
from core.euler import ModelConfig, cgf
from core.saddle import saddle_guess, solve_saddle, t_from_tau, tau_from_t


class TestConversions:
    def test_t_and_tau_are_inverse(self):
        assert t_from_tau(tau_from_t(4.0)) == pytest.approx(4.0, rel=1e-15)
        assert tau_from_t(1.0) == pytest.approx(2.0 * 0.57721566490153286, rel=1e-15)


class TestGuess:
    def test_domain(self):
        with pytest.raises(DomainError):
            saddle_guess(0.8, 2.0)
        with pytest.raises(DomainError):
            saddle_guess(1.0, tau_from_t(1.5))
        with pytest.raises(DomainError):
            saddle_guess(0.8, 10.0, terms=3)

    def test_positive_and_increasing(self):
        assert 0.0 < saddle_guess(0.75, 10.0, terms=1) < saddle_guess(0.75, 30.0, terms=1)
        assert 0.0 < saddle_guess(1.0, tau_from_t(3.0), terms=1) < saddle_guess(1.0, tau_from_t(5.0), terms=1)

    def test_one_term_at_sigma_one(self):
        # leading term exp(t - g_{0,1}/2) grows like e^t
        ratio = saddle_guess(1.0, tau_from_t(5.0), terms=1) / saddle_guess(1.0, tau_from_t(4.0), terms=1)
        assert ratio == pytest.approx(math.e, rel=1e-12)


class TestSolve:
    @pytest.mark.parametrize('kappa0', [0.5, 5.0, 30.0])
    def test_round_trip(self, small_cfg, kappa0):
        level = cgf(small_cfg, kappa0, 1).values[1]
        solution = solve_saddle(small_cfg, level)
        assert solution.kappa == pytest.approx(kappa0, rel=1e-7)
        assert solution.residual <= 1e-9 * max(1.0, level)
        assert solution.report.values[1] == pytest.approx(level, abs=1e-8)
        assert solution.cutoff == 1000

    def test_negative_level(self, small_cfg):
        level = cgf(small_cfg, -2.0, 1).values[1]
        assert solve_saddle(small_cfg, level).kappa == pytest.approx(-2.0, rel=1e-7)

    def test_degenerate(self, small_cfg):
        drift = cgf(small_cfg, 0.0, 1).values[1]
        solution = solve_saddle(small_cfg, drift)
        assert solution.kappa == 0.0
        assert solution.guess_source == 'degenerate'
        assert solution.iterations == 0

    def test_guess_sources(self, small_cfg):
        assert solve_saddle(small_cfg, 1.0).guess_source == 'gaussian'
        assert solve_saddle(small_cfg, 3.0, terms=1).guess_source == 'asymptotic'

    def test_unreachable_level(self, small_cfg):
        # f' stays far below 100 for kappa <= 1000^0.8 / 4
        with pytest.raises(BracketingError):
            solve_saddle(small_cfg, 100.0)

    def test_automatic_cutoff_is_frozen(self):
        solution = solve_saddle(ModelConfig(sigma=0.8), 2.0)
        assert solution.config.prime_cutoff is not None
        assert solution.config.prime_cutoff >= 10 ** 4

    @pytest.mark.slow
    @pytest.mark.parametrize('t', [3.0, 4.0])
    def test_sigma_one_guess_is_close(self, t):
        solution = solve_saddle(ModelConfig(sigma=1.0), tau_from_t(t))
        assert 1.0 / 3.0 <= saddle_guess(1.0, solution.tau) / solution.kappa <= 3.0


class TestWideRange:
    def test_sigma_one_at_tau_five(self):
        solution = solve_saddle(ModelConfig(sigma=1.0), 5.0)
        assert solution.kappa > 1e3
        assert solution.residual <= 5e-9
        assert solution.report.values[1] == pytest.approx(5.0, abs=5e-9)

    def test_inverse_is_monotone(self, small_cfg):
        kappas = [solve_saddle(small_cfg, tau).kappa for tau in np.linspace(-2.0, 4.0, 10)]
        assert all(a < b for a, b in zip(kappas, kappas[1:]))

    def test_bracket_shrinks_below_failures(self, monkeypatch, small_cfg):
        level = cgf(small_cfg, 5.0, 1).values[1]

        def flaky(cfg, kappa, j_max=2):
            if abs(kappa) > 20.0:
                raise ConvergenceError("per-prime quadrature did not converge", kappa=kappa)
            return cgf(cfg, kappa, j_max)

        monkeypatch.setattr(saddle_module, 'cgf', flaky)
        assert solve_saddle(small_cfg, level).kappa == pytest.approx(5.0, rel=1e-7)

    def test_bracket_collapse_is_reported(self, monkeypatch, small_cfg):
        level = cgf(small_cfg, 5.0, 1).values[1]

        def flaky(cfg, kappa, j_max=2):
            if abs(kappa) > 1.0:
                raise ConvergenceError("per-prime quadrature did not converge", kappa=kappa)
            return cgf(cfg, kappa, j_max)

        monkeypatch.setattr(saddle_module, 'cgf', flaky)
        with pytest.raises(BracketingError):
            solve_saddle(small_cfg, level)
