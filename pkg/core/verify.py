# core/verify.py
"""
In-process acceptance suite behind `satotate-cli verify`.

Checks that quote levels beyond the reachable kappa range run at the levels
recorded in DESIGN.md; the properties they assert are unchanged.
"""

import logging
import math
import time
from dataclasses import dataclass

import numpy as np
from rich.table import Table
from scipy.optimize import brentq
from scipy.special import ive

from core.asymconst import crosscheck_lamzouri, expansion_constants, scaled_slope
from core.density import METHOD_INTEGRATE, model_distribution, tail, tilted_density
from core.euler import TAIL_NONE, TAIL_RATIO, ModelConfig, cgf, mgf_ratio_array
from core.measures import AngleMeasure, density, expect, sato_tate_density
from core.montecarlo import (
    empirical_cf,
    empirical_tail,
    esseen_bound,
    ks_distance,
    sample_log_l,
    tilted_tail,
)
from core.saddle import saddle_guess, solve_saddle, tau_from_t

debug_logger = logging.getLogger('satotate_debug')

VERIFY_SEED = 20240229
RARE_PROBABILITY = 1e-6
MODERATE_PROBABILITY = 1e-2
TREND_LEVELS = (3.0, 4.5, 6.0)
# (0.8, 20) and (1, 20) need kappa beyond the largest sieve
DENSITY_LEVELS = ((0.6, 5.0), (0.6, 20.0), (0.8, 5.0), (1.0, 5.0))
EXPANSION_SIGMAS = (0.75, 0.8, 1.0)
EXPANSION_KAPPAS = (1e2, 1e3, 1e4)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float
    slow: bool = False


# --- cheap checks ----------------------------------------------------------------

def check_bessel_identity():
    worst = 0.0
    for u in (0.1, 1.0, 5.0, 20.0):
        value = expect(AngleMeasure.sato_tate(), lambda t, u=u: np.exp(2.0 * u * (np.cos(t) - 1.0)))
        exact = ive(1, 2.0 * u) / u
        worst = max(worst, abs(value / exact - 1.0))
    return worst <= 1e-10, f"max relative error {worst:.2e}"


def check_measure_moments():
    worst = 0.0
    for p in (2, 5, 13, 101):
        m = AngleMeasure.plancherel(p)
        first = expect(m, np.cos)
        second = expect(m, lambda t: np.cos(t) ** 2)
        worst = max(worst, abs(first), abs(second - 0.25 * (1.0 + 1.0 / p)))
    return worst <= 1e-12, f"max deviation {worst:.2e}"


def check_plancherel_rate():
    theta = np.linspace(0.0, math.pi, 2001)[1:-1]
    scaled = []
    for p in (11, 101, 1009, 10007):
        ratio = density(AngleMeasure.plancherel(p), theta) / sato_tate_density(theta)
        scaled.append(p * float(np.max(np.abs(ratio - 1.0))))
    return max(scaled) <= 5.0, "p*max|ratio-1| = " + ", ".join(f"{s:.3f}" for s in scaled)


def check_cgf_consistency():
    cfg = ModelConfig(sigma=1.0, prime_cutoff=10007)
    notes = []
    ok = True
    for kappa in (1.0, 10.0):
        h = 1e-3 * kappa
        below, centre, above = (cgf(cfg, kappa + d, 2).values for d in (-h, 0.0, h))
        d1 = (above[0] - below[0]) / (2.0 * h)
        d2 = (above[1] - below[1]) / (2.0 * h)
        rel1 = abs(d1 / centre[1] - 1.0)
        rel2 = abs(d2 / centre[2] - 1.0)
        ok &= rel1 <= 1e-6 and rel2 <= 1e-6
        notes.append(f"k={kappa:g}: {rel1:.1e}/{rel2:.1e}")
    for kappa in (0.0, 1.0, 10.0, 100.0):
        curvature = cgf(cfg, kappa, 2).values[2]
        ok &= curvature > 0.0
    return ok, "; ".join(notes) + "; f''>0"


def check_saddle_round_trip():
    cfg = ModelConfig(sigma=0.8, prime_cutoff=10007)
    worst = 0.0
    for kappa0 in (0.5, 5.0, 50.0):
        level = cgf(cfg, kappa0, 1).values[1]
        solution = solve_saddle(cfg, level)
        back = cgf(cfg, solution.kappa, 1).values[1]
        worst = max(worst, abs(back - level) / max(1.0, level))
    ratios = []
    for t in (3.0, 4.0, 6.0):
        solution = solve_saddle(ModelConfig(sigma=1.0), tau_from_t(t))
        ratios.append(saddle_guess(1.0, solution.tau) / solution.kappa)
    guess_75 = saddle_guess(0.75, 30.0)
    ok = worst <= 1e-9 and all(1.0 / 3.0 <= r <= 3.0 for r in ratios) and math.isfinite(guess_75) and guess_75 > 0
    return ok, f"round trip {worst:.1e}; guess/kappa at sigma=1: " + ", ".join(f"{r:.3f}" for r in ratios)


def check_density_moments():
    worst_mass = worst_mean = 0.0
    for sigma, tau in DENSITY_LEVELS:
        curve = tilted_density(ModelConfig(sigma=sigma), tau)
        worst_mass = max(worst_mass, abs(curve.mass - 1.0))
        worst_mean = max(worst_mean, abs(curve.mean))
    return worst_mass <= 1e-6 and worst_mean <= 1e-6, f"mass {worst_mass:.1e}, mean {worst_mean:.1e}"


def check_gaussian_trend():
    cfg = ModelConfig(sigma=0.8)
    gaps = []
    last = None
    for tau in TREND_LEVELS:
        curve = tilted_density(cfg, tau, np.array([0.0]))
        gaps.append(abs(float(curve.n_inversion[0]) * math.sqrt(curve.f2) - 1.0))
        last = curve
    kappa = last.kappa
    bound = 10.0 * kappa ** (-1.0 / (2.0 * cfg.sigma)) * math.sqrt(math.log(kappa))
    ok = all(a > b for a, b in zip(gaps, gaps[1:])) and gaps[-1] <= bound
    return ok, "gaps " + ", ".join(f"{g:.3e}" for g in gaps) + f"; bound {bound:.3e}"


def check_saddle_vs_integrated():
    cfg = ModelConfig(sigma=0.8)
    gaps = []
    for tau in TREND_LEVELS[1:]:
        estimate = tail(cfg, tau, 'all')
        gaps.append(abs(estimate.log_phi_saddle - estimate.log_phi_integrated))
    return gaps[0] <= 0.5 and gaps[1] < gaps[0], "gaps " + ", ".join(f"{g:.3e}" for g in gaps)


def check_cgf_expansion_trend():
    """f' log kappa / kappa^{1/sigma-1} (singular part removed at sigma = 1) moves toward g_{0,1}."""
    ok = True
    notes = []
    for sigma in EXPANSION_SIGMAS:
        target = expansion_constants(sigma).g(0, 1)
        cfg = ModelConfig(sigma=sigma)
        gaps = [abs(scaled_slope(sigma, kappa, cgf(cfg, kappa, 1).values[1]) - target)
                for kappa in EXPANSION_KAPPAS]
        ok &= all(a > b for a, b in zip(gaps, gaps[1:]))
        notes.append(f"sigma={sigma:g}: " + "/".join(f"{g:.3f}" for g in gaps))
    return ok, "; ".join(notes)


def check_constant_identities():
    worst = 0.0
    for sigma in (0.6, 0.75, 0.9):
        table = expansion_constants(sigma)
        worst = max(worst,
                    abs(table.g(0, 0) - sigma * table.g(0, 1)),
                    abs(table.g(1, 0) - sigma * (table.g(1, 1) + table.g(0, 0))),
                    abs(table.derived['A1_intercept'] - table.derived['A1_intercept_via_a']))
    one = expansion_constants(1.0)
    via_g, via_h, intermediate = crosscheck_lamzouri()
    worst = max(worst,
                abs(one.g(0, 1) - 2.0 - one.g(0, 0)),
                abs(via_g - via_h),
                abs(intermediate + math.log(2.0)),
                abs(one.derived['a1'] - one.derived['a1_via_a']))
    return worst <= 1e-8, f"max identity gap {worst:.2e}"


# --- Monte Carlo checks -------------------------------------------------------------

def check_moment_identity():
    cfg = ModelConfig(sigma=1.0, prime_cutoff=100, tail_mode=TAIL_NONE)
    draws = sample_log_l(cfg, VERIFY_SEED, 10 ** 6)
    worst = 0.0
    for kappa in (0.5, 1.0, 2.0):
        weights = np.exp(kappa * draws.values)
        stderr = float(np.std(weights, ddof=1)) / math.sqrt(draws.n)
        exact = math.exp(cgf(cfg, kappa, 0).values[0])
        worst = max(worst, abs(float(np.mean(weights)) - exact) / stderr)
    return worst <= 3.0, f"max |E[L^k] - F(k)|/stderr = {worst:.2f}"


def level_for_probability(cfg, probability):
    """
    The level tau = f'(kappa) at which the closed-form saddle tail equals
    the target probability, found by root search in kappa.
    """
    target = math.log(probability)

    def gap(kappa):
        f0, f1, f2 = cgf(cfg, kappa, 2).values
        return f0 - kappa * f1 - math.log(kappa * math.sqrt(2.0 * math.pi * f2)) - target

    top = 0.9 * TAIL_RATIO * cfg.prime_cutoff ** cfg.sigma
    kappa = brentq(gap, 0.05, top, xtol=1e-8)
    return cgf(cfg, kappa, 1).values[1]


def check_rare_tail():
    cfg = ModelConfig(sigma=0.8, prime_cutoff=1000, tail_mode=TAIL_NONE)
    rare = level_for_probability(cfg, RARE_PROBABILITY)
    tilted = tilted_tail(cfg, rare, VERIFY_SEED, 10 ** 5)
    exact_rare = math.exp(tail(cfg, rare, METHOD_INTEGRATE).log_phi_integrated)
    z_rare = abs(tilted.estimate - exact_rare) / tilted.stderr

    moderate = level_for_probability(cfg, MODERATE_PROBABILITY)
    p_hat, stderr = empirical_tail(sample_log_l(cfg, VERIFY_SEED + 1, 10 ** 5), moderate)
    exact_moderate = math.exp(tail(cfg, moderate, METHOD_INTEGRATE).log_phi_integrated)
    z_moderate = abs(p_hat - exact_moderate) / stderr
    ok = z_rare <= 3.0 and z_moderate <= 3.0
    return ok, (f"tau={rare:.4f}: {tilted.estimate:.3e} vs {exact_rare:.3e} ({z_rare:.2f} se); "
                f"tau={moderate:.4f}: {p_hat:.4f} vs {exact_moderate:.4f} ({z_moderate:.2f} se)")


def check_esseen():
    cfg = ModelConfig(sigma=1.0, prime_cutoff=1000, tail_mode=TAIL_NONE)
    draws = sample_log_l(cfg, VERIFY_SEED + 2, 10 ** 5)
    sd = math.sqrt(draws.variance)
    y = np.linspace(draws.mean - 10.0 * sd, draws.mean + 10.0 * sd, 2001)
    model = model_distribution(cfg, y)
    observed = ks_distance(draws.values, lambda x: np.interp(x, model.y, model.cdf))
    K = float(np.max(model.density))
    bound = esseen_bound(empirical_cf(draws.values), lambda v: mgf_ratio_array(cfg, 0.0, v), K, 20.0)
    # model and draws share the cutoff, so no truncation allowance
    ks_limit = 3.0 * 1.36 / math.sqrt(draws.n)
    ok = observed <= bound and observed <= ks_limit
    return ok, f"sup|F_n - F| = {observed:.4f}, Esseen bound {bound:.4f}, KS limit {ks_limit:.4f}"


CHECKS = (
    ('Bessel / Sato-Tate identity', check_bessel_identity, False),
    ('Plancherel moments', check_measure_moments, False),
    ('Plancherel -> Sato-Tate rate', check_plancherel_rate, False),
    ('CGF finite differences and convexity', check_cgf_consistency, False),
    ('Saddle round trip and guesses', check_saddle_round_trip, False),
    ('Tilted density mass and mean', check_density_moments, False),
    ('Gaussian approximation trend', check_gaussian_trend, False),
    ('Closed-form vs integrated tail', check_saddle_vs_integrated, False),
    ('Expansion constant identities', check_constant_identities, False),
    ('CGF expansion trend', check_cgf_expansion_trend, False),
    ('E[L^k] = F(k) by Monte Carlo', check_moment_identity, True),
    ('Rare tail by tilted sampling', check_rare_tail, True),
    ('Esseen and KS diagnostics', check_esseen, True),
)


def run_checks(quick=False):
    """Run every check (quick=True skips the Monte Carlo ones); a raising check fails."""
    results = []
    for name, check, slow in CHECKS:
        if quick and slow:
            continue
        started = time.perf_counter()
        try:
            passed, detail = check()
        except Exception as exc:
            debug_logger.error(f"❌ verify '{name}' raised {type(exc).__name__}: {exc}")
            passed, detail = False, f"{type(exc).__name__}: {exc}"
        elapsed = time.perf_counter() - started
        icon = "✅" if passed else "❌"
        debug_logger.info(f"{icon} verify '{name}' ({elapsed:.1f}s): {detail}")
        results.append(CheckResult(name=name, passed=bool(passed), detail=detail, seconds=elapsed, slow=slow))
    return results


def render_table(results, lang='en'):
    title = "Verifica di accettazione" if lang == 'it' else "Acceptance checks"
    table = Table(title=title)
    table.add_column("Check", style="cyan")
    table.add_column("Status")
    table.add_column("Time", justify="right")
    table.add_column("Detail", style="dim")
    for result in results:
        status = "[bold green]PASS[/bold green]" if result.passed else "[bold red]FAIL[/bold red]"
        table.add_row(result.name, status, f"{result.seconds:.1f}s", result.detail)
    return table
