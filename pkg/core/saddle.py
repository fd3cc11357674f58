# core/saddle.py
"""Saddle point kappa(sigma, tau) of f'_sigma(kappa) = tau, and its asymptotic initial guesses."""

import logging
import math
from dataclasses import dataclass

from core.asymconst import EULER_GAMMA, SIGMA_ONE, expansion_constants
from core.errors import BracketingError, ConvergenceError, DomainError
from core.euler import TAIL_RATIO, CgfReport, ModelConfig, cgf
from core.primes import MAX_SIEVE_LIMIT

debug_logger = logging.getLogger('satotate_debug')

MAX_ITERATIONS = 100
RESIDUAL_TOLERANCE = 1e-9
DEGENERATE_GAP = 1e-12
MIN_TAU_SIGMA_BELOW_ONE = 3.0
MIN_T_SIGMA_ONE = 2.0
BRACKET_COLLAPSE = 1e-6


@dataclass(frozen=True)
class SaddleSolution:
    kappa: float
    tau: float
    residual: float
    iterations: int
    guess_used: float
    guess_source: str
    config: ModelConfig
    report: CgfReport

    @property
    def cutoff(self):
        return self.config.prime_cutoff


def t_from_tau(tau):
    """The variable t of the sigma = 1 expansions: tau = 2 log t + 2 gamma."""
    return math.exp(tau / 2.0 - EULER_GAMMA)


def tau_from_t(t):
    return 2.0 * math.log(t) + 2.0 * EULER_GAMMA


def saddle_guess(sigma, tau, terms=2):
    """
    Asymptotic saddle point for large tau.

    sigma < 1: B(sigma)(tau log tau)^{sigma/(1-sigma)} (1 + B_1(log log tau)/log tau).
    sigma = 1: exp(t - g_{0,1}/2)(1 + b_1/t) with tau = 2 log t + 2 gamma.
    """
    if terms not in (1, 2):
        raise DomainError("the saddle expansion is available with 1 or 2 terms", terms=terms)
    if sigma == SIGMA_ONE:
        t = t_from_tau(tau)
        if t < MIN_T_SIGMA_ONE:
            raise DomainError(f"the sigma=1 guess needs t >= {MIN_T_SIGMA_ONE}", t=t)
        table = expansion_constants(SIGMA_ONE)
        guess = math.exp(t - 0.5 * table.g(0, 1))
        if terms == 2:
            guess *= 1.0 + table.derived['b1'] / t
    else:
        if tau < MIN_TAU_SIGMA_BELOW_ONE:
            raise DomainError(f"the sigma<1 guess needs tau >= {MIN_TAU_SIGMA_BELOW_ONE}", tau=tau)
        table = expansion_constants(sigma)
        log_t = math.log(tau)
        guess = table.derived['B'] * (tau * log_t) ** (sigma / (1.0 - sigma))
        if terms == 2:
            guess *= 1.0 + table.b1_sigma(math.log(log_t)) / log_t
    if not (guess > 0.0 and math.isfinite(guess)):
        raise DomainError("the asymptotic guess is not a positive number", guess=guess)
    return guess


def _max_reachable_kappa(cfg):
    cutoff = cfg.prime_cutoff or MAX_SIEVE_LIMIT
    return TAIL_RATIO * cutoff ** cfg.sigma


def _initial_guess(cfg, tau, slope_at_zero, drift, terms):
    direction = 1.0 if tau > drift else -1.0
    try:
        return direction * saddle_guess(cfg.sigma, abs(tau), terms), 'asymptotic'
    except DomainError:
        return (tau - drift) / slope_at_zero, 'gaussian'


def solve_saddle(cfg, tau, terms=2):
    """
    Solve f'(kappa) = tau by safeguarded Newton inside a maintained bracket.

    When cfg has no fixed cutoff, the cutoff is chosen once from the upper end
    of the bracket and kept for the whole iteration, so that f' is a single
    smooth increasing function during the solve. The returned solution carries
    that configuration.
    """
    tau = float(tau)
    zero = cgf(cfg, 0.0, 2)
    drift = zero.values[1]
    if abs(tau - drift) <= DEGENERATE_GAP:
        fixed = cfg if cfg.prime_cutoff else cfg.with_cutoff(zero.cutoff)
        return SaddleSolution(0.0, tau, abs(tau - drift), 0, 0.0, 'degenerate', fixed, zero)

    guess, source = _initial_guess(cfg, tau, zero.values[2], drift, terms)
    direction = 1.0 if tau > drift else -1.0
    limit = _max_reachable_kappa(cfg)

    def signed_gap(config, k):
        # increasing in k >= 0
        report = cgf(config, direction * k, 2)
        return direction * (report.values[1] - tau), report

    # bracket on the magnitude k = |kappa|; hi shrinks toward lo where f' cannot be evaluated
    magnitude = min(abs(guess), limit)
    lo, hi = 0.0, min(magnitude * 10.0, limit)
    inner = magnitude / 10.0
    try:
        if signed_gap(cfg, inner)[0] <= 0.0:
            lo = inner
    except ConvergenceError:
        pass
    while True:
        try:
            gap_hi = signed_gap(cfg, hi)[0]
        except ConvergenceError as exc:
            limit = hi
            hi = 0.5 * (lo + hi)
            debug_logger.warning(f"⚠️ saddle bracket: f' not available at kappa={direction * limit:.6g}, "
                                 f"retrying at {direction * hi:.6g}")
            if hi - lo <= BRACKET_COLLAPSE * limit:
                raise BracketingError(f"tau={tau:.6g} could not be bracketed below kappa={limit:.6g}",
                                      tau=tau, kappa=direction * limit) from exc
            continue
        if gap_hi >= 0.0:
            break
        if hi >= limit:
            raise BracketingError(f"tau={tau:.6g} lies beyond f' at the largest reachable kappa",
                                  tau=tau, kappa=direction * hi)
        lo = hi
        hi = min(hi * 10.0, limit)

    fixed = cfg if cfg.prime_cutoff else cfg.with_cutoff(cfg.resolve_cutoff(hi))
    gap_hi, _ = signed_gap(fixed, hi)
    if gap_hi < 0.0:
        raise BracketingError(f"tau={tau:.6g} is not bracketed at P={fixed.prime_cutoff}",
                              tau=tau, kappa=direction * hi)
    gap_lo, _ = signed_gap(fixed, lo)
    if gap_lo > 0.0:
        lo = 0.0

    k = min(max(magnitude, lo), hi)
    if not lo < k < hi:
        k = 0.5 * (lo + hi)
    tolerance = RESIDUAL_TOLERANCE * max(1.0, abs(tau))
    for iteration in range(1, MAX_ITERATIONS + 1):
        gap, report = signed_gap(fixed, k)
        debug_logger.debug(f"🧭 saddle it={iteration} kappa={direction * k:.15g} gap={gap:.3e} "
                           f"bracket=[{lo:.6g}, {hi:.6g}]")
        if abs(gap) <= 0.1 * tolerance:
            break
        if gap < 0.0:
            lo = k
        else:
            hi = k
        step = k - gap / report.values[2]
        k = step if lo < step < hi else 0.5 * (lo + hi)
        if hi - lo <= 1e-15 * max(1.0, hi):
            gap, report = signed_gap(fixed, k)
            break
    residual = abs(report.values[1] - tau)
    if residual > tolerance:
        raise BracketingError(f"saddle iteration stalled with residual {residual:.3e}",
                              tau=tau, kappa=direction * k)
    debug_logger.info(f"✅ saddle sigma={cfg.sigma} tau={tau:.10g}: kappa={direction * k:.12g} "
                      f"after {iteration} iterations ({source} guess {guess:.6g}, "
                      f"P={fixed.prime_cutoff})")
    return SaddleSolution(kappa=direction * k, tau=tau, residual=residual, iterations=iteration,
                          guess_used=guess, guess_source=source, config=fixed, report=report)
