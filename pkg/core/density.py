# core/density.py
"""
Densities and tails of log L(sigma, Theta).

The tilted density N(x; tau) of X - tau under the exponential tilt at the
saddle is recovered from its characteristic function
Ñ(v) = e^{-i tau v} F(kappa + iv)/F(kappa) by trapezoidal inversion on
[0, V]. All densities are taken with respect to |dx| = dx/sqrt(2 pi), and
everything that involves F(kappa) is kept in log scale.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.integrate import trapezoid

from core.asymconst import EULER_GAMMA, SIGMA_ONE, tail_asymptotic
from core.errors import DecayError, DomainError, MethodValidityError, NonPositiveDensityError
from core.euler import cgf, mgf_ratio_array
from core.saddle import solve_saddle

debug_logger = logging.getLogger('satotate_debug')

SQRT_2PI = math.sqrt(2.0 * math.pi)
DECAY_THRESHOLD = 1e-12
# exp(-DECAY_START^2 / 2) = 1e-12
DECAY_START = math.sqrt(2.0 * math.log(1e12))
MAX_TRUNCATION = 1e6
GRID_STD = 8.0
GIL_PELAEZ_KAPPA = 1e-3

UPPER = 'upper'
LOWER = 'lower'
DIRECTIONS = (UPPER, LOWER)
METHOD_SADDLE = 'saddle'
METHOD_INTEGRATE = 'integrate'
METHOD_ASYMPTOTIC = 'asymptotic'
METHODS = (METHOD_SADDLE, METHOD_INTEGRATE, METHOD_ASYMPTOTIC)


@dataclass(frozen=True, eq=False)
class CharacteristicGrid:
    """Ñ on the half-grid v_k = k h, k = 0..n, with trapezoid weights."""

    v: np.ndarray
    values: np.ndarray
    step: float

    @property
    def truncation(self):
        return float(self.v[-1])

    @property
    def weights(self):
        w = np.full(self.v.shape, self.step)
        w[0] = w[-1] = 0.5 * self.step
        return w


@dataclass(frozen=True, eq=False)
class DensityCurve:
    sigma: float
    tau: float
    kappa: float
    x: np.ndarray
    n_inversion: np.ndarray
    n_gaussian: np.ndarray
    log_m: np.ndarray
    truncation_v: float
    estimated_inversion_error: float
    mass: float
    mean: float
    variance: float
    f2: float
    decay_rate: float
    error_scale: float

    def rows(self):
        for values in zip(self.x, self.n_inversion, self.n_gaussian, self.log_m):
            yield tuple(float(v) for v in values)


@dataclass(frozen=True)
class TailEstimate:
    sigma: float
    tau: float
    direction: str
    kappa: float
    log_phi_saddle: Optional[float]
    log_phi_integrated: Optional[float]
    log_phi_asymptotic: Optional[float]
    asymptotic_terms: int
    error_scale: float

    def value(self, method):
        return {METHOD_SADDLE: self.log_phi_saddle, METHOD_INTEGRATE: self.log_phi_integrated,
                METHOD_ASYMPTOTIC: self.log_phi_asymptotic}[method]


# --- characteristic function -----------------------------------------------------------

def _tilted_cf(cfg, kappa, level, v):
    v = np.asarray(v, dtype=float)
    return mgf_ratio_array(cfg, kappa, v) * np.exp(-1j * level * v)


def characteristic_grid(cfg, kappa, level, variance, x_extent, max_step=None):
    """
    Ñ on an adaptive half-grid.

    V starts where a Gaussian of the given variance falls below 1e-12 and is
    doubled until |Ñ| < 1e-12 at V and 0.9 V; the spacing is at most
    pi/(8 max(x_extent, 8 sd)) and at most max_step.
    """
    sd = math.sqrt(variance)
    v_max = DECAY_START / sd
    while True:
        probe = np.abs(_tilted_cf(cfg, kappa, level, [0.9 * v_max, v_max]))
        if np.max(probe) < DECAY_THRESHOLD:
            break
        v_max *= 2.0
        if v_max > MAX_TRUNCATION:
            raise DecayError(f"|Ñ| still {np.max(probe):.2e} at V={v_max / 2:.3g}",
                             kappa=kappa, sigma=cfg.sigma)
    step = math.pi / (8.0 * max(x_extent, GRID_STD * sd))
    if max_step is not None:
        step = min(step, max_step)
    n = int(math.ceil(v_max / step))
    step = v_max / n
    v = step * np.arange(n + 1)
    values = _tilted_cf(cfg, kappa, level, v)
    debug_logger.debug(f"🌊 inversion grid kappa={kappa:.6g}: V={v_max:.4g}, h={step:.3e}, {n + 1} nodes")
    return CharacteristicGrid(v=v, values=values, step=step)


def _invert(grid, x):
    """N(x) = (2/sqrt(2 pi)) int_0^V Re(Ñ(v) e^{-ixv}) dv by the trapezoid rule."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    phase = np.exp(-1j * np.outer(x, grid.v))
    return (2.0 / SQRT_2PI) * np.real(phase @ (grid.weights * grid.values))


def _decay_rate(grid, kappa):
    """Smallest c with |Ñ(v)| <= exp(-c v^2) on 0 < v <= max(|kappa|/2, first node)."""
    reach = max(abs(kappa) / 2.0, grid.v[1])
    mask = (grid.v > 0.0) & (grid.v <= reach)
    modulus = np.abs(grid.values[mask])
    keep = modulus > 0.0
    if not keep.any():
        return math.inf
    return float(np.min(-np.log(modulus[keep]) / grid.v[mask][keep] ** 2))


# --- tilted density ----------------------------------------------------------------------

def _error_scale(sigma, kappa):
    k = max(abs(kappa), math.e)
    return k ** (-1.0 / (2.0 * sigma)) * math.sqrt(math.log(k))


def _curve_from_solution(solution, x_grid=None):
    cfg = solution.config
    kappa = solution.kappa
    report = cgf(cfg, kappa, 2)
    f0, level, f2 = report.values
    sd = math.sqrt(f2)
    if x_grid is None:
        x_grid = np.linspace(-GRID_STD * sd, GRID_STD * sd, 161)
    x_grid = np.asarray(x_grid, dtype=float)
    extent = max(float(np.max(np.abs(x_grid))), 10.0 * sd)
    grid = characteristic_grid(cfg, kappa, level, f2, extent)

    n_inv = _invert(grid, x_grid)
    n_gauss = np.exp(-x_grid ** 2 / (2.0 * f2)) / sd
    with np.errstate(divide='ignore', invalid='ignore'):
        log_m = np.where(n_inv > 0.0, f0 - kappa * (level + x_grid) + np.log(n_inv), np.nan)

    # moments on a wide internal grid
    wide = np.linspace(-10.0 * sd, 10.0 * sd, 801)
    n_wide = _invert(grid, wide)
    dx = wide[1] - wide[0]
    mass = float(trapezoid(n_wide, dx=dx)) / SQRT_2PI
    mean = float(trapezoid(wide * n_wide, dx=dx)) / SQRT_2PI
    variance = float(trapezoid(wide ** 2 * n_wide, dx=dx)) / SQRT_2PI

    tail_error = (2.0 / SQRT_2PI) * float(np.max(np.abs(grid.values[-2:]))) * grid.truncation
    curve = DensityCurve(
        sigma=cfg.sigma, tau=level, kappa=kappa, x=x_grid, n_inversion=n_inv, n_gaussian=n_gauss,
        log_m=log_m, truncation_v=grid.truncation, estimated_inversion_error=tail_error,
        mass=mass, mean=mean, variance=variance, f2=f2, decay_rate=_decay_rate(grid, kappa),
        error_scale=_error_scale(cfg.sigma, kappa))
    debug_logger.info(f"📊 tilted density sigma={cfg.sigma} tau={level:.10g} kappa={kappa:.8g}: "
                      f"mass={mass:.10f} mean={mean:.2e} var/f''={variance / f2:.8f}")
    return curve


def tilted_density(cfg, tau, x_grid=None):
    """
    N(x; tau) on x_grid (default: +-8 standard deviations, 161 points).

    tau is replaced by f'(kappa) at the numerical saddle, so that the
    inverted density has mean zero exactly at that level.
    """
    return _curve_from_solution(solve_saddle(cfg, tau), x_grid)


def m_function(cfg, tau, x):
    """log M_sigma(tau + x) = f(kappa) - kappa (tau + x) + log N(x; tau)."""
    curve = tilted_density(cfg, tau, np.array([float(x)]))
    value = float(curve.n_inversion[0])
    if not value > 0.0:
        raise NonPositiveDensityError(f"N({x:.6g}; {tau:.6g}) = {value:.3e}", tau=tau, x=x)
    return float(curve.log_m[0])


def gaussian_approx(cfg, tau, x):
    """
    Main term of the local Gaussian approximation to M_sigma(tau + x), in log scale.

    Returns:
        tuple: (log of F(kappa) e^{-kappa(tau+x)} exp(-x^2/2f'') / sqrt(f''),
                error scale kappa^{-1/(2 sigma)} sqrt(log kappa))
    """
    solution = solve_saddle(cfg, tau)
    f0, level, f2 = cgf(solution.config, solution.kappa, 2).values
    x = float(x)
    log_main = f0 - solution.kappa * (level + x) - 0.5 * math.log(f2) - x * x / (2.0 * f2)
    return log_main, _error_scale(cfg.sigma, solution.kappa)


def stitched_log_m(cfg, y_grid):
    """log M_sigma(y) on y_grid, each point from its own saddle at tau = y."""
    out = []
    for y in np.asarray(y_grid, dtype=float):
        solution = solve_saddle(cfg, y)
        curve = _curve_from_solution(solution, np.array([y - solution.report.values[1]]))
        out.append(float(curve.log_m[0]))
    return np.array(out)


# --- untilted distribution -----------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ModelDistribution:
    y: np.ndarray
    density: np.ndarray
    cdf: np.ndarray
    mean: float
    variance: float


def model_distribution(cfg, y_grid):
    """
    Density (w.r.t. dx) and CDF of log L(sigma, Theta) on y_grid.

    The density comes from direct Fourier inversion, the CDF from the
    Gil-Pelaez formula discretized at midpoints v_k = (k - 1/2) h.
    """
    y = np.asarray(y_grid, dtype=float)
    report = cgf(cfg, 0.0, 2)
    mean, variance = report.values[1], report.values[2]
    sd = math.sqrt(variance)
    extent = float(np.max(np.abs(y - mean))) + GRID_STD * sd
    grid = characteristic_grid(cfg, 0.0, 0.0, variance, extent)
    phase = np.exp(-1j * np.outer(y, grid.v))
    pdf = np.real(phase @ (grid.weights * grid.values)) / math.pi

    step = math.pi / (2.0 * extent)
    count = int(math.ceil(grid.truncation / step))
    mids = (np.arange(1, count + 1) - 0.5) * step
    phi = mgf_ratio_array(cfg, 0.0, mids)
    terms = np.imag(np.exp(-1j * np.outer(y, mids)) * phi[None, :]) / mids[None, :]
    cdf = 0.5 - step * np.sum(terms, axis=1) / math.pi
    return ModelDistribution(y=y, density=pdf, cdf=np.clip(cdf, 0.0, 1.0), mean=mean, variance=variance)


# --- tails --------------------------------------------------------------------------------------

def _integrated_tail(solution, direction):
    """log Phi (or log Psi) as F(kappa) e^{-kappa y} times the inverted tilted tail integral."""
    cfg = solution.config
    kappa = solution.kappa
    f0, level, f2 = cgf(cfg, kappa, 2).values
    if abs(kappa) < GIL_PELAEZ_KAPPA:
        # untilted: P(X > y) = 1/2 + (1/pi) int Im(Ñ_0(v))/v dv
        base = cgf(cfg, 0.0, 2).values
        grid = characteristic_grid(cfg, 0.0, solution.tau, base[2], GRID_STD * math.sqrt(base[2]))
        ratio = np.empty_like(grid.v)
        ratio[1:] = np.imag(grid.values[1:]) / grid.v[1:]
        ratio[0] = base[1] - solution.tau
        upper = 0.5 + float(np.sum(grid.weights * ratio)) / math.pi
        probability = upper if direction == UPPER else 1.0 - upper
        if not probability > 0.0:
            raise NonPositiveDensityError("Gil-Pelaez tail is not positive", value=probability)
        return math.log(probability)

    grid = characteristic_grid(cfg, kappa, level, f2, GRID_STD * math.sqrt(f2), max_step=abs(kappa) / 4.0)
    if kappa > 0:
        kernel = 1.0 / (kappa + 1j * grid.v)
    else:
        kernel = 1.0 / (-kappa - 1j * grid.v)
    integral = float(np.sum(grid.weights * np.real(grid.values * kernel))) / math.pi
    if not integral > 0.0:
        raise NonPositiveDensityError("tilted tail integral is not positive", value=integral)
    log_natural = f0 - kappa * level + math.log(integral)
    natural = UPPER if kappa > 0 else LOWER
    if direction == natural:
        return log_natural
    # complementary event: the tilt points the other way
    if not log_natural < 0.0:
        raise NonPositiveDensityError("complementary tail is not positive", value=log_natural)
    return math.log(-math.expm1(log_natural))


def _saddle_tail(solution, direction):
    f0, level, f2 = solution.report.values
    kappa = solution.kappa
    if kappa == 0.0:
        raise MethodValidityError("the closed-form tail needs kappa != 0")
    if (kappa > 0) != (direction == UPPER):
        raise MethodValidityError("the closed-form tail needs the tilt to point into the tail")
    return f0 - kappa * level - math.log(abs(kappa) * math.sqrt(2.0 * math.pi * f2))


def _asymptotic_tail(sigma, tau, terms):
    if sigma == SIGMA_ONE:
        t = math.exp(abs(tau) / 2.0 - EULER_GAMMA)
        if t < 2.0:
            raise MethodValidityError(f"sigma=1 expansion needs t >= 2 (t={t:.3g})", tau=tau)
    elif abs(tau) < 3.0:
        raise MethodValidityError("sigma<1 expansion needs tau >= 3", tau=tau)
    try:
        return tail_asymptotic(sigma, abs(tau), terms)
    except DomainError as exc:
        raise MethodValidityError(str(exc), tau=tau)


def tail(cfg, tau, method='all', direction=UPPER, terms=2):
    """
    log Phi(sigma, tau) = log P(log L > tau), or log Psi = log P(log L < -tau)
    for direction 'lower', by the requested method or by all of them.

    With method='all' a method that is invalid at this tau is reported as None.
    """
    if direction not in DIRECTIONS:
        raise DomainError(f"unknown direction {direction!r}")
    if method != 'all' and method not in METHODS:
        raise DomainError(f"unknown tail method {method!r}")
    level = tau if direction == UPPER else -tau
    solution = solve_saddle(cfg, level)
    wanted = METHODS if method == 'all' else (method,)
    results = {}
    for name in wanted:
        try:
            if name == METHOD_SADDLE:
                results[name] = _saddle_tail(solution, direction)
            elif name == METHOD_INTEGRATE:
                results[name] = _integrated_tail(solution, direction)
            else:
                results[name] = _asymptotic_tail(cfg.sigma, tau, terms)
        except MethodValidityError:
            if method != 'all':
                raise
            results[name] = None
    estimate = TailEstimate(
        sigma=cfg.sigma, tau=tau, direction=direction, kappa=solution.kappa,
        log_phi_saddle=results.get(METHOD_SADDLE), log_phi_integrated=results.get(METHOD_INTEGRATE),
        log_phi_asymptotic=results.get(METHOD_ASYMPTOTIC), asymptotic_terms=terms,
        error_scale=_error_scale(cfg.sigma, solution.kappa))
    debug_logger.info(f"📉 tail {direction} sigma={cfg.sigma} tau={tau}: {results}")
    return estimate
