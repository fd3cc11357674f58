# core/measures.py
"""
Angle measures on [0, pi]: the Sato-Tate measure, the p-adic Plancherel
measures and their exponential tilts by exp(2 kappa lambda_{p,sigma}).

Expectations use Gauss-Legendre rules with order doubling. Sampling draws from
numpy Generators seeded by (seed, stream) so that parallel workers reproduce.
"""

import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.interpolate import PchipInterpolator

from core.errors import ConvergenceError, DomainError
from core.primes import is_prime

debug_logger = logging.getLogger('satotate_debug')

SATO_TATE = 'sato_tate'
PLANCHEREL = 'plancherel'

DEFAULT_ORDER = 64
MAX_DOUBLINGS = 6
RELATIVE_TOLERANCE = 1e-11
TABLE_SEGMENTS = 512
_SEGMENT_ORDER = 16
TABLE_POINTS = 512
REJECTION_BATCH = 1 << 16


@dataclass(frozen=True)
class AngleMeasure:
    kind: str = SATO_TATE
    p: Optional[int] = None
    sigma: Optional[float] = None
    kappa: Optional[float] = None

    def __post_init__(self):
        if self.kind not in (SATO_TATE, PLANCHEREL):
            raise DomainError(f"unknown measure kind {self.kind!r}")
        if self.kind == PLANCHEREL and (self.p is None or not is_prime(self.p)):
            raise DomainError("the Plancherel measure needs a prime p", p=self.p)
        if (self.sigma is None) != (self.kappa is None):
            raise DomainError("a tilt needs both sigma and kappa")
        if self.sigma is not None:
            if self.kind != PLANCHEREL:
                raise DomainError("only Plancherel measures can be tilted")
            if not (0.5 < self.sigma <= 1.0):
                raise DomainError("tilt sigma must lie in (1/2, 1]", sigma=self.sigma)
            if not math.isfinite(self.kappa):
                raise DomainError("tilt kappa must be finite", kappa=self.kappa)

    @classmethod
    def sato_tate(cls):
        return cls(SATO_TATE)

    @classmethod
    def plancherel(cls, p):
        return cls(PLANCHEREL, int(p))

    def tilted(self, sigma, kappa):
        return AngleMeasure(PLANCHEREL, self.p, float(sigma), float(kappa))

    @property
    def is_tilted(self):
        return self.kappa is not None and self.kappa != 0.0

    @property
    def label(self):
        if self.kind == SATO_TATE:
            return 'mu_inf'
        if self.is_tilted:
            return f"mu_{self.p}[sigma={self.sigma:g}, kappa={self.kappa:g}]"
        return f"mu_{self.p}"


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    nodes: np.ndarray
    weights: np.ndarray
    order: int
    a: float = 0.0
    b: float = math.pi


@lru_cache(maxsize=64)
def _legendre_nodes(order):
    return leggauss(order)


def gauss_legendre_rule(order=DEFAULT_ORDER, a=0.0, b=math.pi):
    """Gauss-Legendre rule of the given order mapped to [a, b]."""
    if order < 2:
        raise DomainError("quadrature order must be at least 2", order=order)
    x, w = _legendre_nodes(int(order))
    half = 0.5 * (b - a)
    return QuadratureRule(nodes=a + half * (x + 1.0), weights=half * w, order=int(order), a=a, b=b)


# --- densities ---------------------------------------------------------------

def sato_tate_density(theta):
    return (2.0 / math.pi) * np.sin(theta) ** 2


def plancherel_factor(p, theta):
    """(1+1/p)(1 - 2cos(2 theta)/p + 1/p^2)^{-1}, the ratio d mu_p / d mu_inf."""
    q = 1.0 / p
    return (1.0 + q) / (1.0 - 2.0 * np.cos(2.0 * theta) * q + q * q)


@lru_cache(maxsize=4096)
def _tilt_log_norm(p, sigma, kappa):
    from core.euler import local_mgf

    return local_mgf(p, sigma, kappa).log_modulus


def _tilt_log_weight(m, theta):
    """2 kappa lambda(theta) - log F_{sigma,p}(kappa)."""
    from core.euler import lambda_theta

    return 2.0 * m.kappa * lambda_theta(m.p, m.sigma, theta) - _tilt_log_norm(m.p, m.sigma, m.kappa)


def density(m, theta):
    """Density of m with respect to d theta; vectorized over theta."""
    theta = np.asarray(theta, dtype=float)
    if np.any((theta < 0.0) | (theta > math.pi)):
        raise DomainError("angles must lie in [0, pi]")
    base = sato_tate_density(theta)
    if m.kind == SATO_TATE:
        return base
    base = base * plancherel_factor(m.p, theta)
    if not m.is_tilted:
        return base
    return base * np.exp(_tilt_log_weight(m, theta))


def _peak_relative_density(m, theta):
    """Tilted density up to a constant, with the maximal tilt factor scaled to 1."""
    from core.euler import lambda_theta

    base = sato_tate_density(theta) * plancherel_factor(m.p, theta)
    if not m.is_tilted:
        return base
    peak = 0.0 if m.kappa > 0 else math.pi
    shift = lambda_theta(m.p, m.sigma, peak)
    return base * np.exp(2.0 * m.kappa * (lambda_theta(m.p, m.sigma, theta) - shift))


# --- quadrature ----------------------------------------------------------------

def _integrate(func, a, b, order=DEFAULT_ORDER, rtol=RELATIVE_TOLERANCE, max_doublings=MAX_DOUBLINGS):
    """Gauss-Legendre integral of func on [a, b] with order doubling; returns (value, scale)."""
    def apply(rule):
        values = np.asarray(func(rule.nodes))
        return np.sum(rule.weights * values), float(np.sum(rule.weights * np.abs(values)))

    value, scale = apply(gauss_legendre_rule(order, a, b))
    for _ in range(max_doublings):
        order *= 2
        refined, scale = apply(gauss_legendre_rule(order, a, b))
        if abs(refined - value) <= rtol * max(abs(refined), scale):
            return refined, scale
        value = refined
    raise ConvergenceError(f"quadrature on [{a:.6g}, {b:.6g}] did not converge by order {order}",
                           difference=float(abs(refined - value)), order=order)


def expect(m, integrand, rule=None, rtol=RELATIVE_TOLERANCE):
    """
    E_m[integrand(theta)] by Gauss-Legendre quadrature with order doubling.

    The integrand is called on a numpy array of angles and may return complex
    values. Raises ConvergenceError if six doublings do not settle the value,
    which signals a peaked integrand that needs integrate_piecewise.
    """
    rule = rule or gauss_legendre_rule(DEFAULT_ORDER)
    value, _ = _integrate(lambda t: integrand(t) * density(m, t), rule.a, rule.b, rule.order, rtol)
    return value


def integrate_piecewise(func, breakpoints, order=DEFAULT_ORDER, rtol=RELATIVE_TOLERANCE):
    """Sum of doubling Gauss-Legendre integrals of func over consecutive breakpoint intervals."""
    points = np.unique(np.asarray(breakpoints, dtype=float))
    total = []
    scale = 0.0
    for a, b in zip(points[:-1], points[1:]):
        value, part_scale = _integrate(func, a, b, order, rtol)
        total.append(value)
        scale += part_scale
    return complex(sum(total)) if np.iscomplexobj(np.asarray(total)) else math.fsum(total), scale


def plancherel_g(p, z):
    """G_p(z) = E_{mu_p}[exp(2 z cos theta)]; G(z) is the p -> infinity limit."""
    z = complex(z)
    value = expect(AngleMeasure.plancherel(p), lambda t: np.exp(2.0 * z * np.cos(t)))
    return complex(value)


# --- distribution functions -----------------------------------------------------

def _sato_tate_cdf(theta):
    x = 2.0 * np.asarray(theta, dtype=float)
    # (x - sin x)/(2 pi) with a series near 0 to keep relative precision
    small = x < 0.1
    series = x ** 3 / 6.0 - x ** 5 / 120.0 + x ** 7 / 5040.0 - x ** 9 / 362880.0
    core = np.where(small, series, x - np.sin(x))
    return core / (2.0 * math.pi)


@lru_cache(maxsize=4096)
def _cumulative_table(m):
    """Boundaries and normalized cumulative mass of TABLE_SEGMENTS equal segments of [0, pi]."""
    edges = np.linspace(0.0, math.pi, TABLE_SEGMENTS + 1)
    x, w = _legendre_nodes(_SEGMENT_ORDER)
    half = 0.5 * (edges[1:] - edges[:-1])
    nodes = edges[:-1, None] + half[:, None] * (x[None, :] + 1.0)
    masses = np.sum(half[:, None] * w[None, :] * _peak_relative_density(m, nodes), axis=1)
    cumulative = np.concatenate(([0.0], np.cumsum(masses)))
    total = cumulative[-1]
    if not (total > 0.0 and math.isfinite(total)):
        raise ConvergenceError(f"cumulative table of {m.label} has no mass", total=total)
    return edges, cumulative / total, total


def cdf(m, theta):
    """
    mu([0, theta]).

    Closed form for mu_inf; otherwise a cached 512-segment cumulative table
    completed by Gauss-Legendre on the partial segment.
    """
    theta = np.asarray(theta, dtype=float)
    if np.any((theta < 0.0) | (theta > math.pi)):
        raise DomainError("angles must lie in [0, pi]")
    if m.kind == SATO_TATE:
        return np.clip(_sato_tate_cdf(theta), 0.0, 1.0)
    edges, cumulative, total = _cumulative_table(m)
    flat = np.atleast_1d(theta)
    index = np.clip(np.searchsorted(edges, flat, side='right') - 1, 0, TABLE_SEGMENTS - 1)
    x, w = _legendre_nodes(_SEGMENT_ORDER)
    left = edges[index]
    half = 0.5 * (flat - left)
    nodes = left[:, None] + half[:, None] * (x[None, :] + 1.0)
    partial = np.sum(half[:, None] * w[None, :] * _peak_relative_density(m, nodes), axis=1) / total
    out = np.clip(cumulative[index] + partial, 0.0, 1.0)
    return out.reshape(theta.shape) if theta.ndim else float(out[0])


@lru_cache(maxsize=4096)
def _inverse_cdf(m):
    """Monotone cubic inverse CDF on a 512-point table mixing uniform and equal-mass angles."""
    edges, cumulative, _ = _cumulative_table(m)
    uniform = np.linspace(0.0, math.pi, TABLE_POINTS // 2)
    quantiles = np.interp(np.linspace(0.0, 1.0, TABLE_POINTS // 2), cumulative, edges)
    angles = np.unique(np.concatenate((uniform, quantiles)))
    levels = cdf(m, angles)
    levels, keep = np.unique(levels, return_index=True)
    debug_logger.debug(f"📈 inverse-CDF table for {m.label}: {len(keep)} points")
    return PchipInterpolator(levels, angles[keep], extrapolate=False)


# --- sampling --------------------------------------------------------------------

def make_rng(seed, stream=0):
    """Counter-based generator for the (seed, stream) pair."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(stream)])))


def _sato_tate_inverse(u):
    upper = u > 0.5
    w = np.where(upper, 1.0 - u, u)
    theta = np.minimum(np.cbrt(1.5 * math.pi * w), 0.5 * math.pi)
    for _ in range(60):
        residual = _sato_tate_cdf(theta) - w
        slope = sato_tate_density(theta)
        step = np.divide(residual, slope, out=np.zeros_like(theta), where=slope > 0.0)
        theta = np.clip(theta - step, 0.0, 0.5 * math.pi)
        if np.max(np.abs(step), initial=0.0) < 1e-15:
            break
    return np.where(upper, math.pi - theta, theta)


def _rejection_plancherel(p, rng, n):
    """Rejection against mu_inf with envelope constant (1+1/p)/(1-1/p)^2."""
    q = 1.0 / p
    accepted = []
    count = 0
    proposed = 0
    while count < n:
        batch = max(REJECTION_BATCH, int(1.5 * (n - count)))
        theta = _sato_tate_inverse(rng.random(batch))
        ratio = (1.0 - q) ** 2 / (1.0 - 2.0 * np.cos(2.0 * theta) * q + q * q)
        keep = theta[rng.random(batch) < ratio]
        accepted.append(keep)
        count += len(keep)
        proposed += batch
    debug_logger.debug(f"🎯 rejection mu_{p}: acceptance {count / proposed:.4f}")
    return np.concatenate(accepted)[:n]


def sample_with(m, rng, n):
    """Draw n angles from m using an existing Generator."""
    if n < 1:
        raise DomainError("sample size must be at least 1", n=n)
    if m.kind == SATO_TATE:
        return _sato_tate_inverse(rng.random(n))
    if not m.is_tilted:
        return _rejection_plancherel(m.p, rng, n)
    theta = _inverse_cdf(m)(rng.random(n))
    return np.clip(np.nan_to_num(theta, nan=0.0), 0.0, math.pi)


def sample(m, seed, n, stream=0):
    """n i.i.d. angles from m; deterministic in (seed, stream)."""
    return sample_with(m, make_rng(seed, stream), n)
