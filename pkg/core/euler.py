# core/euler.py
"""
Local factors of the random Euler product and the global cumulant generating
function f_sigma(kappa) = sum over primes of log F_{sigma,p}(kappa).

Per-prime integrals over mu_p are evaluated in vectorized blocks: all primes of
a block share one Gauss-Legendre layout, and primes whose tilt is peaked at
theta = 0 (or theta = pi for negative tilts) get a geometric subdivision around
the peak. Sums over primes are compensated (math.fsum).
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Optional, Tuple

import numpy as np

from core.config import thread_count
from core.errors import ConvergenceError, ConvexityError, DomainError
from core.measures import (
    AngleMeasure,
    _legendre_nodes,
    expect,
    gauss_legendre_rule,
    integrate_piecewise,
    plancherel_factor,
    sato_tate_density,
)
from core.primes import MAX_SIEVE_LIMIT, is_prime, prime_power_tail, sieve
from core.specfun import ComplexPoint, log_big_g

debug_logger = logging.getLogger('satotate_debug')

TAIL_NONE = 'none'
TAIL_ANALYTIC = 'analytic'
TAIL_MODES = (TAIL_NONE, TAIL_ANALYTIC)

MIN_SIGMA = 0.5 + 1e-6
MIN_CUTOFF = 100
AUTO_CUTOFF_FLOOR = 10 ** 4
TAIL_RATIO = 0.25
PEAK_THRESHOLD = 4.0
MAX_JMAX = 6
CONTOUR_NODES = 64
BLOCK_SIZE = 1 << 18
MAX_ORDER_SCALE = 8
CONVERGENCE_TOLERANCE = 1e-13
MOMENT_TOLERANCE = 1e-10
ROUNDOFF_FLOOR = 4096 * np.finfo(float).eps


@dataclass(frozen=True)
class ModelConfig:
    sigma: float
    prime_cutoff: Optional[int] = None
    quadrature_order: int = 64
    tail_mode: str = TAIL_ANALYTIC

    def __post_init__(self):
        if not (MIN_SIGMA < self.sigma <= 1.0):
            raise DomainError("sigma must lie in (1/2, 1]", sigma=self.sigma)
        if self.prime_cutoff is not None and not (MIN_CUTOFF <= self.prime_cutoff <= MAX_SIEVE_LIMIT):
            raise DomainError(f"prime cutoff must lie in [{MIN_CUTOFF}, {MAX_SIEVE_LIMIT}]",
                              cutoff=self.prime_cutoff)
        if self.quadrature_order < 32:
            raise DomainError("quadrature order must be at least 32", order=self.quadrature_order)
        if self.tail_mode not in TAIL_MODES:
            raise DomainError(f"unknown tail mode {self.tail_mode!r}")
        if self.tail_mode == TAIL_ANALYTIC and 2.0 * self.sigma <= 1.001:
            raise DomainError("the analytic tail needs 2 sigma > 1.001", sigma=self.sigma)

    def with_cutoff(self, cutoff):
        return replace(self, prime_cutoff=None if cutoff is None else int(cutoff))

    def with_tail_mode(self, tail_mode):
        return replace(self, tail_mode=tail_mode)

    def resolve_cutoff(self, kappa):
        """The configured cutoff, or the smallest prime with |kappa| P^{-sigma} <= 1/4 (at least 1e4)."""
        if self.prime_cutoff is not None:
            return int(self.prime_cutoff)
        return auto_cutoff(self.sigma, kappa)


@dataclass(frozen=True)
class LogComplex:
    """A complex number stored as log-modulus and phase."""

    log_modulus: float
    phase: float = 0.0

    def to_complex(self):
        return complex(math.exp(self.log_modulus) * math.cos(self.phase),
                       math.exp(self.log_modulus) * math.sin(self.phase))

    @property
    def log(self):
        return complex(self.log_modulus, self.phase)


@dataclass(frozen=True)
class CgfReport:
    kappa: float
    values: Tuple[float, ...]
    finite_part: Tuple[float, ...]
    tail_correction: float
    truncation_error_bound: float
    cutoff: int
    n_primes: int

    @property
    def f(self):
        return self.values[0]

    def derivative(self, j):
        return self.values[j]


def auto_cutoff(sigma, kappa):
    needed = math.ceil((abs(kappa) / TAIL_RATIO) ** (1.0 / sigma))
    cutoff = max(AUTO_CUTOFF_FLOOR, needed)
    if cutoff > MAX_SIEVE_LIMIT:
        raise DomainError(f"kappa={kappa:.6g} needs a prime cutoff beyond {MAX_SIEVE_LIMIT}",
                          kappa=kappa, sigma=sigma)
    while not is_prime(cutoff):
        cutoff += 1
    return cutoff


# --- lambda ---------------------------------------------------------------------

def lambda_theta(p, sigma, theta):
    """
    lambda_{p,sigma}(theta) = -1/2 log(1 - 2 cos(theta) p^{-sigma} + p^{-2 sigma}).

    Written as -1/2 log((1-x)^2 + 4x sin^2(theta/2)) with x = p^{-sigma}, which
    keeps full precision near theta = 0.
    """
    x = np.asarray(p, dtype=float) ** -sigma
    theta = np.asarray(theta, dtype=float)
    return -0.5 * np.log((1.0 - x) ** 2 + 4.0 * x * np.sin(0.5 * theta) ** 2)


def lambda_series(p, sigma, theta, terms=60):
    """Truncated cosine series sum_{m <= terms} cos(m theta) p^{-m sigma}/m."""
    x = float(p) ** -sigma
    theta = np.asarray(theta, dtype=float)
    m = np.arange(1, terms + 1)
    return np.sum(np.cos(np.multiply.outer(theta, m)) * x ** m / m, axis=-1)


def lambda_second_derivative(p, sigma, theta):
    """d^2 lambda / d theta^2; equals -x/(1-x)^2 at 0 and x/(1+x)^2 at pi."""
    x = float(p) ** -sigma
    theta = np.asarray(theta, dtype=float)
    d = 1.0 - 2.0 * x * np.cos(theta) + x * x
    return -x * np.cos(theta) / d + 2.0 * (x * np.sin(theta)) ** 2 / d ** 2


# --- vectorized per-prime integrals ------------------------------------------------

def _base_order(p, order):
    """Nodes needed for the Plancherel factor alone, whose poles approach the axis for small p."""
    return np.where(p < 3, 2 * order, np.where(p < 11, order, np.where(p < 100, order // 2,
                                                                      max(16, order // 4))))


def _layout(primes, sigma, s, order, scale):
    """
    Split primes into groups sharing (segments, nodes per segment).

    Returns a list of (index array, edges matrix, nodes per segment).
    """
    x = primes.astype(float) ** -sigma
    growth = abs(s.real) * x
    peaked = growth > PEAK_THRESHOLD
    groups = []

    flat_idx = np.nonzero(~peaked)[0]
    if len(flat_idx):
        need = np.maximum(_base_order(primes[flat_idx], order),
                          16 * np.ceil((8.0 + 3.0 * abs(s) * x[flat_idx]) / 16.0).astype(int))
        need = np.minimum(need * scale, 4096)
        for n_nodes in np.unique(need):
            idx = flat_idx[need == n_nodes]
            edges = np.tile([0.0, math.pi], (len(idx), 1))
            groups.append((idx, edges, int(n_nodes)))

    peak_idx = np.nonzero(peaked)[0]
    if len(peak_idx):
        peak = 0.0 if s.real > 0 else math.pi
        curvature = np.abs([lambda_second_derivative(p, sigma, peak) for p in primes[peak_idx]])
        width = 1.0 / np.sqrt(abs(s.real) * curvature)
        segments = np.ceil(np.log2(math.pi / width)).astype(int) + 2
        per_segment = (32 if s.imag == 0.0 else 64) * scale
        for k in np.unique(segments):
            idx = peak_idx[segments == k]
            w = width[segments == k]
            inner = w[:, None] * 2.0 ** np.arange(k - 1)[None, :]
            edges = np.concatenate((np.zeros((len(idx), 1)), np.minimum(inner, math.pi),
                                    np.full((len(idx), 1), math.pi)), axis=1)
            groups.append((idx, edges, int(per_segment)))
    return groups


def _group_integrals(primes, sigma, s, edges, n_nodes, moments):
    """Integrals of exp(2s(lambda - lambda*)) d mu_p for one group; optional tilted moments."""
    x_gl, w_gl = _legendre_nodes(n_nodes)
    peak = 0.0 if s.real >= 0 else math.pi
    half = 0.5 * (edges[:, 1:] - edges[:, :-1])
    phi = edges[:, :-1, None] + half[:, :, None] * (x_gl[None, None, :] + 1.0)
    weights = (half[:, :, None] * w_gl[None, None, :]).reshape(len(primes), -1)
    theta = np.abs(peak - phi).reshape(len(primes), -1)
    p = primes.astype(float)[:, None]
    lam = lambda_theta(p, sigma, theta)
    lam_star = lambda_theta(primes.astype(float), sigma, peak)
    mass = weights * sato_tate_density(theta) * plancherel_factor(p, theta)
    tilt = np.exp(2.0 * s * (lam - lam_star[:, None])) if s.imag else \
        np.exp(2.0 * s.real * (lam - lam_star[:, None]))
    weighted = mass * tilt
    z = np.sum(weighted, axis=1)
    out = {'z': z, 'lam_star': lam_star}
    if moments:
        prob = weighted / z[:, None]
        m1 = np.sum(prob * lam, axis=1)
        d = lam - m1[:, None]
        d2 = d * d
        out.update(m1=m1, mu2=np.sum(prob * d2, axis=1), mu3=np.sum(prob * d2 * d, axis=1),
                   mu4=np.sum(prob * d2 * d2, axis=1))
    return out


def _chunks(idx, width):
    rows = max(1, BLOCK_SIZE // max(1, width))
    for start in range(0, len(idx), rows):
        yield slice(start, start + rows)


def _per_prime(primes, sigma, s, order, scale, moments):
    """Per-prime integrals for all primes, in the input order."""
    keys = ('z', 'lam_star') + (('m1', 'mu2', 'mu3', 'mu4') if moments else ())
    dtype = complex if s.imag else float
    result = {key: np.empty(len(primes), dtype=dtype if key == 'z' else float) for key in keys}

    jobs = []
    for idx, edges, n_nodes in _layout(primes, sigma, s, order, scale):
        width = (edges.shape[1] - 1) * n_nodes
        for part in _chunks(idx, width):
            jobs.append((idx[part], edges[part], n_nodes))

    def run(job):
        idx, edges, n_nodes = job
        return idx, _group_integrals(primes[idx], sigma, s, edges, n_nodes, moments)

    with ThreadPoolExecutor(max_workers=thread_count()) as pool:
        for idx, values in pool.map(run, jobs):
            for key in keys:
                result[key][idx] = values[key]
    return result


def _converged_real(primes, sigma, kappa, order):
    """
    Real-tilt integrals with a doubling check on log Z and the first two moments.

    Tolerances are per prime and relative to the roundoff floor of that prime:
    exp(2 kappa (lambda - lambda*)) carries a relative error of order
    eps * 2|kappa| lambda*, which no refinement removes.
    """
    s = complex(kappa, 0.0)
    previous = _per_prime(primes, sigma, s, order, 1, True)
    scale = 1
    while scale < MAX_ORDER_SCALE:
        scale *= 2
        current = _per_prime(primes, sigma, s, order, scale, True)
        log_z = np.log(current['z'])
        magnitude = np.maximum.reduce([np.ones_like(log_z), np.abs(log_z),
                                       2.0 * abs(kappa) * np.abs(current['lam_star'])])
        bound = CONVERGENCE_TOLERANCE * magnitude + ROUNDOFF_FLOOR
        d_log = np.abs(log_z - np.log(previous['z']))
        d_m1 = np.abs(current['m1'] - previous['m1'])
        d_mu2 = np.abs(current['mu2'] - previous['mu2']) / np.maximum(current['mu2'], 1e-300)
        if np.all(d_log <= bound) and np.all(d_m1 <= bound) and \
                np.all(d_mu2 <= MOMENT_TOLERANCE + bound):
            return current
        debug_logger.debug(f"🔁 kappa={kappa:.6g}: refining per-prime rules (scale {scale}, "
                           f"dlogZ={np.max(d_log / bound, initial=0.0):.2e}x, "
                           f"dm1={np.max(d_m1 / bound, initial=0.0):.2e}x, "
                           f"dmu2={np.max(d_mu2, initial=0.0):.2e})")
        previous = current
    raise ConvergenceError(f"per-prime quadrature did not converge at kappa={kappa:.6g}",
                           kappa=kappa, sigma=sigma)


# --- local factor --------------------------------------------------------------------

def local_mgf(p, sigma, s, order=64):
    """
    F_{sigma,p}(s) = E_{mu_p}[exp(2 s lambda_{p,sigma})] in log-scaled form.

    The factor exp(2 s lambda(theta*)) is taken out, with theta* = 0 for
    Re s >= 0 and theta* = pi otherwise. When |Re s| p^{-sigma} > 4 the rest
    is integrated on a geometric subdivision around theta*.
    """
    if order < 32:
        raise DomainError("local_mgf needs quadrature order >= 32", order=order)
    s = complex(s)
    if s == 0:
        return LogComplex(0.0, 0.0)
    x = float(p) ** -sigma
    peak = 0.0 if s.real >= 0 else math.pi
    lam_star = float(lambda_theta(p, sigma, peak))
    measure = AngleMeasure.plancherel(p)

    def reduced(theta):
        return np.exp(2.0 * s * (lambda_theta(p, sigma, theta) - lam_star))

    if abs(s.real) * x <= PEAK_THRESHOLD:
        value = complex(expect(measure, reduced,
                               rule=gauss_legendre_rule(order)))
    else:
        curvature = abs(float(lambda_second_derivative(p, sigma, peak)))
        width = 1.0 / math.sqrt(abs(s.real) * curvature)
        offsets = [0.0]
        while offsets[-1] < math.pi:
            offsets.append(min(math.pi, width * 2.0 ** (len(offsets) - 1)))
        breakpoints = [abs(peak - t) for t in offsets]

        def integrand(theta):
            return reduced(theta) * sato_tate_density(theta) * plancherel_factor(p, theta)

        value, _ = integrate_piecewise(integrand, breakpoints, order=order)
        value = complex(value)
    if value == 0:
        raise ConvergenceError("local factor underflowed", p=p, s=str(s))
    shift = 2.0 * s * lam_star
    return LogComplex(math.log(abs(value)) + shift.real, math.atan2(value.imag, value.real) + shift.imag)


def local_mgf_peak_form(p, sigma, s):
    """
    Leading form of F_{sigma,p}(s) for large real s:
    exp(2 s lambda(0)) (1+1/p)(1-1/p)^{-2} / (sqrt(4 pi) (s |lambda''(0)|)^{3/2}).
    """
    if s <= 0:
        raise DomainError("the peak form is stated for s > 0", s=s)
    x = float(p) ** -sigma
    curvature = x / (1.0 - x) ** 2
    log_value = (2.0 * s * float(lambda_theta(p, sigma, 0.0))
                 + math.log((1.0 + 1.0 / p) / (1.0 - 1.0 / p) ** 2)
                 - 0.5 * math.log(4.0 * math.pi) - 1.5 * math.log(s * curvature))
    return LogComplex(log_value, 0.0)


def sato_tate_ratio(p, sigma, s):
    """F_{sigma,p}(s) / G(s p^{-sigma})."""
    s = complex(s)
    local = local_mgf(p, sigma, s)
    log_g = complex(log_big_g(np.array([s * float(p) ** -sigma]))[0])
    return ComplexPoint.of(np.exp(local.log - log_g))


# --- tails ------------------------------------------------------------------------------

@dataclass(frozen=True)
class PrimeTail:
    """Prime-zeta tails beyond the cutoff: S+ = T(2s)+T(2s+1), S- = T(2s)-T(2s+1)."""

    s_plus: float
    s_minus: float
    t3: float
    t4: float

    def cgf(self, kappa):
        return 0.5 * kappa * kappa * self.s_plus - 0.5 * kappa * self.s_minus

    def derivative(self, kappa, j):
        if j == 0:
            return self.cgf(kappa)
        if j == 1:
            return kappa * self.s_plus - 0.5 * self.s_minus
        if j == 2:
            return self.s_plus
        return 0.0

    def bound(self, kappa):
        k = abs(kappa)
        return k ** 3 * self.t3 + (k + k ** 2 + k ** 4) * self.t4


def prime_tail(sigma, cutoff):
    t2 = prime_power_tail(2.0 * sigma, cutoff)
    t21 = prime_power_tail(2.0 * sigma + 1.0, cutoff)
    return PrimeTail(s_plus=t2 + t21, s_minus=t2 - t21,
                     t3=prime_power_tail(3.0 * sigma, cutoff),
                     t4=prime_power_tail(4.0 * sigma, cutoff))


_NO_TAIL = PrimeTail(0.0, 0.0, 0.0, 0.0)


def _tail_for(cfg, cutoff):
    return prime_tail(cfg.sigma, cutoff) if cfg.tail_mode == TAIL_ANALYTIC else _NO_TAIL


# --- global cgf ------------------------------------------------------------------------

def _check_regime(cfg, kappa):
    if not math.isfinite(kappa):
        raise DomainError("kappa must be finite", kappa=kappa)
    cutoff = cfg.resolve_cutoff(kappa)
    if abs(kappa) * cutoff ** -cfg.sigma > TAIL_RATIO:
        raise DomainError(f"kappa={kappa:.6g} is outside the tail regime for P={cutoff} "
                          f"(needs |kappa| P^(-sigma) <= {TAIL_RATIO})", kappa=kappa, cutoff=cutoff)
    return cutoff


def _complex_cgf(primes, sigma, s, order):
    """Sum over primes of log F_{sigma,p}(s) for complex s (principal log per prime)."""
    values = _per_prime(primes, sigma, complex(s), order, 2, False)
    logs = np.log(values['z']) + 2.0 * complex(s) * values['lam_star']
    return complex(math.fsum(logs.real), math.fsum(logs.imag))


def cgf(cfg, kappa, j_max=2):
    """
    f_sigma(kappa) and its derivatives up to j_max <= 6.

    Orders 1-4 are cumulants of 2 lambda under the tilted measures, orders 5
    and 6 come from a contour integral of the per-prime sum on |s - kappa| =
    max(kappa/2, 1/2). The analytic tail adds S+ kappa^2/2 - S- kappa/2.
    """
    if not (0 <= j_max <= MAX_JMAX):
        raise DomainError(f"j_max must lie in [0, {MAX_JMAX}]", j_max=j_max)
    kappa = float(kappa)
    cutoff = _check_regime(cfg, kappa)
    primes = sieve(cutoff).primes
    sigma = cfg.sigma

    local = _converged_real(primes, sigma, kappa, cfg.quadrature_order)
    log_f = np.log(local['z']) + 2.0 * kappa * local['lam_star']
    mu2 = local['mu2']
    per_order = [
        log_f,
        2.0 * local['m1'],
        4.0 * mu2,
        8.0 * local['mu3'],
        16.0 * (local['mu4'] - 3.0 * mu2 * mu2),
    ]
    finite = [math.fsum(values) for values in per_order[: min(j_max, 4) + 1]]
    if j_max >= 5:
        finite.extend(_contour_derivatives(primes, sigma, kappa, cfg.quadrature_order, j_max))

    tail = _tail_for(cfg, cutoff)
    values = tuple(finite[j] + tail.derivative(kappa, j) for j in range(j_max + 1))
    if j_max >= 2 and not values[2] > 0.0:
        raise ConvexityError(f"f''({kappa:.6g}) = {values[2]:.3e} is not positive", kappa=kappa)
    report = CgfReport(kappa=kappa, values=values, finite_part=tuple(finite[: j_max + 1]),
                       tail_correction=tail.cgf(kappa), truncation_error_bound=tail.bound(kappa),
                       cutoff=cutoff, n_primes=len(primes))
    debug_logger.debug(f"📐 cgf sigma={sigma} kappa={kappa:.6g} P={cutoff}: "
                       f"f={values[0]:.12g}" + (f" f'={values[1]:.12g}" if j_max >= 1 else ""))
    return report


def _contour_derivatives(primes, sigma, kappa, order, j_max):
    radius = max(abs(kappa) / 2.0, 0.5)
    phi = 2.0 * math.pi * np.arange(CONTOUR_NODES) / CONTOUR_NODES
    samples = np.array([_complex_cgf(primes, sigma, kappa + radius * np.exp(1j * t), order)
                        for t in phi])
    out = []
    for j in range(5, j_max + 1):
        coeff = np.mean(samples * np.exp(-1j * j * phi))
        out.append(float((math.factorial(j) * coeff / radius ** j).real))
    return out


def mgf_ratio_array(cfg, kappa, v):
    """F_sigma(kappa + iv) / F_sigma(kappa) on an array of v, tail factor included."""
    kappa = float(kappa)
    cutoff = _check_regime(cfg, kappa)
    primes = sieve(cutoff).primes
    sigma = cfg.sigma
    base = _converged_real(primes, sigma, kappa, cfg.quadrature_order)
    tail = _tail_for(cfg, cutoff)
    v = np.atleast_1d(np.asarray(v, dtype=float))
    out = np.empty(v.shape, dtype=complex)
    for i, vi in enumerate(v):
        if vi == 0.0:
            out[i] = 1.0
            continue
        shifted = _per_prime(primes, sigma, complex(kappa, vi), cfg.quadrature_order, 2, False)
        factors = shifted['z'] / base['z'] * np.exp(2j * vi * base['lam_star'])
        product = np.prod(factors)
        out[i] = product * np.exp(1j * kappa * vi * tail.s_plus - 0.5 * vi * vi * tail.s_plus
                                  - 0.5j * vi * tail.s_minus)
    return out


def mgf_ratio(cfg, kappa, v):
    """F_sigma(kappa + iv) / F_sigma(kappa); each finite factor has modulus <= 1."""
    return ComplexPoint.of(mgf_ratio_array(cfg, kappa, [v])[0])
