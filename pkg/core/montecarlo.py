# core/montecarlo.py
"""
Monte Carlo for log L(sigma, Theta) = sum_{p <= P} 2 lambda_{p,sigma}(theta_p).

Every prime has its own counter-based stream (seed, prime index), so draws do
not depend on the number of worker threads; per-prime contributions are added
in fixed chunks of primes and the chunks are reduced in prime order.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import logsumexp

from core.config import thread_count
from core.errors import BudgetError, DomainError
from core.euler import TAIL_NONE, cgf, lambda_theta, prime_tail
from core.measures import AngleMeasure, make_rng, sample_with
from core.primes import sieve
from core.saddle import solve_saddle

debug_logger = logging.getLogger('satotate_debug')

DRAW_BUDGET = 10 ** 8
PRIMES_PER_CHUNK = 16
CF_BATCH = 1 << 14


@dataclass(frozen=True, eq=False)
class SampleSet:
    cfg: object
    seed: int
    n: int
    values: np.ndarray
    kappa: float
    truncation_bias_bound: float
    cutoff: int

    @property
    def mean(self):
        return float(np.mean(self.values))

    @property
    def variance(self):
        return float(np.var(self.values, ddof=1))

    def summary(self):
        q = np.quantile(self.values, [0.01, 0.5, 0.99])
        return {
            'seed': self.seed, 'n': self.n, 'kappa': self.kappa, 'cutoff': self.cutoff,
            'mean': self.mean, 'variance': self.variance, 'stderr_mean': math.sqrt(self.variance / self.n),
            'quantile_01': float(q[0]), 'median': float(q[1]), 'quantile_99': float(q[2]),
            'min': float(np.min(self.values)), 'max': float(np.max(self.values)),
            'truncation_bias_bound': self.truncation_bias_bound,
        }


@dataclass(frozen=True)
class TiltedTail:
    estimate: float
    stderr: float
    log_estimate: float
    relative_stderr: float
    kappa: float
    hits: int
    n: int


def truncation_bias_bound(sigma, cutoff):
    """Drift of the primes beyond the cutoff plus four standard deviations of their sum."""
    tail = prime_tail(sigma, cutoff)
    return abs(0.5 * tail.s_minus) + 4.0 * math.sqrt(tail.s_plus)


def _chunk_sum(primes, offset, sigma, kappa, seed, n):
    total = np.zeros(n)
    for i, p in enumerate(primes, start=offset):
        measure = AngleMeasure.plancherel(int(p))
        if kappa:
            measure = measure.tilted(sigma, kappa)
        theta = sample_with(measure, make_rng(seed, i + 1), n)
        total += 2.0 * lambda_theta(int(p), sigma, theta)
    return total


def sample_log_l(cfg, seed, n, kappa=0.0):
    """
    n draws of log L truncated at the cutoff, from mu_p (kappa = 0) or from the
    tilted measures at kappa.
    """
    n = int(n)
    if n < 1:
        raise DomainError("sample size must be at least 1", n=n)
    cutoff = cfg.resolve_cutoff(kappa)
    primes = sieve(cutoff).primes
    if n * len(primes) > DRAW_BUDGET:
        raise BudgetError(f"{n} samples x {len(primes)} primes exceeds {DRAW_BUDGET:.0e} angle draws",
                          n=n, primes=len(primes))
    chunks = [(primes[i:i + PRIMES_PER_CHUNK], i) for i in range(0, len(primes), PRIMES_PER_CHUNK)]

    def run(chunk):
        block, offset = chunk
        return _chunk_sum(block, offset, cfg.sigma, float(kappa), int(seed), n)

    values = np.zeros(n)
    with ThreadPoolExecutor(max_workers=thread_count()) as pool:
        for partial in pool.map(run, chunks):
            values += partial
    bias = truncation_bias_bound(cfg.sigma, cutoff) if 2.0 * cfg.sigma > 1.001 else math.inf
    debug_logger.info(f"🎲 sampled {n} x {len(primes)} primes (sigma={cfg.sigma}, kappa={kappa}, "
                      f"seed={seed}): mean={np.mean(values):.6g}")
    return SampleSet(cfg=cfg, seed=int(seed), n=n, values=values, kappa=float(kappa),
                     truncation_bias_bound=bias, cutoff=cutoff)


def empirical_tail(sample_set, tau):
    """Frequency of draws above tau with its binomial standard error."""
    if sample_set.kappa != 0.0:
        raise DomainError("empirical tails need an untilted sample")
    p_hat = float(np.mean(sample_set.values > tau))
    return p_hat, math.sqrt(p_hat * (1.0 - p_hat) / sample_set.n)


def tilted_tail(cfg, tau, seed, n):
    """
    Importance-sampling estimate of P(log L > tau) with the tilt at the saddle of tau.

    Phi = F(kappa) e^{-kappa tau} E_kappa[e^{-kappa (X - tau)} 1{X > tau}], with
    the truncated model (no prime tail) on both sides of the identity.
    """
    truncated = cfg.with_tail_mode(TAIL_NONE)
    solution = solve_saddle(truncated, tau)
    kappa = solution.kappa
    fixed = solution.config
    draws = sample_log_l(fixed, seed, n, kappa)
    log_f = cgf(fixed, kappa, 0).values[0]

    above = draws.values > tau
    hits = int(np.count_nonzero(above))
    exponents = -kappa * (draws.values[above] - tau)
    log_scale = log_f - kappa * tau
    if hits == 0:
        return TiltedTail(0.0, 0.0, -math.inf, math.inf, kappa, 0, draws.n)
    log_mean = float(logsumexp(exponents)) - math.log(draws.n)
    weights = np.zeros(draws.n)
    weights[above] = np.exp(exponents)
    spread = float(np.std(weights, ddof=1)) if draws.n > 1 else 0.0
    log_estimate = log_scale + log_mean
    estimate = math.exp(log_estimate)
    relative = spread / math.sqrt(draws.n) / math.exp(log_mean)
    debug_logger.info(f"🎯 tilted tail tau={tau} kappa={kappa:.6g}: log Phi={log_estimate:.6f} "
                      f"(rel. stderr {relative:.3e}, {hits}/{draws.n} hits)")
    return TiltedTail(estimate=estimate, stderr=estimate * relative, log_estimate=log_estimate,
                      relative_stderr=relative, kappa=kappa, hits=hits, n=draws.n)


def ks_distance(values, cdf):
    """Kolmogorov-Smirnov distance between the sample and a vectorized CDF."""
    x = np.sort(np.asarray(values, dtype=float))
    n = len(x)
    model = np.asarray(cdf(x), dtype=float)
    upper = np.arange(1, n + 1) / n - model
    lower = model - np.arange(n) / n
    return float(max(np.max(upper), np.max(lower)))


def empirical_cf(values):
    """v -> mean of exp(i v X) over the sample, vectorized over v."""
    x = np.asarray(values, dtype=float)

    def cf(v):
        v = np.atleast_1d(np.asarray(v, dtype=float))
        out = np.empty(v.shape, dtype=complex)
        for start in range(0, len(v), 64):
            block = v[start:start + 64]
            acc = np.zeros(len(block), dtype=complex)
            for lo in range(0, len(x), CF_BATCH):
                acc += np.exp(1j * np.outer(block, x[lo:lo + CF_BATCH])).sum(axis=1)
            out[start:start + 64] = acc / len(x)
        return out

    return cf


def esseen_bound(empirical, model, K, R, segments=None, order=16):
    """
    (2/pi) int_0^R |phi(v) - psi(v)|/v dv + 24 K/(pi R).

    The integral uses composite Gauss-Legendre on (0, R]; its nodes avoid v = 0,
    where the integrand tends to the difference of the means.
    """
    if R <= 0.0:
        raise DomainError("R must be positive", R=R)
    if K < 0.0:
        raise DomainError("K must be non-negative", K=K)
    segments = segments or max(16, int(math.ceil(R / 0.25)))
    x, w = leggauss(order)
    edges = np.linspace(0.0, R, segments + 1)
    half = 0.5 * np.diff(edges)
    nodes = (edges[:-1, None] + half[:, None] * (x[None, :] + 1.0)).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    gap = np.abs(np.asarray(empirical(nodes)) - np.asarray(model(nodes)))
    integral = float(np.sum(weights * gap / nodes))
    return 2.0 / math.pi * integral + 24.0 * K / (math.pi * R)
