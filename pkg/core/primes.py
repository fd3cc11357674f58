# core/primes.py
"""
Prime enumeration and tail sums over primes beyond a working cutoff.

Tails are computed as P(s) minus the finite part, where the prime zeta
function P(s) = sum mu(n)/n log zeta(ns) and zeta comes from Euler-Maclaurin.
"""

import logging
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import bernoulli

from core.errors import DomainError

debug_logger = logging.getLogger('satotate_debug')

MAX_SIEVE_LIMIT = 10 ** 8
MIN_TAIL_EXPONENT = 1.0 + 1e-3

_EM_TERMS = 20
_EM_CORRECTIONS = 10
# B_2, B_4, ..., B_20 divided by (2k)!
_BERNOULLI_RATIOS = [float(bernoulli(2 * k)[2 * k]) / math.factorial(2 * k)
                     for k in range(1, _EM_CORRECTIONS + 1)]


@dataclass(frozen=True)
class PrimeTable:
    limit: int
    primes: np.ndarray

    def __len__(self):
        return len(self.primes)

    def up_to(self, bound):
        """Primes of the table that are <= bound."""
        return self.primes[: int(np.searchsorted(self.primes, bound, side='right'))]


@lru_cache(maxsize=8)
def sieve(limit):
    """All primes <= limit (2 <= limit <= 1e8) by an odd-only Eratosthenes sieve."""
    if int(limit) != limit or not (2 <= limit <= MAX_SIEVE_LIMIT):
        raise DomainError(f"sieve limit must be an integer in [2, {MAX_SIEVE_LIMIT}]", limit=limit)
    limit = int(limit)
    # index i stands for the odd number 2i+1
    odd = np.ones(limit // 2 + 1, dtype=bool)
    odd[0] = False
    for i in range(1, (math.isqrt(limit) - 1) // 2 + 1):
        if odd[i]:
            p = 2 * i + 1
            odd[p * p // 2::p] = False
    candidates = 2 * np.nonzero(odd)[0] + 1
    primes = np.concatenate(([2], candidates[candidates <= limit])).astype(np.int64)
    primes.setflags(write=False)
    debug_logger.debug(f"🧮 sieve({limit}): {len(primes)} primes")
    return PrimeTable(limit=limit, primes=primes)


def is_prime(n):
    n = int(n)
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    for d in range(3, math.isqrt(n) + 1, 2):
        if n % d == 0:
            return False
    return True


def mobius(n):
    n = int(n)
    if n < 1:
        raise DomainError("mobius is defined for n >= 1", n=n)
    result = 1
    d = 2
    while d * d <= n:
        if n % d == 0:
            n //= d
            if n % d == 0:
                return 0
            result = -result
        d += 1
    if n > 1:
        result = -result
    return result


def zeta_minus_one(s):
    """zeta(s) - 1 for real s > 1 (Euler-Maclaurin at N = 20 with ten corrections)."""
    s = float(s)
    if not s > 1.0:
        raise DomainError("zeta is only evaluated for real s > 1", s=s)
    n = _EM_TERMS
    terms = [k ** -s for k in range(2, n)]
    terms.append(n ** (1.0 - s) / (s - 1.0))
    terms.append(0.5 * n ** -s)
    rising = s
    power = n ** (-s - 1.0)
    for k, ratio in enumerate(_BERNOULLI_RATIOS, start=1):
        terms.append(ratio * rising * power)
        rising *= (s + 2 * k - 1) * (s + 2 * k)
        power /= n * n
    return math.fsum(terms)


def riemann_zeta(s):
    return 1.0 + zeta_minus_one(s)


def prime_zeta(s):
    """P(s) = sum over primes of p^{-s}, for real s > 1."""
    s = float(s)
    if not s > 1.0:
        raise DomainError("prime zeta needs s > 1", s=s)
    terms = []
    n = 1
    while True:
        if n * s * math.log(2.0) > 17.0 * math.log(10.0) + math.log(n):
            break
        mu = mobius(n)
        if mu:
            terms.append(mu / n * math.log1p(zeta_minus_one(n * s)))
        n += 1
    return math.fsum(terms)


def prime_power_sum(s, cutoff):
    """Finite part: sum of p^{-s} over p <= cutoff."""
    if cutoff < 2:
        return 0.0
    primes = sieve(int(cutoff)).primes.astype(float)
    return math.fsum(primes ** -float(s))


def prime_power_tail(s, cutoff):
    """
    Sum of p^{-s} over primes p > cutoff.

    Args:
        s (float): exponent, s > 1 + 1e-3
        cutoff (int): P >= 2

    Returns:
        float: the tail, non-negative
    """
    s = float(s)
    if s <= MIN_TAIL_EXPONENT:
        raise DomainError(f"tail exponent must exceed {MIN_TAIL_EXPONENT}", s=s)
    if int(cutoff) < 2:
        raise DomainError("tail cutoff must be at least 2", cutoff=cutoff)
    tail = prime_zeta(s) - prime_power_sum(s, int(cutoff))
    return max(tail, 0.0)
