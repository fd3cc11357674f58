# core/specfun.py
"""
Modified Bessel functions I_0, I_1, I_2 on the right half-plane, the function
G(z) = I_1(2z)/z, its logarithm g and the subtracted variants g_*, h, h_*.

I_nu is summed from its power series for |z| <= SERIES_CUTOFF and from the
large-argument expansion beyond. Derivatives of g are taken by trapezoidal
quadrature of the Cauchy integral on a circle around the real point.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Union

import numpy as np
from scipy.optimize import bisect

from core.errors import DomainError, KinkError

debug_logger = logging.getLogger('satotate_debug')

SERIES_CUTOFF = 20.0
MAX_ARGUMENT = 1.0e4
MAX_DERIVATIVE_ORDER = 8
CAUCHY_NODES = 64
LOG_4PI = math.log(4.0 * math.pi)

# Value printed in the literature for the first zero ordinate; only logged for comparison.
PUBLISHED_FIRST_ZERO_ORDINATE = 7.66


class Variant(str, Enum):
    G = 'g'
    G_STAR = 'g_star'
    H = 'h'
    H_STAR = 'h_star'


@dataclass(frozen=True)
class ComplexPoint:
    re: float
    im: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.re) and math.isfinite(self.im)):
            raise DomainError("complex point must have finite components", re=self.re, im=self.im)

    def __complex__(self):
        return complex(self.re, self.im)

    @classmethod
    def of(cls, z):
        z = complex(z)
        return cls(z.real, z.imag)


Number = Union[ComplexPoint, complex, float, int]


@dataclass(frozen=True)
class GDerivativeRequest:
    u: float
    order: int = 0
    variant: Variant = Variant.G

    def __post_init__(self):
        object.__setattr__(self, 'variant', Variant(self.variant))
        if not (math.isfinite(self.u) and self.u > 0.0):
            raise DomainError("g derivatives need u > 0", u=self.u)
        if not (0 <= int(self.order) <= MAX_DERIVATIVE_ORDER) or int(self.order) != self.order:
            raise DomainError(f"derivative order must be an integer in [0, {MAX_DERIVATIVE_ORDER}]",
                              order=self.order)
        kinked = self.variant in (Variant.G_STAR, Variant.H_STAR)
        if kinked and self.order >= 1 and self.u == 1.0:
            raise KinkError(f"{self.variant.value} is not differentiable at u=1", order=self.order)


# --- Bessel I_nu ---------------------------------------------------------------

def _power_series(first_term, step_factor, nu_shift, start=0):
    """Sum first_term * prod step_factor/((k+start)(k+start+nu_shift)) until the terms are negligible."""
    term = first_term.copy()
    total = first_term.copy()
    absum = np.abs(first_term)
    for k in range(1, 400):
        term = term * step_factor / ((k + start) * (k + start + nu_shift))
        total = total + term
        mag = np.abs(term)
        absum = absum + mag
        if np.all(mag <= 1e-17 * absum):
            break
    return total


def _series_i(nu, z):
    half = z / 2.0
    return _power_series(half ** nu / math.factorial(nu), half * half, nu)


def _asymptotic_scaled_i(nu, z):
    """e^{-z} I_nu(z) from the large-argument expansion (Re z >= 0, |z| large)."""
    mu = 4.0 * nu * nu
    inv = 1.0 / z
    term = np.ones_like(z)
    main = np.ones_like(z)
    reflected = np.ones_like(z)
    previous = np.full(z.shape, np.inf)
    active = np.ones(z.shape, dtype=bool)
    for k in range(1, 200):
        term = term * (mu - (2 * k - 1) ** 2) / (8.0 * k) * inv
        mag = np.abs(term)
        # asymptotic series: stop at the smallest term
        active &= mag < previous
        sign = -1.0 if k % 2 else 1.0
        main = np.where(active, main + sign * term, main)
        reflected = np.where(active, reflected + term, reflected)
        previous = np.where(active, mag, previous)
        if not active.any() or np.all(mag < 1e-18):
            break
    upper = np.imag(z) >= 0.0
    phase = np.where(upper, 1j * np.exp(1j * math.pi * nu), -1j * np.exp(-1j * math.pi * nu))
    second = np.where(np.imag(z) == 0.0, 0.0, phase * np.exp(-2.0 * z) * reflected)
    return (main + second) / np.sqrt(2.0 * math.pi * z)


def bessel_i_scaled_array(nu, z):
    """e^{-z} I_nu(z) for an array with Re z >= 0."""
    z = np.asarray(z, dtype=complex)
    out = np.empty_like(z)
    near = np.abs(z) <= SERIES_CUTOFF
    if near.any():
        zn = z[near]
        out[near] = _series_i(nu, zn) * np.exp(-zn)
    if (~near).any():
        out[~near] = _asymptotic_scaled_i(nu, z[~near])
    return out


def bessel_i_array(nu, z):
    """I_nu(z) for an array of points; Re z < 0 is handled by I_nu(-z) = (-1)^nu I_nu(z)."""
    z = np.asarray(z, dtype=complex)
    flip = np.real(z) < 0.0
    w = np.where(flip, -z, z)
    out = np.empty_like(w)
    near = np.abs(w) <= SERIES_CUTOFF
    if near.any():
        out[near] = _series_i(nu, w[near])
    if (~near).any():
        wf = w[~near]
        with np.errstate(over='ignore', invalid='ignore'):
            out[~near] = _asymptotic_scaled_i(nu, wf) * np.exp(wf)
    return np.where(flip, (-1) ** nu * out, out)


def bessel_i(order: int, z: Number) -> ComplexPoint:
    """
    I_order(z) for order in {0, 1, 2}.

    Power series for |z| <= 20, large-argument expansion beyond; arguments
    with |z| > 1e4 are rejected.
    """
    if order not in (0, 1, 2):
        raise DomainError("only Bessel orders 0, 1 and 2 are supported", order=order)
    zc = complex(z)
    if not (math.isfinite(zc.real) and math.isfinite(zc.imag)):
        raise DomainError("Bessel argument must be finite")
    if abs(zc) > MAX_ARGUMENT:
        raise DomainError(f"|z| exceeds the supported range {MAX_ARGUMENT:g}", z=abs(zc))
    return ComplexPoint.of(bessel_i_array(order, np.array([zc]))[0])


# --- G and g ---------------------------------------------------------------------

def _g_series(z, minus_one=False):
    """G(z) = sum z^{2k}/(k!(k+1)!), optionally without the constant term."""
    sq = z * z
    if minus_one:
        return _power_series(sq / 2.0, sq, 1, start=1)
    return _power_series(np.ones_like(z), sq, 1)


def big_g_array(z):
    z = np.asarray(z, dtype=complex)
    z = np.where(np.real(z) < 0.0, -z, z)  # G is even
    out = np.empty_like(z)
    near = np.abs(2.0 * z) <= SERIES_CUTOFF
    if near.any():
        out[near] = _g_series(z[near])
    if (~near).any():
        zf = z[~near]
        with np.errstate(over='ignore', invalid='ignore'):
            out[~near] = _asymptotic_scaled_i(1, 2.0 * zf) * np.exp(2.0 * zf) / zf
    return out


def big_g(z: Number) -> ComplexPoint:
    """G(z) = I_1(2z)/z with G(0) = 1."""
    zc = complex(z)
    if not (math.isfinite(zc.real) and math.isfinite(zc.imag)):
        raise DomainError("G argument must be finite")
    if abs(2.0 * zc) > MAX_ARGUMENT:
        raise DomainError(f"|2z| exceeds the supported range {MAX_ARGUMENT:g}", z=abs(zc))
    return ComplexPoint.of(big_g_array(np.array([zc]))[0])


def log_big_g(z):
    """
    g(z) = log G(z) on an array near the positive real axis, without overflow.

    The branch is the one continuous from g(0) = 0; for |z| > 1 it is written
    as 2z + log(e^{-2z} G(z)), whose second term has a small phase.
    """
    z = np.asarray(z, dtype=complex)
    out = np.empty_like(z)
    size = np.abs(z)
    small = size <= 1.0
    mid = (~small) & (2.0 * size <= SERIES_CUTOFF)
    large = ~(small | mid)
    if small.any():
        out[small] = np.log1p(_g_series(z[small], minus_one=True))
    if mid.any():
        zm = z[mid]
        out[mid] = 2.0 * zm + np.log(_g_series(zm) * np.exp(-2.0 * zm))
    if large.any():
        zl = z[large]
        out[large] = 2.0 * zl + np.log(_asymptotic_scaled_i(1, 2.0 * zl) / zl)
    return out


def _log_g_reduced(z):
    """g(z) - 2z, the part of g left after removing its linear growth."""
    z = np.asarray(z, dtype=complex)
    out = np.empty_like(z)
    small = np.abs(2.0 * z) <= SERIES_CUTOFF
    if small.any():
        zs = z[small]
        out[small] = np.log(_g_series(zs) * np.exp(-2.0 * zs))
    if (~small).any():
        zl = z[~small]
        out[~small] = np.log(_asymptotic_scaled_i(1, 2.0 * zl) / zl)
    return out


def _cauchy_derivatives(func, u, order):
    """order-th derivative at real points u by the trapezoid rule on |z-u| = min(u/2, 1)."""
    u = np.atleast_1d(np.asarray(u, dtype=float))
    radius = np.minimum(u / 2.0, 1.0)
    phi = 2.0 * math.pi * np.arange(CAUCHY_NODES) / CAUCHY_NODES
    ring = np.exp(1j * phi)
    nodes = u[:, None] + radius[:, None] * ring[None, :]
    values = func(nodes.ravel()).reshape(nodes.shape)
    coeff = np.mean(values * np.exp(-1j * order * phi)[None, :], axis=1)
    return (math.factorial(order) * coeff / radius ** order).real


def g_derivative_array(u, order=0):
    """g^{(order)}(u) for an array of u > 0."""
    u = np.atleast_1d(np.asarray(u, dtype=float))
    if order == 0:
        return log_big_g(u).real
    out = np.empty_like(u)
    near = u <= 2.0
    if near.any():
        out[near] = _cauchy_derivatives(log_big_g, u[near], order)
    if (~near).any():
        far = u[~near]
        reduced = _cauchy_derivatives(_log_g_reduced, far, order)
        out[~near] = reduced + (2.0 if order == 1 else 0.0)
    return out


def g_reduced_derivative_array(u, order=0):
    """Derivatives of g(u) - 2u; accurate for large u where g itself is dominated by 2u."""
    u = np.atleast_1d(np.asarray(u, dtype=float))
    if order == 0:
        return _log_g_reduced(u).real
    return _cauchy_derivatives(_log_g_reduced, u, order)


def variant_derivative_array(u, order, variant):
    """Vectorized derivative of any variant; the kink point must be excluded by the caller."""
    variant = Variant(variant)
    u = np.atleast_1d(np.asarray(u, dtype=float))
    if variant in (Variant.H, Variant.H_STAR):
        base = g_derivative_array(u / 2.0, order) / 2.0 ** order
        subtract_from = 1.0
        slope = 1.0
    else:
        base = g_derivative_array(u, order)
        subtract_from = 1.0
        slope = 2.0
    if variant is Variant.G_STAR:
        above = u > subtract_from
    elif variant is Variant.H_STAR:
        above = u >= subtract_from
    else:
        return base
    if order == 0:
        return np.where(above, base - slope * u, base)
    if order == 1:
        return np.where(above, base - slope, base)
    return base


def g_deriv(req: GDerivativeRequest) -> float:
    """
    j-th derivative of g, g_*, h or h_* at u > 0.

    j = 0 returns the value. Derivatives use 64-node Cauchy quadrature on the
    circle of radius min(u/2, 1); g_* and h_* raise KinkError at u = 1 for j >= 1.
    """
    return float(variant_derivative_array(np.array([req.u]), int(req.order), req.variant)[0])


def g_value(u, order=0, variant=Variant.G):
    """Shorthand for g_deriv(GDerivativeRequest(u, order, variant))."""
    return g_deriv(GDerivativeRequest(float(u), order, variant))


# --- zeros on the imaginary axis -------------------------------------------------

def _g_on_imaginary_axis(y):
    # G(iy) = J_1(2y)/y is real
    return float(big_g_array(np.array([1j * y]))[0].real)


@lru_cache(maxsize=1)
def first_imaginary_zero_of_g() -> float:
    """
    Smallest y > 0 with G(iy) = 0.

    Sign bracketing on a 0.05 grid, then bisection to 1e-10. The value equals
    half the first positive zero of J_1.
    """
    step = 0.05
    lo = step
    f_lo = _g_on_imaginary_axis(lo)
    while lo < 10.0:
        hi = lo + step
        f_hi = _g_on_imaginary_axis(hi)
        if f_lo * f_hi <= 0.0:
            root = bisect(_g_on_imaginary_axis, lo, hi, xtol=1e-10)
            debug_logger.info(f"🔍 first zero of G(iy): y={root:.12f} "
                              f"(published ordinate {PUBLISHED_FIRST_ZERO_ORDINATE}, "
                              f"ratio {PUBLISHED_FIRST_ZERO_ORDINATE / root:.4f})")
            return float(root)
        lo, f_lo = hi, f_hi
    raise DomainError("no sign change of G(iy) found on (0, 10]")
