# core/asymconst.py
"""
Constants of the large-deviation expansions.

For 1/2 < sigma < 1 the Mellin-type integrals

    g_{n,j}(sigma) = int_0^inf g^{(j)}(u) u^{j - 1/sigma - 1} (log u)^n du

and for sigma = 1 the same integrals of g_* with u^{j-2} are evaluated by
splitting at u = 1: a short-distance power series below u = 0.01, adaptive
quadrature in w = log u, and closed forms for the large-u asymptotics of g.
"""

import logging
import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, Tuple

import numpy as np
from scipy.integrate import IntegrationWarning, quad

from core.errors import ConvergenceError, DomainError
from core.specfun import Variant, g_reduced_derivative_array, variant_derivative_array

debug_logger = logging.getLogger('satotate_debug')

EULER_GAMMA = 0.57721566490153286061
SIGMA_ONE = 1.0
MIN_SIGMA = 0.55
MAX_N = 2
MAX_J = 2

SERIES_EDGE = 0.01
W_MAX = 80.0
_QUAD = dict(epsabs=1e-13, epsrel=1e-12, limit=400)
ACCEPTED_QUAD_ERROR = 1e-8
PARTITION_LEVELS = 8

# log G(u) = u^2/2 - u^4/24 + u^6/144 + O(u^8)
_G_SERIES = ((1, 0.5), (2, -1.0 / 24.0), (3, 1.0 / 144.0))
_HALF_LOG_4PI = 0.5 * math.log(4.0 * math.pi)

# large-u form: linear * u + log_coef * log u + constant
_ASYMPTOTICS = {
    Variant.G: (2.0, -1.5, -_HALF_LOG_4PI),
    Variant.G_STAR: (0.0, -1.5, -_HALF_LOG_4PI),
    Variant.H: (1.0, -1.5, 1.5 * math.log(2.0) - _HALF_LOG_4PI),
    Variant.H_STAR: (0.0, -1.5, 1.5 * math.log(2.0) - _HALF_LOG_4PI),
}


def _partition(lo, hi):
    """Edges of [lo, hi] split at +-1, +-2, +-4, ..., so each piece sees one scale of w."""
    edges = {lo, hi}
    for k in range(PARTITION_LEVELS):
        for edge in (2.0 ** k, -(2.0 ** k)):
            if lo < edge < hi:
                edges.add(edge)
    return sorted(edges)


def _integrate(func, lo, hi, label):
    """
    scipy quad over a geometric partition of [lo, hi].

    An IntegrationWarning on a piece goes to the debug log; when the error
    estimate of that piece is also above ACCEPTED_QUAD_ERROR it becomes a
    ConvergenceError.
    """
    total = err = 0.0
    edges = _partition(lo, hi)
    for left, right in zip(edges, edges[1:]):
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter('always', IntegrationWarning)
            value, piece_err = quad(func, left, right, **_QUAD)
        for item in caught:
            if not issubclass(item.category, IntegrationWarning):
                warnings.warn(item.message, item.category)
                continue
            debug_logger.warning(f"⚠️ {label}: quad on [{left:g}, {right:g}] reported "
                                 f"'{str(item.message).splitlines()[0]}' (err {piece_err:.1e})")
            if piece_err > ACCEPTED_QUAD_ERROR * max(1.0, abs(value)):
                raise ConvergenceError(f"{label}: quadrature on [{left:g}, {right:g}] did not converge",
                                       err=piece_err)
        total += value
        err += piece_err
    return total, err


def _power_log_below(e, n, edge):
    """int_0^edge u^e (log u)^n du for e > -1."""
    m = e + 1.0
    log_edge = math.log(edge)
    total = 0.0
    for k in range(n + 1):
        total += ((-1) ** k * math.factorial(n) / math.factorial(n - k)
                  * log_edge ** (n - k) / m ** (k + 1))
    return edge ** m * total


def _power_log_above(b, n):
    """int_1^inf u^b (log u)^n du for b < -1."""
    if not b < -1.0:
        raise DomainError("divergent tail integral", exponent=b)
    return math.factorial(n) / (-b - 1.0) ** (n + 1)


def _reduced_derivative(variant, u, j):
    """Derivative j of the variant minus its linear growth, for u >= 1."""
    if variant in (Variant.H, Variant.H_STAR):
        return g_reduced_derivative_array(u / 2.0, j) / 2.0 ** j
    return g_reduced_derivative_array(u, j)


def mellin_integral(variant, j, a, n):
    """
    int_0^inf F^{(j)}(u) u^a (log u)^n du for F one of g, g_*, h, h_*.

    Returns (value, error estimate). The exponent a must make both ends
    converge; the asymptotic pieces are integrated in closed form.
    """
    variant = Variant(variant)
    h_like = variant in (Variant.H, Variant.H_STAR)
    linear, log_coef, constant = _ASYMPTOTICS[variant]

    # u < SERIES_EDGE
    below = 0.0
    for k, c in _G_SERIES:
        if 2 * k < j:
            continue
        coeff = c / 4.0 ** k if h_like else c
        coeff *= math.factorial(2 * k) / math.factorial(2 * k - j)
        below += coeff * _power_log_below(2 * k - j + a, n, SERIES_EDGE)

    # SERIES_EDGE <= u <= 1
    def middle(w):
        u = math.exp(w)
        return float(variant_derivative_array(np.array([u]), j, variant)[0]) * u ** (a + 1.0) * w ** n

    mid, mid_err = _integrate(middle, math.log(SERIES_EDGE), 0.0, f"{variant.value} j={j} inner")

    # u >= 1: closed-form asymptotics plus a decaying remainder
    closed = 0.0
    if j == 0:
        if linear:
            closed += linear * _power_log_above(a + 1.0, n)
        closed += log_coef * _power_log_above(a, n + 1)
        closed += constant * _power_log_above(a, n)
    else:
        if j == 1 and linear:
            closed += linear * _power_log_above(a, n)
        closed += log_coef * (-1) ** (j - 1) * math.factorial(j - 1) * _power_log_above(a - j, n)

    def remainder(w):
        u = math.exp(w)
        value = float(_reduced_derivative(variant, np.array([u]), j)[0])
        if j == 0:
            value -= log_coef * w + constant
        else:
            value -= log_coef * (-1) ** (j - 1) * math.factorial(j - 1) / u ** j
        return value * u ** (a + 1.0) * w ** n

    rest, rest_err = _integrate(remainder, 0.0, W_MAX, f"{variant.value} j={j} remainder")
    value = below + mid + closed + rest
    return value, mid_err + rest_err


def _check_sigma(sigma):
    if sigma == SIGMA_ONE:
        return
    if not (MIN_SIGMA <= sigma < 1.0):
        raise DomainError(f"constants are computed for sigma in [{MIN_SIGMA}, 1) or sigma = 1",
                          sigma=sigma)


@lru_cache(maxsize=256)
def g_integral(sigma, n, j):
    """
    The constant g_{n,j}(sigma) (or g_{n,j} for sigma = 1) with its error estimate.

    Args:
        sigma (float): in [0.55, 1); the value 1.0 selects the g_* integrals
        n (int): power of log u, 0..2
        j (int): derivative order, 0..2

    Returns:
        tuple: (value, err)
    """
    _check_sigma(sigma)
    if not (0 <= n <= MAX_N and 0 <= j <= MAX_J):
        raise DomainError(f"g_{{n,j}} is tabulated for n <= {MAX_N}, j <= {MAX_J}", n=n, j=j)
    if sigma == SIGMA_ONE:
        value, err = mellin_integral(Variant.G_STAR, j, j - 2.0, n)
    else:
        value, err = mellin_integral(Variant.G, j, j - 1.0 / sigma - 1.0, n)
    debug_logger.debug(f"∫ g_{n},{j}(sigma={sigma}) = {value:.15g} (err {err:.1e})")
    return value, err


def y_route_integrals(sigma):
    """
    (a_0, a_1) = (int g(y^{-s}) dy, int g(y^{-s}) log y dy) computed in y directly.

    Uses g_* for sigma = 1. Serves as an independent route to g_{0,1} and g_{1,0}.
    """
    _check_sigma(sigma)
    variant = Variant.G_STAR if sigma == SIGMA_ONE else Variant.G
    linear, log_coef, constant = _ASYMPTOTICS[variant]
    edge_t = -math.log(SERIES_EDGE) / sigma
    out = []
    for m in (0, 1):
        # y >= 1 (u <= 1), t = log y
        def upper(t):
            u = math.exp(-sigma * t)
            return float(variant_derivative_array(np.array([u]), 0, variant)[0]) * math.exp(t) * t ** m

        near, err_near = _integrate(upper, 0.0, edge_t, f"y-route m={m} near")
        far = 0.0
        for k, c in _G_SERIES:
            beta = 2.0 * k * sigma - 1.0
            decay = math.exp(-beta * edge_t)
            far += c * (decay / beta if m == 0 else decay * (edge_t / beta + 1.0 / beta ** 2))

        # 0 < y <= 1 (u >= 1): linear y^{-sigma}, log and constant parts in closed form
        closed = (log_coef * (-sigma) * (-1) ** (m + 1) * math.factorial(m + 1)
                  + constant * (-1) ** m * math.factorial(m))
        if linear:
            closed += linear * (-1) ** m * math.factorial(m) / (1.0 - sigma) ** (m + 1)

        def lower(t):
            u = math.exp(-sigma * t)
            value = float(_reduced_derivative(variant, np.array([u]), 0)[0])
            value -= log_coef * (-sigma * t) + constant
            return value * math.exp(t) * t ** m

        rest, err_rest = _integrate(lower, -W_MAX / sigma, 0.0, f"y-route m={m} far")
        out.append((near + far + closed + rest, err_near + err_rest))
    return out[0], out[1]


@dataclass(frozen=True)
class ConstantsTable:
    sigma: float
    entries: Dict[Tuple[int, int], Tuple[float, float]] = field(repr=False)
    a0: float
    a1_integral: float
    derived: Dict[str, float]

    def g(self, n, j):
        return self.entries[(n, j)][0]

    def error(self, n, j):
        return self.entries[(n, j)][1]

    @property
    def is_sigma_one(self):
        return self.sigma == SIGMA_ONE

    def a1_sigma(self, x):
        """A_{1,sigma}(x) for sigma < 1."""
        return self.derived['A1_slope'] * x + self.derived['A1_intercept']

    def b1_sigma(self, x):
        """B_{1,sigma}(x) for sigma < 1."""
        return self.derived['B1_slope'] * x + self.derived['B1_intercept']

    def as_dict(self):
        return {
            'sigma': self.sigma,
            'g': {f"{n},{j}": {'value': v, 'err': e} for (n, j), (v, e) in sorted(self.entries.items())},
            'a0': self.a0,
            'a1': self.a1_integral,
            **self.derived,
        }


@lru_cache(maxsize=32)
def expansion_constants(sigma):
    """Assemble every constant of the tail and saddle expansions from the g_{n,j} entries."""
    _check_sigma(sigma)
    entries = {(n, j): g_integral(sigma, n, j) for n in range(MAX_N + 1) for j in range(MAX_J + 1)}
    g = {key: value for key, (value, _) in entries.items()}
    (a0, _), (a1, _) = y_route_integrals(sigma)

    if sigma == SIGMA_ONE:
        b1 = -0.125 * g[0, 1] ** 2 - 0.5 * g[1, 1]
        c1 = g[1, 1] - g[1, 0]
        derived = {
            'A': 0.5 * g[0, 1] - math.log(2.0),
            'A_via_a0': 1.0 + 0.5 * a0 - math.log(2.0),
            'a1': b1 + 0.5 * g[0, 1] + 0.5 * c1,
            'a1_via_a': -0.125 * a0 ** 2 + 0.5 * a1 + 0.5,
            'b1': b1,
            'c1': c1,
        }
    else:
        if not g[0, 1] > 0.0:
            raise DomainError("g_{0,1}(sigma) must be positive to assemble A(sigma)", sigma=sigma)
        ratio = (1.0 - sigma) / sigma * g[0, 1]
        exponent = sigma / (1.0 - sigma)
        big_b = ratio ** -exponent
        derived = {
            'A': (1.0 - sigma) * big_b,
            'B': big_b,
            'c0': (1.0 - sigma) * g[0, 1],
            'A1_slope': exponent,
            'A1_intercept': -exponent * math.log(ratio) - g[1, 0] / (sigma * g[0, 1]),
            'A1_intercept_via_a': -exponent * math.log((1.0 - sigma) / sigma * a0) + sigma * a1 / a0,
            'B1_slope': exponent,
            'B1_intercept': math.log(big_b) - g[1, 1] / g[0, 1],
        }
    debug_logger.info(f"📐 expansion constants sigma={sigma}: "
                      + ", ".join(f"{k}={v:.10g}" for k, v in derived.items()))
    return ConstantsTable(sigma=sigma, entries=entries, a0=a0, a1_integral=a1, derived=derived)


def crosscheck_lamzouri():
    """
    A at sigma = 1 by two routes: 1 + a_0/2 - log 2 from g_*, and
    1 + int h_*(u)/u^2 du from h(u) = g(u/2).

    Returns:
        tuple: (A_via_g, A_via_h, intermediate), where intermediate is
        1/2 int_{1/2}^1 (h_*(2u) - g_*(u))/u^2 du and should equal -log 2
    """
    table = expansion_constants(SIGMA_ONE)
    via_g = table.derived['A_via_a0']
    h_part, _ = mellin_integral(Variant.H_STAR, 0, -2.0, 0)
    via_h = 1.0 + h_part

    def gap(u):
        hs = float(variant_derivative_array(np.array([2.0 * u]), 0, Variant.H_STAR)[0])
        gs = float(variant_derivative_array(np.array([u]), 0, Variant.G_STAR)[0])
        return (hs - gs) / (u * u)

    half_integral, _ = _integrate(gap, 0.5, 1.0, "h_* vs g_* gap")
    intermediate = 0.5 * half_integral
    debug_logger.info(f"🔍 two-route A: via g {via_g:.12f}, via h {via_h:.12f}, "
                      f"intermediate {intermediate:.12f}")
    return via_g, via_h, intermediate


def cgf_asymptotic(sigma, kappa, j=0, terms=2):
    """
    Prediction of f^{(j)}(kappa) from the first `terms` g_{n,j} constants.

    sigma < 1: kappa^{1/sigma - j}/log kappa * sum_n g_{n,j}/(log kappa)^n.
    sigma = 1 adds 2 kappa (log log kappa + gamma) for j = 0 and
    2 (log log kappa + gamma) for j = 1.
    """
    if kappa <= math.e:
        raise DomainError("the expansion needs kappa > e", kappa=kappa)
    if not (1 <= terms <= MAX_N + 1):
        raise DomainError(f"terms must lie in [1, {MAX_N + 1}]", terms=terms)
    log_k = math.log(kappa)
    series = sum(g_integral(sigma, n, j)[0] / log_k ** n for n in range(terms))
    value = kappa ** (1.0 / sigma - j) / log_k * series
    if sigma == SIGMA_ONE:
        loglog = math.log(log_k) + EULER_GAMMA
        if j == 0:
            value += 2.0 * kappa * loglog
        elif j == 1:
            value += 2.0 * loglog
    return value


def scaled_slope(sigma, kappa, slope):
    """
    (f'(kappa) - singular part) log kappa / kappa^{1/sigma - 1}, which tends to g_{0,1}.

    The singular part is 2(log log kappa + gamma) at sigma = 1 and zero below.
    """
    if kappa <= math.e:
        raise DomainError("the expansion needs kappa > e", kappa=kappa)
    log_k = math.log(kappa)
    if sigma == SIGMA_ONE:
        slope -= 2.0 * (math.log(log_k) + EULER_GAMMA)
    return slope * log_k / kappa ** (1.0 / sigma - 1.0)


def tail_asymptotic(sigma, tau, terms=2):
    """
    log Phi(sigma, tau) from the closed-form expansions.

    sigma < 1: -A tau^{1/(1-sigma)} (log tau)^{sigma/(1-sigma)} (1 + A_1(log log tau)/log tau).
    sigma = 1: -(e^{t-A}/t)(1 + a_1/t) with t = exp(tau/2 - gamma).
    """
    table = expansion_constants(SIGMA_ONE if sigma == SIGMA_ONE else sigma)
    if sigma == SIGMA_ONE:
        t = math.exp(tau / 2.0 - EULER_GAMMA)
        correction = 1.0 + (table.derived['a1'] / t if terms >= 2 else 0.0)
        return -math.exp(t - table.derived['A']) / t * correction
    if tau <= math.e:
        raise DomainError("the expansion needs tau > e", tau=tau)
    log_t = math.log(tau)
    exponent = 1.0 / (1.0 - sigma)
    correction = 1.0 + (table.a1_sigma(math.log(log_t)) / log_t if terms >= 2 else 0.0)
    return -table.derived['A'] * tau ** exponent * log_t ** (sigma * exponent) * correction
