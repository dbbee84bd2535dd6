"""The beta-stable subordinator T_t, beta = alpha/2.

    Convention: E exp(-lam T_t) = exp(-t lam^beta), no extra constant.

    Unit-time density (Zolotarev/Kanter single integral):

        f(s) = beta / ((1-beta) pi) s^{-1/(1-beta)}
               int_0^pi A(theta) exp(-A(theta) s^{-beta/(1-beta)}) dtheta

        A(theta) = (sin(beta theta)^beta sin((1-beta) theta)^{1-beta} / sin theta)^{1/(1-beta)}

    and mu(t, s) = t^{-1/beta} f(s t^{-1/beta}).  The same A gives Kanter's
    sampler S = (A(U)/E)^{(1-beta)/beta}.
"""

import functools
import logging
import numpy as np
from scipy import integrate, optimize

from ..errors import RejectedInput, QuadratureError
from ..domain import quadrature

logger = logging.getLogger(__name__)

DENSITY_REL_TOL = 1e-10
QUAD_LIMIT = 200

# log(density) below this is treated as zero when placing subordination nodes.
NEGLIGIBLE_EXPONENT = 70.0


class SubordinatorParams(object):
    """ Index beta in (0, 1) of the subordinator. """

    def __init__(self, beta):
        beta = float(beta)
        if not 0.0 < beta < 1.0:
            raise RejectedInput("beta must lie in (0, 1), got %r" % (beta,))
        self.beta = beta

    @classmethod
    def from_model(cls, params):
        return cls(params.beta)

    def get_save_state(self):
        return {'beta': self.beta}

    def __repr__(self):
        return "SubordinatorParams(beta=%r)" % (self.beta,)


def _positive(name, value):
    value = float(value)
    if not value > 0:
        raise RejectedInput("%s must be positive, got %r" % (name, value))
    return value


def kanter_log_a(beta, theta):
    """ log A(theta) on (0, pi], with the theta -> 0 limit filled in. """
    theta = np.asarray(theta, dtype=float)
    small = theta < 1e-8
    th = np.where(small, 1.0, theta)
    log_a = (beta * np.log(np.sin(beta * th))
             + (1.0 - beta) * np.log(np.sin((1.0 - beta) * th))
             - np.log(np.sin(th))) / (1.0 - beta)
    limit = (beta * np.log(beta) + (1.0 - beta) * np.log(1.0 - beta)) / (1.0 - beta)
    return np.where(small, limit, log_a)


def _check(result, what):
    value, err = result[0], result[1]
    if len(result) > 3 and err > 1e-6 * abs(value) and err > 1e-250:
        raise QuadratureError("%s: %s" % (what, result[3]), err)
    return value


def _unit_density(beta, s):
    """ f(s) for one s > 0 at unit time. """
    x_log = -beta / (1.0 - beta) * np.log(s)

    def integrand(theta):
        log_a = kanter_log_a(beta, theta)
        return float(np.exp(log_a - np.exp(log_a + x_log)))

    # A e^{-A x} peaks where A(theta) = 1/x; A increases from A(0) to infinity.
    points = None
    top = np.pi - 1e-12
    if kanter_log_a(beta, 0.0) + x_log < 0 < kanter_log_a(beta, top) + x_log:
        points = [optimize.brentq(lambda th: float(kanter_log_a(beta, th)) + x_log, 1e-9, top)]
    result = integrate.quad(integrand, 0.0, np.pi, points=points, epsabs=0.0,
                            epsrel=DENSITY_REL_TOL, limit=QUAD_LIMIT, full_output=1)
    value = _check(result, "stable density at s=%g" % s)
    return beta / ((1.0 - beta) * np.pi) * np.exp(-np.log(s) / (1.0 - beta)) * value


def density(params, t, s):
    """ mu(t, s), vectorized over s. """
    t = _positive("t", t)
    s_arr = np.asarray(s, dtype=float)
    if np.any(s_arr <= 0):
        raise RejectedInput("density needs s > 0")
    scale = t ** (1.0 / params.beta)
    flat = [_unit_density(params.beta, v / scale) / scale for v in s_arr.ravel()]
    out = np.asarray(flat).reshape(s_arr.shape)
    return float(out) if out.ndim == 0 else out


def density_half(t, s):
    """ Closed form at beta = 1/2: t (4 pi)^{-1/2} s^{-3/2} exp(-t^2/(4s)). """
    s = np.asarray(s, dtype=float)
    return t / np.sqrt(4.0 * np.pi) * s ** -1.5 * np.exp(-t * t / (4.0 * s))


def cdf(params, t, s):
    """ P(T_t <= s) = (1/pi) int_0^pi exp(-A(theta) (s t^{-1/beta})^{-beta/(1-beta)}) dtheta """
    t = _positive("t", t)
    s = _positive("s", s)
    beta = params.beta
    x_log = -beta / (1.0 - beta) * np.log(s / t ** (1.0 / beta))
    result = integrate.quad(lambda th: float(np.exp(-np.exp(kanter_log_a(beta, th) + x_log))),
                            0.0, np.pi, epsabs=1e-13, epsrel=DENSITY_REL_TOL, limit=QUAD_LIMIT,
                            full_output=1)
    return _check(result, "stable cdf at s=%g" % s) / np.pi


def _split_point(params, t):
    return t ** (1.0 / params.beta)


def transform(params, t, lam):
    """ int_0^inf exp(-lam s) mu(t, s) ds, tail mapped by s = m/u. """
    t = _positive("t", t)
    lam = float(lam)
    if lam < 0:
        raise RejectedInput("lambda must be nonnegative")
    beta = params.beta
    m = _split_point(params, t)
    head = integrate.quad(lambda s: density(params, t, s) * np.exp(-lam * s), 0.0, m,
                          epsabs=0.0, epsrel=1e-10, limit=QUAD_LIMIT, full_output=1)

    # mu(t, m/u) m/u^2 ~ u^{beta-1} as u -> 0, carried by the algebraic weight.
    def tail(u):
        s = m / u
        return density(params, t, s) * np.exp(-lam * s) * m / (u * u) / u ** (beta - 1.0)

    rest = integrate.quad(tail, 0.0, 1.0, weight='alg', wvar=(beta - 1.0, 0.0),
                          epsabs=0.0, epsrel=1e-10, limit=QUAD_LIMIT, full_output=1)
    return _check(head, "Laplace head") + _check(rest, "Laplace tail")


def laplace_check(params, t, lam):
    """ |int exp(-lam s) mu(t,s) ds - exp(-t lam^beta)| """
    value = transform(params, t, lam)
    return abs(value - np.exp(-float(t) * float(lam) ** params.beta))


def sample(params, t, rng, size=None):
    """ Draws of T_t by Kanter's construction. """
    t = _positive("t", t)
    beta = params.beta
    theta = np.pi * (1.0 - rng.random(size))
    e = rng.standard_exponential(size)
    log_s = (1.0 - beta) / beta * (kanter_log_a(beta, theta) - np.log(e))
    return t ** (1.0 / beta) * np.exp(log_s)


def convolution_residual(params, t, t2, s):
    """ Relative residual of int_0^s mu(t, s-u) mu(t2, u) du against mu(t+t2, s). """
    t = _positive("t", t)
    t2 = _positive("t2", t2)
    s = _positive("s", s)
    result = integrate.quad(lambda u: density(params, t, s - u) * density(params, t2, u),
                            0.0, s, epsabs=0.0, epsrel=1e-9, limit=QUAD_LIMIT, full_output=1)
    value = _check(result, "convolution")
    direct = density(params, t + t2, s)
    return abs(value - direct) / direct


def negligible_below(params, t):
    """ s below which mu(t, s) < exp(-NEGLIGIBLE_EXPONENT) relative to its scale. """
    beta = params.beta
    a_min = np.exp(kanter_log_a(beta, 0.0))
    return t ** (1.0 / beta) * (a_min / NEGLIGIBLE_EXPONENT) ** ((1.0 - beta) / beta)


@functools.lru_cache(maxsize=256)
def _rule(beta, t, s_max, n, panel_width):
    params = SubordinatorParams(beta)
    lo = np.log(negligible_below(params, t))
    hi = np.log(s_max)
    if hi <= lo:
        raise RejectedInput("subordination cutoff below the density support")
    panels = max(int(np.ceil((hi - lo) / panel_width)), 1)
    v, w = quadrature.composite(np.linspace(lo, hi, panels + 1), n)
    s = np.exp(v)
    weights = w * s * density(params, t, s)
    logger.debug("subordination rule beta=%g t=%g: %d nodes on [%.3g, %.3g], mass %.12f",
                 beta, t, len(s), s[0], s[-1], np.sum(weights))
    return s, weights


def subordination_rule(params, t, s_max, n=16, panel_width=0.5):
    """ Nodes s_j and weights w_j with sum_j w_j g(s_j) ~ int_0^s_max g(s) mu(t,s) ds.

        Composite Gauss-Legendre in log s, starting where the density is
        negligible. Cached per (beta, t).
    """
    return _rule(params.beta, float(t), float(s_max), int(n), float(panel_width))
