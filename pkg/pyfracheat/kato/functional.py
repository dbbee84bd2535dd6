"""Kato functionals of drift fields and class-membership diagnostics.

    K^gamma_b(delta) = sup_{t, x} delta^{gamma/alpha} int_0^delta int_D
                         [s^{-gamma/alpha} + (delta-s)^{-gamma/alpha}]
                         (1 ^ rho(y)/(|x-y|+s^{1/alpha}))
                         s / (|x-y|+s^{1/alpha})^{d+alpha+1} |b(t +- s, y)| dy ds

    The sup over t runs over a probe list and the sup over x over a
    boundary-refined probe grid, so every value is a lower bound on the
    true sup. "t +- s" is the larger of both signs with b extended by zero
    outside (0, T].

    Membership verdicts are numerical proxies, never proofs.
"""

import logging
import numpy as np

from ..domain.model import as_points, point_norm, check_consistent
from ..domain import quadrature
from ..domain.grid import probe_grid
from ..errors import RejectedInput

logger = logging.getLogger(__name__)

# A class proxy accepts when the last value, or the fitted decay rate, clears this.
VERDICT_THRESHOLD = 0.05

TIME_LEVELS = 12
TIME_NODES = 8


def default_t_probes(params, count=16):
    return np.geomspace(params.horizon_T / 100.0, params.horizon_T, count)


def default_x_probes(domain):
    return probe_grid(domain, 9 if domain.dim == 1 else 4, 4)


def _levels_to_cover(domain, scale):
    return int(np.ceil(np.log2(2.0 * domain.radius / scale))) + 1


def _time_rules(delta, gamma, alpha, n=TIME_NODES, levels=TIME_LEVELS):
    """ Nodes and weights for int_0^delta [s^{-g/a} + (delta-s)^{-g/a}] F(s) ds, F ~ s^{-1/a}.

        Dyadic panels toward s = 0; Gauss-Jacobi on the innermost panel and,
        for the second term, on the panel touching s = delta.
    """
    g = gamma / alpha
    edges = delta * 2.0 ** -np.arange(levels + 1)[::-1]
    nodes = []
    weights = []
    for term in (0, 1):
        for k, (lo, hi) in enumerate(zip(np.concatenate([[0.0], edges[:-1]]), edges)):
            exp_lo = exp_hi = 0.0
            if k == 0:
                exp_lo = -(g + 1.0 / alpha) if term == 0 else -1.0 / alpha
            if term == 1 and hi == delta:
                exp_hi = -g
            s, w = quadrature.jacobi_rule(lo, hi, n, exp_lo, exp_hi)
            factor = s ** -g if term == 0 else (delta - s) ** -g
            nodes.append(s)
            weights.append(w * factor)
    return np.concatenate(nodes), np.concatenate(weights) * delta ** g


def _space_kernel(domain, alpha, s, x0, ys):
    """ (1 ^ rho(y)/(|x-y|+s^{1/a})) s/(|x-y|+s^{1/a})^{d+a+1} on the (time, space) grid. """
    d = domain.dim
    dist = point_norm(ys - x0)[None, :] + s[:, None] ** (1.0 / alpha)
    boundary = np.minimum(1.0, domain.rho(ys)[None, :] / dist)
    return boundary * s[:, None] / dist ** (d + alpha + 1.0)


def _zero_extended_norm(drift, horizon_T, times, ys):
    """ |b(times_i, y_j)| as (len(times), len(ys)), zero for times outside (0, T]. """
    out = np.zeros((len(times), len(ys)))
    valid = (times > 0) & (times <= horizon_T)
    if not np.any(valid):
        return out
    if drift.time_independent:
        out[valid] = drift.norm(0.0, ys)[None, :]
        return out
    tv = times[valid]
    grid_t = np.repeat(tv, len(ys))
    grid_y = np.tile(ys, (len(tv), 1))
    out[valid] = drift.norm(grid_t, grid_y).reshape(len(tv), len(ys))
    return out


def kato_functional(domain, params, b, gamma, delta, t_probes=None, x_probes=None, detail=False):
    """ K^gamma_b(delta); detail=True also returns the maximizing (t, x, sign). """
    check_consistent(params, domain)
    gamma = float(gamma)
    delta = float(delta)
    if not delta > 0:
        raise RejectedInput("delta must be positive")
    if gamma < 0:
        raise RejectedInput("gamma must be nonnegative")
    if b.is_zero:
        return (0.0, None) if detail else 0.0
    a = params.alpha
    if (gamma + 1.0) / a >= 1.0:
        # s^{-(gamma+1)/alpha} is not integrable at 0
        return (float('inf'), None) if detail else float('inf')
    t_probes = default_t_probes(params) if t_probes is None else np.asarray(t_probes, dtype=float)
    x_probes = default_x_probes(domain) if x_probes is None else as_points(x_probes, domain.dim)[0]
    s, ws = _time_rules(delta, gamma, a)
    scale = float(np.min(s)) ** (1.0 / a)
    T = params.horizon_T
    best, where = 0.0, None
    for x0 in x_probes:
        ys, wy = quadrature.star_rule(domain, x0, scale, n=8, n_angle=12,
                                      levels=_levels_to_cover(domain, scale))
        H = _space_kernel(domain, a, s, x0, ys) * ws[:, None] * wy[None, :]
        per_time = H @ b.norm(0.0, ys) if b.time_independent else None
        for t in t_probes:
            for sign in (1.0, -1.0):
                times = t + sign * s
                if per_time is not None:
                    value = float(np.sum(per_time[(times > 0) & (times <= T)]))
                else:
                    value = float(np.sum(H * _zero_extended_norm(b, T, times, ys)))
                if value > best:
                    best, where = value, (float(t), x0.copy(), sign)
    logger.debug("K^%g(%g) = %.6g over %d x-probes, %d t-probes", gamma, delta, best,
                 len(x_probes), len(t_probes))
    return (best, where) if detail else best


def hat_kato_functional(domain, params, f, t, x_probes=None, t_probes=None):
    """ sup_x int_D (1 ^ rho(y)/|x-y|)(|x-y|^{-(d+1-a)} ^ t^2 |x-y|^{-(d+a+1)}) |f(y)| dy.

        f is a drift field; a time-dependent one enters through its
        envelope over t_probes.
    """
    check_consistent(params, domain)
    t = float(t)
    if not t > 0:
        raise RejectedInput("t must be positive")
    if f.is_zero:
        return 0.0
    a = params.alpha
    d = domain.dim
    x_probes = default_x_probes(domain) if x_probes is None else as_points(x_probes, domain.dim)[0]
    t_probes = default_t_probes(params) if t_probes is None else t_probes
    scale = t ** (1.0 / a)
    best = 0.0
    for x0 in x_probes:
        ys, wy = quadrature.star_rule(domain, x0, min(scale, domain.radius), n=10, n_angle=16,
                                      levels=_levels_to_cover(domain, scale), origin_exponent=a - 2.0)
        r = point_norm(ys - x0)
        kernel = np.minimum(1.0, domain.rho(ys) / r) * np.minimum(r ** -(d + 1.0 - a),
                                                                   t * t * r ** -(d + a + 1.0))
        best = max(best, float(np.sum(wy * kernel * f.envelope(ys, t_probes))))
    return best


def alpha_minus_one_functional(domain, params, f, radius, x_probes=None, t_probes=None):
    """ sup_x int_{D cap B(x,r)} |f(y)| |x-y|^{-(d+1-a)} dy, the time-independent class proxy. """
    check_consistent(params, domain)
    radius = float(radius)
    if not radius > 0:
        raise RejectedInput("radius must be positive")
    if f.is_zero:
        return 0.0
    a = params.alpha
    d = domain.dim
    x_probes = default_x_probes(domain) if x_probes is None else as_points(x_probes, domain.dim)[0]
    t_probes = default_t_probes(params) if t_probes is None else t_probes
    levels = 8
    best = 0.0
    for x0 in x_probes:
        ys, wy = quadrature.star_rule(domain, x0, radius * 2.0 ** (1 - levels), n=10, n_angle=16,
                                      levels=levels, origin_exponent=a - 2.0)
        r = point_norm(ys - x0)
        inside = r <= radius * (1.0 + 1e-12)
        value = np.sum(wy[inside] * r[inside] ** -(d + 1.0 - a) * f.envelope(ys[inside], t_probes))
        best = max(best, float(value))
    return best


def lp_lq_membership(params, gamma, p, q):
    """ d/(alpha p) + 1/q < 1 - (1+gamma)/alpha, with 1/inf = 0. """
    for name, v in (('p', p), ('q', q)):
        if not v > 1:
            raise RejectedInput("%s must lie in (1, inf]" % name)
    a = params.alpha
    return params.dim / (a * p) + 1.0 / q < 1.0 - (1.0 + gamma) / a


def decay_exponent(grid, values):
    """ Least-squares slope of log K against log delta over the positive values. """
    grid = np.asarray(grid, dtype=float)
    values = np.asarray(values, dtype=float)
    keep = values > 0
    if np.sum(keep) < 2:
        return float('inf') if not np.any(values > 0) else float('nan')
    return float(np.polyfit(np.log(grid[keep]), np.log(values[keep]), 1)[0])


def decays(grid, values, threshold=VERDICT_THRESHOLD):
    """ Proxy verdict: the value at the finest grid point is below threshold,
        or the sequence is non-increasing toward 0 with fitted rate >= threshold.
    """
    order = np.argsort(grid)
    v = np.asarray(values, dtype=float)[order]
    if not np.all(np.isfinite(v)):
        return False
    if v[0] < threshold:
        return True
    monotone = np.all(np.diff(v) >= -1e-12 * np.abs(v[1:]))
    return bool(monotone and decay_exponent(np.asarray(grid)[order], v) >= threshold)


class KatoReport(object):
    """ Kato functional tables and proxy verdicts for one drift. """

    def __init__(self, delta_grid, gammas):
        self.delta_grid  = [float(d) for d in delta_grid]
        self.gammas      = [float(g) for g in gammas]
        self.K_values    = {}
        self.exponents   = {}
        self.verdicts    = {}
        self.hat_values  = []
        self.hat_verdict = None
        self.proxy_values  = []
        self.proxy_verdict = None
        self.threshold   = VERDICT_THRESHOLD

    @property
    def nesting_consistent(self):
        """ Membership for a larger gamma implies membership for every smaller one. """
        gs = sorted(self.gammas)
        return all(not self.verdicts[g2] or self.verdicts[g1]
                   for i, g1 in enumerate(gs) for g2 in gs[i + 1:])

    @property
    def chain_consistent(self):
        """ proxy member => hat member => K^0 member, where computed. """
        k0 = self.verdicts.get(0.0)
        links = []
        if self.proxy_verdict is not None and self.hat_verdict is not None:
            links.append(not self.proxy_verdict or self.hat_verdict)
        if self.hat_verdict is not None and k0 is not None:
            links.append(not self.hat_verdict or k0)
        return all(links)

    def rows(self):
        """ CSV rows: functional, parameter, grid value, value. """
        out = []
        for g in self.gammas:
            for d, k in zip(self.delta_grid, self.K_values[g]):
                out.append(('K', g, d, k))
        for d, h in zip(self.delta_grid, self.hat_values):
            out.append(('K_hat', '', d, h))
        for d, p in zip(self.delta_grid, self.proxy_values):
            out.append(('K_alpha_minus_one', '', d, p))
        return out

    def verdict_rows(self):
        out = [('K', g, self.exponents[g], self.verdicts[g]) for g in self.gammas]
        if self.hat_verdict is not None:
            out.append(('K_hat', '', decay_exponent(self.delta_grid, self.hat_values), self.hat_verdict))
        if self.proxy_verdict is not None:
            out.append(('K_alpha_minus_one', '', decay_exponent(self.delta_grid, self.proxy_values),
                        self.proxy_verdict))
        return out


def classify(domain, params, b, gamma_list, delta_grid, t_probes=None, x_probes=None):
    """ K^gamma(delta) tables, fitted decay rates and proxy verdicts.

        The hat-class functional is sampled at t = delta and the
        K^{alpha-1} proxy at radius delta^{1/alpha}.
    """
    if len(gamma_list) == 0 or len(delta_grid) == 0:
        raise RejectedInput("classify needs nonempty gamma and delta grids")
    report = KatoReport(delta_grid, gamma_list)
    t_probes = default_t_probes(params) if t_probes is None else t_probes
    for g in report.gammas:
        values = [kato_functional(domain, params, b, g, d, t_probes, x_probes) for d in report.delta_grid]
        report.K_values[g] = values
        report.exponents[g] = decay_exponent(report.delta_grid, values)
        report.verdicts[g] = decays(report.delta_grid, values)
        logger.info("Kato K^%g: exponent %.3g, member=%s", g, report.exponents[g], report.verdicts[g])
    report.hat_values = [hat_kato_functional(domain, params, b, d, x_probes, t_probes)
                         for d in report.delta_grid]
    report.hat_verdict = decays(report.delta_grid, report.hat_values)
    report.proxy_values = [alpha_minus_one_functional(domain, params, b, d ** (1.0 / params.alpha),
                                                      x_probes, t_probes) for d in report.delta_grid]
    report.proxy_verdict = decays(report.delta_grid, report.proxy_values)
    return report
