"""Closed-form comparison functions and 3-P ratio diagnostics.

    varrho(theta, t, x) = t^theta / (|x| + t^{1/alpha})^{d+alpha}
    xi(gamma, lam, t, x) = t^{-(d+gamma)/2} exp(-lam |x|^2 / t)
    q_hat(t, x, y)      = 1 ^ rho(x) / (|x-y| + t^{1/alpha})
    q_alpha(t, x, y)    = q_hat(t, x, y) q_hat(t, y, x)
    qD(t, x, y)         = q_alpha(t, x, y) varrho(1, t, x-y)

    Every function is vectorized: points may be single points or (n, d)
    arrays, times scalars or arrays broadcasting against the points.
"""

import numpy as np

from ..domain.model import as_points, point_norm, check_consistent
from ..domain.grid import random_points
from ..errors import RejectedInput


class ComparisonContext(object):
    """ The ambient (alpha, d, D) every comparison function refers to. """

    def __init__(self, params, domain):
        check_consistent(params, domain)
        self.params = params
        self.domain = domain

    @property
    def alpha(self):
        return self.params.alpha

    @property
    def dim(self):
        return self.params.dim


def _positive_time(t):
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise RejectedInput("times must be positive")
    return t


def _norms(ctx, u):
    pts, single = as_points(u, ctx.dim)
    return point_norm(pts), single


def _pair(ctx, x, y):
    px, sx = as_points(x, ctx.dim)
    py, sy = as_points(y, ctx.dim)
    return px, py, sx and sy


def _out(value, single):
    value = np.asarray(value)
    return float(value.reshape(-1)[0]) if single and value.size == 1 else value


def varrho(ctx, vartheta, t, x, dim=None):
    t = _positive_time(t)
    r, single = _norms(ctx, x)
    d = ctx.dim if dim is None else dim
    a = ctx.alpha
    return _out(np.power(t, vartheta) / np.power(r + np.power(t, 1.0 / a), d + a), single and t.ndim == 0)


def xi(ctx, gamma, lam, t, x):
    t = _positive_time(t)
    r, single = _norms(ctx, x)
    d = ctx.dim
    return _out(np.power(t, -(d + gamma) / 2.0) * np.exp(-lam * r * r / t), single and t.ndim == 0)


def q_hat(ctx, t, x, y, alpha=None):
    """ 1 ^ rho(x)/(|x-y| + t^{1/alpha}); alpha=2 gives the Gaussian version. """
    t = _positive_time(t)
    px, py, single = _pair(ctx, x, y)
    a = ctx.alpha if alpha is None else alpha
    scale = point_norm(px - py) + np.power(t, 1.0 / a)
    return _out(np.minimum(1.0, ctx.domain.rho(px) / scale), single and t.ndim == 0)


def q_alpha(ctx, t, x, y, alpha=None):
    return q_hat(ctx, t, x, y, alpha) * q_hat(ctx, t, y, x, alpha)


def qD(ctx, t, x, y):
    px, py, single = _pair(ctx, x, y)
    value = q_alpha(ctx, t, px, py) * varrho(ctx, 1.0, t, px - py)
    return _out(value, single and np.ndim(t) == 0)


def sharp_form_ratio(ctx, t, x, y):
    """ q_alpha against 1 ^ rho(x)rho(y)/(|x-y| + t^{1/alpha})^2. """
    t = _positive_time(t)
    px, py, single = _pair(ctx, x, y)
    scale = point_norm(px - py) + np.power(t, 1.0 / ctx.alpha)
    sharp = np.minimum(1.0, ctx.domain.rho(px) * ctx.domain.rho(py) / scale ** 2)
    return _out(q_alpha(ctx, t, px, py) / sharp, single and t.ndim == 0)


def three_p_q_ratio(ctx, t, s, x, y, z):
    px, py, single = _pair(ctx, x, y)
    pz, _ = as_points(z, ctx.dim)
    lhs = q_alpha(ctx, t, px, pz) * q_alpha(ctx, s, pz, py) / q_alpha(ctx, np.add(t, s), px, py)
    rhs = q_hat(ctx, t, pz, px) ** 2 + q_hat(ctx, s, pz, py) ** 2
    return _out(lhs / rhs, single and np.ndim(t) == 0)


def three_p_r_denominator(ctx, t, s, x, y, z, drop_second=False):
    """ (t ^ s)[q_hat(t,z,x)^2 varrho0(t,x-z) + q_hat(s,z,y)^2 varrho0(s,z-y)] """
    px, py, _ = _pair(ctx, x, y)
    pz, _ = as_points(z, ctx.dim)
    first = q_hat(ctx, t, pz, px) ** 2 * varrho(ctx, 0.0, t, px - pz)
    second = q_hat(ctx, s, pz, py) ** 2 * varrho(ctx, 0.0, s, pz - py)
    if drop_second:
        second = 0.0
    return np.minimum(t, s) * (first + second)


def three_p_r_ratio(ctx, t, s, x, y, z, rD_eval, drop_second=False):
    """ Generalized 3-P ratio for the spectral kernel r^D. """
    px, py, single = _pair(ctx, x, y)
    pz, _ = as_points(z, ctx.dim)
    lhs = rD_eval.rD(t, px, pz) * rD_eval.rD(s, pz, py) / rD_eval.rD(np.add(t, s), px, py)
    return _out(lhs / three_p_r_denominator(ctx, t, s, px, py, pz, drop_second), single and np.ndim(t) == 0)


def check_remark_configuration(ctx, t, s, x, y, z):
    t = np.asarray(t, dtype=float)
    s = np.asarray(s, dtype=float)
    if np.any(s <= t / 4.0) or np.any(s >= 3.0 * t / 4.0):
        raise RejectedInput("need t/4 < s < 3t/4")
    px, py, _ = _pair(ctx, x, y)
    pz, _ = as_points(z, ctx.dim)
    spread = point_norm(px - pz) + point_norm(pz - py)
    if np.any(2.0 * point_norm(px - py) < spread * (1.0 - 1e-12)):
        raise RejectedInput("need 2|x-y| >= |x-z| + |z-y|")


def remark_pp_ratio(ctx, t, s, x, y, z, rD_eval):
    """ The classical 3-P ratio r(t+s,x,y)[r(t,x,z) + r(s,z,y)] / [r(t,x,z) r(s,z,y)]. """
    check_remark_configuration(ctx, t, s, x, y, z)
    px, py, single = _pair(ctx, x, y)
    pz, _ = as_points(z, ctx.dim)
    r_xz = rD_eval.rD(t, px, pz)
    r_zy = rD_eval.rD(s, pz, py)
    value = rD_eval.rD(np.add(t, s), px, py) * (r_xz + r_zy) / (r_xz * r_zy)
    return _out(value, single and np.ndim(t) == 0)


def varrho_product_ratio(ctx, t, s, x, y, z):
    """ varrho1(t,x-z) varrho1(s,z-y) / varrho1(t+s,x-y) against
        (t ^ s)(varrho0(t,x-z) + varrho0(s,z-y)).
    """
    px, py, single = _pair(ctx, x, y)
    pz, _ = as_points(z, ctx.dim)
    lhs = varrho(ctx, 1.0, t, px - pz) * varrho(ctx, 1.0, s, pz - py) / varrho(ctx, 1.0, np.add(t, s), px - py)
    rhs = np.minimum(t, s) * (varrho(ctx, 0.0, t, px - pz) + varrho(ctx, 0.0, s, pz - py))
    return _out(lhs / rhs, single and np.ndim(t) == 0)


def hat_comparability(ctx, t, s, x, y, z):
    """ (q_hat(t,z,x)/q_hat(s,z,y), varrho0(t,x-z)/varrho0(s,z-y)) """
    px, py, _ = _pair(ctx, x, y)
    pz, _ = as_points(z, ctx.dim)
    hats = q_hat(ctx, t, pz, px) / q_hat(ctx, s, pz, py)
    rhos = varrho(ctx, 0.0, t, px - pz) / varrho(ctx, 0.0, s, pz - py)
    return hats, rhos


def sweep_tuples(ctx, rng, n, times, rho_min=1e-3):
    """ Seeded (t, s, x, y, z) tuples over boundary-biased interior points. """
    times = np.asarray(times, dtype=float)
    return {
        't': rng.choice(times, n),
        's': rng.choice(times, n),
        'x': random_points(rng, ctx.domain, n, rho_min=rho_min),
        'y': random_points(rng, ctx.domain, n, rho_min=rho_min),
        'z': random_points(rng, ctx.domain, n, rho_min=rho_min),
    }


def gradient_scale(ctx, t, x, y):
    """ q^D(t,x,y) / (rho(x) ^ (|x-y| + t^{1/alpha})), the size of a kernel's x-gradient. """
    px, py, single = _pair(ctx, x, y)
    front = np.minimum(ctx.domain.rho(px), point_norm(px - py) + np.power(t, 1.0 / ctx.alpha))
    return _out(qD(ctx, t, px, py) / front, single and np.ndim(t) == 0)


def outer(fn, ctx, t, xs, ys):
    """ fn(ctx, t, x_i, y_j) as an (len(xs), len(ys)) matrix for a pairwise fn. """
    px, _ = as_points(xs, ctx.dim)
    py, _ = as_points(ys, ctx.dim)
    n, m = px.shape[0], py.shape[0]
    values = fn(ctx, t, np.repeat(px, m, axis=0), np.tile(py, (n, 1)))
    return np.asarray(values).reshape(n, m)
