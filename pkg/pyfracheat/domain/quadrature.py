"""Quadrature rules on the model domains.

    All rules return (points, weights) with points shaped (n, dim), so an
    integral over D is weights @ f(points).

    - composite Gauss-Legendre on the interval, refined around given
      centers and geometrically toward the endpoints,
    - polar tensor rules on balls (Gauss-Legendre in radius, trapezoid in
      angle, Gauss-Legendre in cos(polar) for d=3),
    - star rules centred at a point, for integrands peaked there,
    - Gauss-Jacobi rules for one-dimensional endpoint singularities.
"""

import functools
import numpy as np
from numpy.polynomial import legendre
from scipy import special

from .model import as_points


@functools.lru_cache(maxsize=64)
def _leggauss(n):
    return legendre.leggauss(n)


@functools.lru_cache(maxsize=128)
def _jacobi(n, a, b):
    return special.roots_jacobi(n, a, b)


def gauss_legendre(lo, hi, n):
    u, w = _leggauss(n)
    half = 0.5 * (hi - lo)
    return lo + half * (u + 1.0), half * w


def jacobi_rule(lo, hi, n, exp_lo=0.0, exp_hi=0.0):
    """ Nodes and effective weights on (lo, hi) for f ~ (r-lo)^exp_lo (hi-r)^exp_hi.

        The returned weights already divide out the singular factor, so
        sum(w * f(r)) approximates the integral of f itself.
    """
    if exp_lo == 0.0 and exp_hi == 0.0:
        return gauss_legendre(lo, hi, n)
    u, w = _jacobi(n, float(exp_hi), float(exp_lo))
    half = 0.5 * (hi - lo)
    r = lo + half * (u + 1.0)
    scale = half ** (1.0 + exp_lo + exp_hi)
    weights = scale * w / (np.power(r - lo, exp_lo) * np.power(hi - r, exp_hi))
    return r, weights


def composite(breaks, n):
    """ Composite Gauss-Legendre over consecutive breakpoints. """
    breaks = np.unique(np.asarray(breaks, dtype=float))
    nodes = []
    weights = []
    for lo, hi in zip(breaks[:-1], breaks[1:]):
        if hi - lo <= 1e-15:
            continue
        r, w = gauss_legendre(lo, hi, n)
        nodes.append(r)
        weights.append(w)
    return np.concatenate(nodes), np.concatenate(weights)


def refined_breaks(lo, hi, centers=(), scales=(), levels=6, boundary_levels=6, panels=0):
    """ Breakpoints on [lo, hi] doubling outward from each center and
        halving toward both ends, on top of `panels` uniform panels.
    """
    pts = [lo, hi] + list(np.linspace(lo, hi, panels + 1)[1:-1])
    width = hi - lo
    for k in range(1, boundary_levels + 1):
        pts.append(lo + width * 2.0 ** (-k - 1))
        pts.append(hi - width * 2.0 ** (-k - 1))
    for c, s in zip(np.atleast_1d(centers), np.atleast_1d(scales)):
        pts.append(c)
        for j in range(levels):
            pts.append(c - s * 2.0 ** j)
            pts.append(c + s * 2.0 ** j)
    pts = np.asarray(pts)
    return pts[(pts >= lo) & (pts <= hi)]


def interval_rule(n=12, centers=(), scales=(), levels=6, boundary_levels=6, panels=0):
    breaks = refined_breaks(0.0, 1.0, centers, scales, levels, boundary_levels, panels)
    r, w = composite(breaks, n)
    return r.reshape(-1, 1), w


def _sphere_directions(dim, n_angle):
    """ Unit directions with weights summing to the sphere area. """
    if dim == 1:
        return np.array([[-1.0], [1.0]]), np.ones(2)
    if dim == 2:
        theta = 2.0 * np.pi * np.arange(n_angle) / n_angle
        dirs = np.stack([np.cos(theta), np.sin(theta)], axis=1)
        return dirs, np.full(n_angle, 2.0 * np.pi / n_angle)
    cos_t, w_t = _leggauss(n_angle)
    n_phi = 2 * n_angle
    phi = 2.0 * np.pi * np.arange(n_phi) / n_phi
    sin_t = np.sqrt(1.0 - cos_t ** 2)
    dirs = np.stack([np.outer(sin_t, np.cos(phi)).ravel(),
                     np.outer(sin_t, np.sin(phi)).ravel(),
                     np.repeat(cos_t, n_phi)], axis=1)
    weights = np.repeat(w_t, n_phi) * (2.0 * np.pi / n_phi)
    return dirs, weights


def ball_rule(domain, n=12, n_angle=None, boundary_levels=6, radial_breaks=()):
    """ Polar tensor rule over the whole ball. """
    d = domain.dim
    if n_angle is None:
        n_angle = 2 * n if d == 2 else n
    R = domain.radius
    breaks = refined_breaks(0.0, R, (), (), 0, boundary_levels)
    breaks = np.concatenate([breaks, [b for b in radial_breaks if 0.0 < b < R]])
    r, wr = composite(breaks, n)
    wr = wr * r ** (d - 1)
    dirs, wd = _sphere_directions(d, n_angle)
    points = domain.center + (r[:, None, None] * dirs[None, :, :]).reshape(-1, d)
    weights = (wr[:, None] * wd[None, :]).ravel()
    return points, weights


def domain_rule(domain, n=12, centers=(), scales=(), levels=6, boundary_levels=6, panels=0):
    """ Rule over D refined around centers (interval) or around their radii (balls). """
    if domain.is_interval:
        cs = [float(np.asarray(c).ravel()[0]) for c in centers]
        return interval_rule(n, cs, scales, levels, boundary_levels, panels)
    radii = list(np.linspace(0.0, domain.radius, panels + 1)[1:-1])
    for c, s in zip(centers, scales):
        rc = float(np.linalg.norm(np.asarray(c, dtype=float).ravel() - domain.center))
        radii.append(rc)
        for j in range(levels):
            radii.append(rc - s * 2.0 ** j)
            radii.append(rc + s * 2.0 ** j)
    return ball_rule(domain, n, None, boundary_levels, radii)


def star_rule(domain, x, scale, n=10, n_angle=16, levels=6, boundary_levels=5, origin_exponent=0.0):
    """ Rule over D in polar coordinates centred at the interior point x.

        Radial panels double outward from scale and halve toward the exit
        point of each ray. origin_exponent is the power of r that the
        radial integrand (Jacobian included) behaves like at r = 0; the
        first panel then uses a matching Gauss-Jacobi rule.
    """
    pts, _ = as_points(x, domain.dim)
    x0 = pts[0]
    d = domain.dim
    dirs, wd = _sphere_directions(d, n_angle)
    exits = domain.exit_distance(x0, dirs)[0]
    all_points = []
    all_weights = []
    for direction, w_dir, L in zip(dirs, wd, exits):
        if L <= 0:
            continue
        breaks = [0.0, L]
        for j in range(levels):
            breaks.append(scale * 2.0 ** j)
        for k in range(1, boundary_levels + 1):
            breaks.append(L - L * 2.0 ** (-k))
        breaks = np.unique(np.asarray(breaks))
        breaks = breaks[(breaks >= 0.0) & (breaks <= L)]
        r_first, w_first = jacobi_rule(breaks[0], breaks[1], n, exp_lo=origin_exponent)
        r_rest, w_rest = composite(breaks[1:], n) if len(breaks) > 2 else (np.empty(0), np.empty(0))
        r = np.concatenate([r_first, r_rest])
        w = np.concatenate([w_first, w_rest]) * r ** (d - 1) * w_dir
        all_points.append(x0 + r[:, None] * direction[None, :])
        all_weights.append(w)
    return np.concatenate(all_points), np.concatenate(all_weights)
