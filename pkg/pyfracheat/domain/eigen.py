"""Dirichlet eigenpairs of the Laplacian (generator Delta) on the model domains.

    Interval: lambda_n = n^2 pi^2, phi_n = sqrt(2) sin(n pi x).
    Balls:    Fourier-Bessel modes. d=2 uses J_m with cos/sin angular
              parts, d=3 uses spherical Bessel j_l times real spherical
              harmonics. Zeros are bracketed on a grid and refined with
              brentq.
"""

import logging
import numpy as np
from scipy import optimize, special

from .model import as_points, BALL
from . import quadrature
from ..errors import RejectedInput, UnsupportedDomain

logger = logging.getLogger(__name__)

ZERO_SCAN_STEP = 0.25
ZERO_TOL = 1e-13

# d/dx and d/dy through the ladder operators d+ = d/dx + i d/dy and d- = d/dx - i d/dy
CARTESIAN = (((0.5, '+'), (0.5, '-')),
             ((-0.5j, '+'), (0.5j, '-')),
             ((1.0, 'z'),))

CHUNK = 4096


def bessel_zeros(nu, z_max):
    """ All positive zeros of J_nu below z_max, ascending. """
    lo = max(float(nu), 0.1)
    if lo >= z_max:
        return np.empty(0)
    grid = np.arange(lo, z_max + ZERO_SCAN_STEP, ZERO_SCAN_STEP)
    vals = special.jv(nu, grid)
    idx = np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)[0]
    zeros = [optimize.brentq(lambda z: special.jv(nu, z), grid[i], grid[i + 1], xtol=ZERO_TOL)
             for i in idx]
    zeros = np.asarray(zeros)
    return zeros[zeros <= z_max]


def _log_factorial_ratio(l, m):
    """ log((l-m)!/(l+m)!) """
    return special.gammaln(l - m + 1.0) - special.gammaln(l + m + 1.0)


class EigenBasis(object):
    """ The first `count` Dirichlet eigenpairs, ordered by eigenvalue. """

    def __init__(self, domain, eigenvalues):
        self.domain      = domain
        self.eigenvalues = np.asarray(eigenvalues, dtype=float)
        self._integrals  = None
        self._sup        = None

    @property
    def count(self):
        return len(self.eigenvalues)

    def values(self, x):
        """ phi_n(x) as an (n_points, count) matrix. """
        raise NotImplementedError

    def gradients(self, x):
        """ grad phi_n(x) as (n_points, count, dim). """
        raise NotImplementedError

    def hessians(self, x):
        """ Hessians of phi_n(x) as (n_points, count, dim, dim). """
        raise NotImplementedError

    def mode_integrals(self):
        """ int_D phi_n for every mode. """
        if self._integrals is None:
            pts, w = quadrature.ball_rule(self.domain, 24 if self.domain.dim == 2 else 12)
            total = np.zeros(self.count)
            for lo in range(0, len(w), CHUNK):
                total += w[lo:lo + CHUNK] @ self.values(pts[lo:lo + CHUNK])
            self._integrals = total
        return self._integrals

    def sup_square(self):
        """ Empirical sup_D phi_n^2 per mode over a polar probe rule. """
        if self._sup is None:
            pts, _ = quadrature.ball_rule(self.domain, 8)
            best = np.zeros(self.count)
            for lo in range(0, len(pts), CHUNK):
                best = np.maximum(best, np.max(self.values(pts[lo:lo + CHUNK]) ** 2, axis=0))
            self._sup = best
        return self._sup


class IntervalBasis(EigenBasis):

    def __init__(self, domain, count):
        n = np.arange(1, count + 1, dtype=float)
        super(IntervalBasis, self).__init__(domain, (n * np.pi) ** 2)
        self.freq = n * np.pi

    def values(self, x):
        pts, _ = as_points(x, 1)
        return np.sqrt(2.0) * np.sin(pts[:, :1] * self.freq[None, :])

    def gradients(self, x):
        pts, _ = as_points(x, 1)
        g = np.sqrt(2.0) * self.freq[None, :] * np.cos(pts[:, :1] * self.freq[None, :])
        return g[:, :, None]

    def hessians(self, x):
        return -self.eigenvalues[None, :, None, None] * self.values(x)[:, :, None, None]

    def mode_integrals(self):
        n = np.arange(1, self.count + 1)
        return np.sqrt(2.0) * (1.0 - np.cos(n * np.pi)) / (n * np.pi)

    def sup_square(self):
        return np.full(self.count, 2.0)


class SegmentBasis(IntervalBasis):
    """ One-dimensional ball (c - R, c + R), mapped onto the unit interval. """

    def __init__(self, domain, count):
        super(SegmentBasis, self).__init__(domain, count)
        self.length = 2.0 * domain.radius
        self.freq = self.freq / self.length
        self.eigenvalues = self.freq ** 2
        self.offset = domain.center[0] - domain.radius

    def values(self, x):
        pts, _ = as_points(x, 1)
        u = pts[:, :1] - self.offset
        return np.sqrt(2.0 / self.length) * np.sin(u * self.freq[None, :])

    def gradients(self, x):
        pts, _ = as_points(x, 1)
        u = pts[:, :1] - self.offset
        g = np.sqrt(2.0 / self.length) * self.freq[None, :] * np.cos(u * self.freq[None, :])
        return g[:, :, None]

    def mode_integrals(self):
        n = np.arange(1, self.count + 1)
        return np.sqrt(2.0 / self.length) * (1.0 - np.cos(n * np.pi)) / self.freq

    def sup_square(self):
        return np.full(self.count, 2.0 / self.length)


class LadderBasis(EigenBasis):
    """ Modes that are the real or imaginary part of complex Helmholtz
        solutions U. d+, d- and d/dz map each U to a combination of at most
        two neighbouring U, so derivatives of any order are exact sums.
    """

    def _shifted(self, pts, dl, dm):
        """ U with degree shifted by dl and order by dm, (n_points, count) complex. """
        raise NotImplementedError

    def _ladder(self, op, dl, dm):
        """ op applied to the shifted U: list of (coefficient per mode, dl, dm). """
        raise NotImplementedError

    def _select(self, u):
        raise NotImplementedError

    def _derivative(self, pts, axes):
        terms = {(0, 0): np.ones(self.count, dtype=complex)}
        for axis in axes:
            applied = {}
            for (dl, dm), coef in terms.items():
                for weight, op in CARTESIAN[axis]:
                    for c, l2, m2 in self._ladder(op, dl, dm):
                        applied[(l2, m2)] = applied.get((l2, m2), 0.0) + weight * coef * c
            terms = applied
        total = np.zeros((pts.shape[0], self.count), dtype=complex)
        for (dl, dm), coef in terms.items():
            if np.any(coef != 0.0):
                total += self._shifted(pts, dl, dm) * coef[None, :]
        return self._select(total)

    def values(self, x):
        pts, _ = as_points(x, self.domain.dim)
        return self._select(self._shifted(pts, 0, 0))

    def gradients(self, x):
        pts, _ = as_points(x, self.domain.dim)
        return np.stack([self._derivative(pts, (i,)) for i in range(self.domain.dim)], axis=-1)

    def hessians(self, x):
        pts, _ = as_points(x, self.domain.dim)
        d = self.domain.dim
        out = np.empty((pts.shape[0], self.count, d, d))
        for i in range(d):
            for j in range(i, d):
                out[:, :, i, j] = self._derivative(pts, (i, j))
                out[:, :, j, i] = out[:, :, i, j]
        return out


class DiskBasis(LadderBasis):
    """ J_m(z r / R) times cos(m theta) or sin(m theta).

        U_m = J_m(k r) e^{i m theta} with d+ U_m = -k U_{m+1}, d- U_m = k U_{m-1}.
    """

    def __init__(self, domain, order, zero, parity):
        R = domain.radius
        super(DiskBasis, self).__init__(domain, (zero / R) ** 2)
        self.order  = order
        self.zero   = zero
        self.parity = parity
        self.k      = zero / R
        norm = np.abs(special.jv(order + 1, zero)) * R * np.sqrt(np.pi)
        self.norm = np.where(order == 0, 1.0, np.sqrt(2.0)) / norm

    def _shifted(self, pts, dl, dm):
        rel = pts - self.domain.center
        r = np.sqrt(np.sum(rel * rel, axis=1))
        theta = np.arctan2(rel[:, 1], rel[:, 0])
        m = self.order + dm
        radial = special.jv(m[None, :], self.k[None, :] * r[:, None])
        return radial * np.exp(1j * m[None, :] * theta[:, None])

    def _ladder(self, op, dl, dm):
        if op == '+':
            return [(-self.k, dl, dm + 1)]
        return [(self.k, dl, dm - 1)]

    def _select(self, u):
        return np.where(self.parity[None, :] == 0, u.real, u.imag) * self.norm[None, :]


class BallBasis(LadderBasis):
    """ j_l(z r / R) times a real spherical harmonic of degree l.

        U_l^m = j_l(k r) C_l^m with C_l^m = sqrt((l-m)!/(l+m)!) P_l^m(cos theta) e^{i m phi}
        (Condon-Shortley phase, C_l^{-m} = (-1)^m conj C_l^m). With a = k/(2l+1):
          d/dz U_l^m = a sqrt((l+m)(l-m)) U_{l-1}^m - a sqrt((l+1+m)(l+1-m)) U_{l+1}^m
          d+ U_l^m   = a sqrt((l-m)(l-m-1)) U_{l-1}^{m+1} + a sqrt((l+m+1)(l+m+2)) U_{l+1}^{m+1}
          d- U_l^m   = -a sqrt((l+m)(l+m-1)) U_{l-1}^{m-1} - a sqrt((l-m+1)(l-m+2)) U_{l+1}^{m-1}
    """

    def __init__(self, domain, degree, zero, azimuth):
        R = domain.radius
        super(BallBasis, self).__init__(domain, (zero / R) ** 2)
        self.degree  = degree
        self.zero    = zero
        self.azimuth = azimuth
        self.k       = zero / R
        m = np.abs(azimuth)
        log_norm = 0.5 * (np.log((2.0 * degree + 1.0) / (4.0 * np.pi)) + _log_factorial_ratio(degree, m))
        harmonic = np.exp(log_norm) * np.where(azimuth == 0, 1.0, np.sqrt(2.0))
        radial = np.sqrt(R ** 3 / 2.0) * np.abs(special.spherical_jn(degree + 1, zero))
        self.norm = harmonic / radial
        # phi_n = norm * sqrt((l+m)!/(l-m)!) * Re or Im of U_l^m
        self.scale = self.norm * np.exp(-0.5 * _log_factorial_ratio(degree, m))

    def _indices(self, dl, dm):
        l = self.degree + dl
        m = np.abs(self.azimuth) + dm
        return l, m, (l >= 0) & (np.abs(m) <= l)

    def _shifted(self, pts, dl, dm):
        l, m, valid = self._indices(dl, dm)
        lc = np.maximum(l, 0)
        ma = np.minimum(np.abs(m), lc)
        rel = pts - self.domain.center
        r = np.sqrt(np.sum(rel * rel, axis=1))
        safe = np.where(r > 0, r, 1.0)
        cos_t = np.clip(np.where(r > 0, rel[:, 2] / safe, 1.0), -1.0, 1.0)
        phi = np.arctan2(rel[:, 1], rel[:, 0])
        radial = special.spherical_jn(lc[None, :], self.k[None, :] * r[:, None])
        legendre_part = special.lpmv(ma[None, :], lc[None, :], cos_t[:, None])
        factor = np.exp(0.5 * _log_factorial_ratio(lc, ma)) * np.where(m < 0, (-1.0) ** ma, 1.0)
        u = radial * legendre_part * np.exp(1j * m[None, :] * phi[:, None]) * factor[None, :]
        return np.where(valid[None, :], u, 0.0)

    def _ladder(self, op, dl, dm):
        l, m, valid = self._indices(dl, dm)
        a = np.where(valid, self.k / (2.0 * l + 1.0), 0.0)

        def root(v):
            return np.sqrt(np.maximum(v, 0.0))
        if op == 'z':
            return [(a * root((l + m) * (l - m)), dl - 1, dm),
                    (-a * root((l + 1 + m) * (l + 1 - m)), dl + 1, dm)]
        if op == '+':
            return [(a * root((l - m) * (l - m - 1)), dl - 1, dm + 1),
                    (a * root((l + m + 1) * (l + m + 2)), dl + 1, dm + 1)]
        return [(-a * root((l + m) * (l + m - 1)), dl - 1, dm - 1),
                (-a * root((l - m + 1) * (l - m + 2)), dl + 1, dm - 1)]

    def _select(self, u):
        return np.where(self.azimuth[None, :] >= 0, u.real, u.imag) * self.scale[None, :]


def _ball_modes(dim, n_max):
    """ (order, zero, angular index) arrays for the first n_max modes. """
    if dim == 2:
        z_max = 2.0 * np.sqrt(n_max) + 6.0
    else:
        z_max = (4.5 * np.pi * n_max) ** (1.0 / 3.0) + 6.0
    while True:
        orders, zeros, angular = [], [], []
        nu = 0
        while nu < z_max:
            shift = 0.5 if dim == 3 else 0.0
            zs = bessel_zeros(nu + shift, z_max)
            if len(zs) == 0:
                break
            if dim == 2:
                labels = [0] if nu == 0 else [0, 1]
            else:
                labels = list(range(-nu, nu + 1))
            for z in zs:
                for a in labels:
                    orders.append(nu)
                    zeros.append(z)
                    angular.append(a)
            nu += 1
        if len(zeros) >= n_max:
            break
        z_max *= 1.25
    orders = np.asarray(orders)
    zeros = np.asarray(zeros)
    angular = np.asarray(angular)
    order = np.lexsort((angular, orders, zeros))[:n_max]
    return orders[order], zeros[order], angular[order]


_cache = {}


def eigen_pairs(domain, n_max):
    """ EigenBasis with the first n_max Dirichlet eigenpairs of Delta on D. """
    n_max = int(n_max)
    if n_max < 1:
        raise RejectedInput("n_max must be >= 1")
    if domain.kind == BALL and domain.dim > 3:
        raise UnsupportedDomain("Ball eigenpairs supported for dim <= 3")
    if domain.is_interval:
        return IntervalBasis(domain, n_max)
    if domain.dim == 1:
        return SegmentBasis(domain, n_max)
    key = (domain.dim, domain.radius, tuple(domain.center), n_max)
    if key not in _cache:
        orders, zeros, angular = _ball_modes(domain.dim, n_max)
        if domain.dim == 2:
            _cache[key] = DiskBasis(domain, orders, zeros, angular)
        else:
            _cache[key] = BallBasis(domain, orders, zeros, angular)
        logger.debug("built %d Fourier-Bessel modes for %r, lambda_max=%g",
                     n_max, domain, _cache[key].eigenvalues[-1])
    return _cache[key]


def modes_for_decay(domain, t, power, exponent=40.0, cap=None):
    """ Smallest N with t * lambda_N^power >= exponent (Weyl estimate for balls).

        Returns (N, capped) where capped tells whether the cap was applied.
    """
    target = (exponent / t) ** (1.0 / power)
    d = domain.dim
    if domain.is_interval:
        n = int(np.ceil(np.sqrt(target) / np.pi)) + 1
    elif d == 1:
        n = int(np.ceil(np.sqrt(target) * 2.0 * domain.radius / np.pi)) + 1
    else:
        z = np.sqrt(target) * domain.radius
        n = int(np.ceil(z * z / 4.0 if d == 2 else 2.0 * z ** 3 / (9.0 * np.pi))) + 1
    n = max(n, 1)
    if cap is not None and n > cap:
        return cap, True
    return n, False
