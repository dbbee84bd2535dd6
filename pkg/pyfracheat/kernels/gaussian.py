"""Gaussian Dirichlet heat kernel p2(t,x,y) of Delta on the model domains.

    Generator Delta, so the free Gaussian has variance 2t:
        g(t,u) = (4 pi t)^{-1/2} exp(-u^2/(4t)).

    On the interval two routes exist: the image series (small t) and the
    eigen series (large t). Balls only have the Fourier-Bessel eigen route.
"""

import logging
import numpy as np
from scipy import special

from ..domain.model import as_points, point_norm
from ..domain import eigen, quadrature
from ..errors import RejectedInput, TruncationError
from . import comparison

logger = logging.getLogger(__name__)

# Truncate series once t * lambda_N reaches this exponent.
DECAY_EXPONENT = 40.0


class GaussianKernelConfig(object):

    def __init__(self, eigen_truncation=2000, image_truncation=3, route_switch_time=0.05,
                 target_rel_tol=1e-10):
        if int(eigen_truncation) < 1 or int(image_truncation) < 1:
            raise RejectedInput("truncations must be >= 1")
        if not 0.0 < target_rel_tol <= 1e-2:
            raise RejectedInput("target_rel_tol must lie in (0, 1e-2]")
        if not route_switch_time > 0:
            raise RejectedInput("route_switch_time must be positive")
        self.eigen_truncation  = int(eigen_truncation)
        self.image_truncation  = int(image_truncation)
        self.route_switch_time = float(route_switch_time)
        self.target_rel_tol    = float(target_rel_tol)

    def get_save_state(self):
        return {'eigen_truncation': self.eigen_truncation,
                'image_truncation': self.image_truncation,
                'route_switch_time': self.route_switch_time,
                'target_rel_tol': self.target_rel_tol}


def _gauss(t, u):
    return np.exp(-u * u / (4.0 * t)) / np.sqrt(4.0 * np.pi * t)


def _gauss_derivative(t, u, order):
    g = _gauss(t, u)
    if order == 0:
        return g
    if order == 1:
        return -u / (2.0 * t) * g
    return (u * u / (4.0 * t * t) - 1.0 / (2.0 * t)) * g


# Matrix entries below this fraction of the largest one only need absolute accuracy.
SIGNIFICANT = 1e-6


def reference_scale(out, order, floor):
    """ Magnitude a truncation tail is measured against.

        Values use their smallest entry within SIGNIFICANT of the largest;
        smaller entries are resolved in absolute terms only. Gradients
        vanish at symmetric points, so they use the largest entry, floored
        by the leading mode.
    """
    mag = np.abs(out)
    if order == 0:
        if not np.any(mag > 0):
            return 0.0
        return np.min(mag[mag >= SIGNIFICANT * np.max(mag)])
    return max(float(np.max(mag)) if mag.size else 0.0, floor)


class GaussianDirichlet(object):
    """ Evaluator for p2 and its x-gradients on one domain. """

    def __init__(self, domain, cfg=None):
        self.domain = domain
        self.cfg    = cfg or GaussianKernelConfig()
        self._basis = None

    def basis(self, count):
        if self._basis is None or self._basis.count < count:
            self._basis = eigen.eigen_pairs(self.domain, count)
            logger.debug("gaussian kernel eigenbasis grown to %d modes", count)
        return self._basis

    def route(self, t):
        if self.domain.is_interval and t < self.cfg.route_switch_time:
            return 'image'
        return 'eigen'

    # -- image series (interval only) --------------------------------------

    def _image(self, t, X, Y, order):
        K = max(self.cfg.image_truncation, int(np.ceil((np.sqrt(4.0 * DECAY_EXPONENT * t) + 1.0) / 2.0)))
        total = 0.0
        for k in range(-K, K + 1):
            total = total + (_gauss_derivative(t, X - Y + 2.0 * k, order)
                             - _gauss_derivative(t, X + Y + 2.0 * k, order))
        return total

    # -- eigen series --------------------------------------------------------

    def _tail(self, basis, t, order):
        N = basis.count
        if self.domain.is_interval:
            a = np.pi * np.sqrt(t)
            tail = special.erfc(a * N) / (2.0 * np.sqrt(np.pi * t)) * 2.0
            return tail * (np.pi * (N + 1)) ** order
        lam = basis.eigenvalues[-1]
        return np.exp(-lam * t) * N * basis.sup_square()[-1] * lam ** (order / 2.0)

    def _eigen(self, t, px, py, order, matrix):
        N, _ = eigen.modes_for_decay(self.domain, t, 1.0, DECAY_EXPONENT, self.cfg.eigen_truncation)
        while True:
            basis = eigen.eigen_pairs(self.domain, N) if self.domain.is_interval else self._ball_basis(N)
            e = np.exp(-basis.eigenvalues * t)
            out = self._contract(basis, e, px, py, order, matrix)
            tail = self._tail(basis, t, order)
            floor = np.exp(-basis.eigenvalues[0] * t) * basis.eigenvalues[0] ** (order / 2.0)
            scale = reference_scale(out, order, floor)
            if tail <= self.cfg.target_rel_tol * scale or scale == 0.0:
                return out
            if N >= self.cfg.eigen_truncation:
                raise TruncationError("p2 eigen series: tail %.3g above tolerance at N=%d" % (tail, N), tail)
            N = min(2 * N, self.cfg.eigen_truncation)

    def _ball_basis(self, N):
        basis = self.basis(N)
        return _Truncated(basis, N) if basis.count > N else basis

    @staticmethod
    def _contract(basis, e, px, py, order, matrix):
        phi_y = basis.values(py)
        if order == 0:
            phi_x = basis.values(px)
            if matrix:
                return (phi_x * e) @ phi_y.T
            return np.sum(phi_x * e * phi_y, axis=1)
        if order == 1:
            grad_x = basis.gradients(px)
            if matrix:
                return np.einsum('nkd,k,mk->nmd', grad_x, e, phi_y)
            return np.einsum('nkd,k,nk->nd', grad_x, e, phi_y)
        hess_x = basis.hessians(px)
        if matrix:
            return np.einsum('nkij,k,mk->nmij', hess_x, e, phi_y)
        return np.einsum('nkij,k,nk->nij', hess_x, e, phi_y)

    # -- public evaluation -------------------------------------------------

    def _evaluate(self, t, x, y, order, matrix, route=None):
        t = float(t)
        if not t > 0:
            raise RejectedInput("p2 needs t > 0")
        px, sx = as_points(x, self.domain.dim)
        py, sy = as_points(y, self.domain.dim)
        if not matrix and px.shape[0] != py.shape[0]:
            if px.shape[0] == 1:
                px = np.repeat(px, py.shape[0], axis=0)
            elif py.shape[0] == 1:
                py = np.repeat(py, px.shape[0], axis=0)
            else:
                raise RejectedInput("pairwise evaluation needs equal point counts")
        route = route or self.route(t)
        if route == 'image' and not self.domain.is_interval:
            raise RejectedInput("image route exists on the interval only")
        if route == 'image':
            X = px[:, 0][:, None] if matrix else px[:, 0]
            Y = py[:, 0][None, :] if matrix else py[:, 0]
            out = self._image(t, X, Y, order)
            if order == 1:
                out = out[..., None]
            elif order == 2:
                out = out[..., None, None]
        else:
            out = self._eigen(t, px, py, order, matrix)
        if not matrix and sx and sy:
            return out[0] if order else float(out[0])
        return out

    def p2(self, t, x, y, route=None):
        """ Pairwise p2; route forces 'image' or 'eigen'. """
        return self._evaluate(t, x, y, 0, False, route)

    def p2_matrix(self, t, xs, ys):
        return self._evaluate(t, xs, ys, 0, True)

    def grad(self, t, x, y, order=1, route=None):
        if order not in (1, 2):
            raise RejectedInput("gradient order must be 1 or 2")
        return self._evaluate(t, x, y, order, False, route)

    def grad_matrix(self, t, xs, ys, order=1):
        return self._evaluate(t, xs, ys, order, True)

    def survival(self, t, x):
        """ int_D p2(t,x,y) dy, the survival probability of killed BM from x. """
        t = float(t)
        px, single = as_points(x, self.domain.dim)
        if self.route(t) == 'image':
            out = np.empty(px.shape[0])
            for i, xi in enumerate(px):
                nodes, w = quadrature.interval_rule(16, [xi[0]], [np.sqrt(t)])
                out[i] = w @ self.p2_matrix(t, xi, nodes)[0]
        else:
            N, _ = eigen.modes_for_decay(self.domain, t, 1.0, DECAY_EXPONENT, self.cfg.eigen_truncation)
            basis = eigen.eigen_pairs(self.domain, N) if self.domain.is_interval else self._ball_basis(N)
            e = np.exp(-basis.eigenvalues * t)
            out = basis.values(px) @ (e * basis.mode_integrals())
        out = np.clip(out, 0.0, 1.0)
        return float(out[0]) if single else out


class _Truncated(eigen.EigenBasis):
    """ View on the first N modes of a larger ball basis. """

    def __init__(self, parent, N):
        super(_Truncated, self).__init__(parent.domain, parent.eigenvalues[:N])
        self.parent = parent
        self.N = N

    def values(self, x):
        return self.parent.values(x)[:, :self.N]

    def gradients(self, x):
        return self.parent.gradients(x)[:, :self.N]

    def hessians(self, x):
        return self.parent.hessians(x)[:, :self.N]

    def mode_integrals(self):
        return self.parent.mode_integrals()[:self.N]

    def sup_square(self):
        return self.parent.sup_square()[:self.N]


# -- bound diagnostics ---------------------------------------------------------

def boundary_form(ctx, t, x, y, lam):
    """ (1 ^ rho(x)rho(y)/t) xi0_lam(t, x-y) """
    px, _ = as_points(x, ctx.dim)
    py, _ = as_points(y, ctx.dim)
    factor = np.minimum(1.0, ctx.domain.rho(px) * ctx.domain.rho(py) / t)
    return factor * comparison.xi(ctx, 0.0, lam, t, px - py)


def q2_form(ctx, t, x, y, lam):
    """ q2(t,x,y) xi0_lam(t, x-y) """
    px, _ = as_points(x, ctx.dim)
    py, _ = as_points(y, ctx.dim)
    return comparison.q_alpha(ctx, t, px, py, alpha=2.0) * comparison.xi(ctx, 0.0, lam, t, px - py)


def split_form(ctx, t, x, y, lam, gamma=0.0):
    """ (1 ^ rho(x)/sqrt t)(1 ^ rho(y)/sqrt t) xi^gamma_lam(t, x-y) """
    px, _ = as_points(x, ctx.dim)
    py, _ = as_points(y, ctx.dim)
    st = np.sqrt(t)
    hx = np.minimum(1.0, ctx.domain.rho(px) / st)
    hy = np.minimum(1.0, ctx.domain.rho(py) / st)
    return hx * hy * comparison.xi(ctx, gamma, lam, t, px - py)


def domination_ratio(ctx, t, x, y, lam1, gamma=0.0):
    """ boundary form at 2*lam1 (with xi^gamma) over the split form at lam1. """
    px, _ = as_points(x, ctx.dim)
    py, _ = as_points(y, ctx.dim)
    factor = np.minimum(1.0, ctx.domain.rho(px) * ctx.domain.rho(py) / t)
    lhs = factor * comparison.xi(ctx, gamma, 2.0 * lam1, t, px - py)
    return lhs / split_form(ctx, t, px, py, lam1, gamma)


def gradient_form(ctx, t, x, y, lam, order, horizon_T):
    """ q_hat2(t,y,x) xi^j_lam(t,x-y) for t <= T, T^{-j/2} q_hat2 xi0_lam beyond. """
    px, _ = as_points(x, ctx.dim)
    py, _ = as_points(y, ctx.dim)
    hat = comparison.q_hat(ctx, t, py, px, alpha=2.0)
    if t <= horizon_T:
        return hat * comparison.xi(ctx, float(order), lam, t, px - py)
    return hat * comparison.xi(ctx, 0.0, lam, t, px - py) / horizon_T ** (order / 2.0)


def combined_gradient_form(ctx, t, x, y, lam, order):
    """ (|x-y|+sqrt t)^{1-j} / (rho(x) ^ (|x-y|+sqrt t)) q2 xi0_lam """
    px, _ = as_points(x, ctx.dim)
    py, _ = as_points(y, ctx.dim)
    scale = point_norm(px - py) + np.sqrt(t)
    front = scale ** (1.0 - order) / np.minimum(ctx.domain.rho(px), scale)
    return front * q2_form(ctx, t, px, py, lam)


def local_gradient_ratio(ctx, ev, t, x, y):
    """ |grad p2| against C/rho(x) p2 (rho(x) <= sqrt t) or
        (1 + |x-y|/sqrt t)/sqrt t p2 otherwise.
    """
    px, _ = as_points(x, ctx.dim)
    py, _ = as_points(y, ctx.dim)
    st = np.sqrt(t)
    rho = ctx.domain.rho(px)
    bound = np.where(rho <= st, 1.0 / rho, (1.0 + point_norm(px - py) / st) / st)
    value = ev.p2(t, px, py)
    return point_norm(ev.grad(t, px, py, 1)) / (bound * value)


def gradient_norm(ev, t, x, y, order):
    g = ev.grad(t, x, y, order)
    if order == 1:
        return point_norm(g)
    return np.sqrt(np.sum(g * g, axis=(-2, -1)))


def fit_lambda(ratio_fn, lambdas, cap, upper=True):
    """ Largest lambda whose sup ratio stays <= cap (upper bounds), or the
        smallest lambda whose inf ratio stays >= 1/cap (lower bounds).

        Returns (lambda, extreme ratio); lambda is None when no candidate fits.
    """
    best = None
    for lam in sorted(lambdas, reverse=upper):
        ratios = np.asarray(ratio_fn(lam))
        extreme = float(np.max(ratios)) if upper else float(np.min(ratios))
        best = extreme
        if (upper and extreme <= cap) or (not upper and extreme >= 1.0 / cap):
            return lam, extreme
    return None, best


def ck_residual_p2(ev, t, s, x, y, n=16):
    """ Relative residual of int p2(t,x,z) p2(s,z,y) dz against p2(t+s,x,y). """
    px, _ = as_points(x, ev.domain.dim)
    py, _ = as_points(y, ev.domain.dim)
    scale = np.sqrt(min(t, s))
    nodes, w = quadrature.domain_rule(ev.domain, n, [px[0], py[0]], [scale, scale])
    lhs = np.sum(ev.p2_matrix(t, px, nodes)[0] * ev.p2_matrix(s, nodes, py)[:, 0] * w)
    direct = float(np.ravel(ev.p2(t + s, px[:1], py[:1]))[0])
    return abs(lhs - direct) / abs(direct)
