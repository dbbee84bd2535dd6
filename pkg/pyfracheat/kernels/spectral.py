"""The heat kernel r^D(t,x,y) of the spectral fractional Laplacian -(-Delta|_D)^{alpha/2}.

    Two routes:

    eigen          sum_n exp(-t lambda_n^{alpha/2}) phi_n(x) phi_n(y)
    subordination  int_0^inf p2(s,x,y) mu(t,s) ds   (interval only)

    The eigen route is primary. On the interval the subordination route
    takes over when the spectral sum would need more than the mode cap.
"""

import logging
import numpy as np
from scipy import special

from ..domain.model import as_points, point_norm, check_consistent
from ..domain import eigen, quadrature
from ..errors import RejectedInput, TruncationError, UnsupportedDomain
from ..subordinator import stable
from . import comparison
from .gaussian import GaussianDirichlet, GaussianKernelConfig, reference_scale, _Truncated

logger = logging.getLogger(__name__)

EIGEN = 'eigen'
SUBORDINATION = 'subordination'


class SpectralKernelConfig(object):

    def __init__(self, interval_cap=50000, ball_cap=2000, decay_exponent=40.0, target_rel_tol=1e-10,
                 subordination_nodes=16, subordination_panel=0.5, subordination_decay=50.0):
        if int(interval_cap) < 1 or int(ball_cap) < 1:
            raise RejectedInput("mode caps must be >= 1")
        if not target_rel_tol > 0:
            raise RejectedInput("target_rel_tol must be positive")
        if not decay_exponent > 0 or not subordination_decay > 0:
            raise RejectedInput("decay exponents must be positive")
        self.interval_cap         = int(interval_cap)
        self.ball_cap             = int(ball_cap)
        self.decay_exponent       = float(decay_exponent)
        self.target_rel_tol       = float(target_rel_tol)
        self.subordination_nodes  = int(subordination_nodes)
        self.subordination_panel  = float(subordination_panel)
        self.subordination_decay  = float(subordination_decay)

    def get_save_state(self):
        return dict(self.__dict__)


class SpectralKernelEvaluator(object):
    """ r^D and its x-gradients on one domain for one alpha. """

    def __init__(self, params, domain, cfg=None, gaussian_cfg=None):
        check_consistent(params, domain)
        self.params  = params
        self.domain  = domain
        self.cfg     = cfg or SpectralKernelConfig()
        self.sub     = stable.SubordinatorParams.from_model(params)
        self.gauss   = GaussianDirichlet(domain, gaussian_cfg or GaussianKernelConfig())
        self.power   = params.alpha / 2.0
        self.achieved_tail = {}
        logger.info("spectral kernel on %r, alpha=%g, mode cap %d", domain, params.alpha, self.cap)

    @property
    def cap(self):
        return self.cfg.interval_cap if self.domain.dim == 1 else self.cfg.ball_cap

    @property
    def lambda1(self):
        return float(self.basis(1).eigenvalues[0])

    def modes(self, t):
        return eigen.modes_for_decay(self.domain, t, self.power, self.cfg.decay_exponent, self.cap)

    def route(self, t):
        _, capped = self.modes(t)
        if capped and self.domain.is_interval:
            return SUBORDINATION
        return EIGEN

    def basis(self, N):
        if self.domain.dim == 1:
            return eigen.eigen_pairs(self.domain, N)
        full = self.gauss.basis(N)
        return _Truncated(full, N) if full.count > N else full

    # -- eigen route -----------------------------------------------------

    def tail_bound(self, t, N, order=0):
        """ Bound on the discarded modes sum_{n>N} e^{-t lambda_n^{alpha/2}} |grad^j phi_n|_inf |phi_n|_inf. """
        a = self.params.alpha
        if self.domain.is_interval:
            x = t * (np.pi * N) ** a
            shape = (1.0 + order) / a
            upper = special.gammaincc(shape, x) * special.gamma(shape)
            return 2.0 * upper / (a * np.pi * t ** shape)
        basis = self.basis(N)
        lam = basis.eigenvalues[-1]
        return np.exp(-t * lam ** self.power) * N * basis.sup_square()[-1] * lam ** (order / 2.0)

    def _eigen(self, t, px, py, order, matrix):
        N, capped = self.modes(t)
        while True:
            basis = self.basis(N)
            e = np.exp(-t * basis.eigenvalues ** self.power)
            out = GaussianDirichlet._contract(basis, e, px, py, order, matrix)
            tail = self.tail_bound(t, N, order)
            lam1 = basis.eigenvalues[0]
            floor = np.exp(-t * lam1 ** self.power) * lam1 ** (order / 2.0)
            scale = reference_scale(out, order, floor)
            self.achieved_tail[(t, order)] = tail
            if scale == 0.0 or tail <= self.cfg.target_rel_tol * scale:
                return out
            if capped or N >= self.cap:
                raise TruncationError("rD eigen series: tail %.3g above tolerance at N=%d, t=%g"
                                      % (tail, N, t), tail)
            N = min(2 * N, self.cap)
            capped = N >= self.cap
            logger.debug("rD eigen route grown to N=%d at t=%g, tail bound %.3g", N, t, tail)

    # -- subordination route -----------------------------------------------

    def subordination_rule(self, t):
        if not self.domain.is_interval:
            raise UnsupportedDomain("subordination route is implemented on the unit interval only")
        s_min = stable.negligible_below(self.sub, t)
        s_max = max(self.cfg.subordination_decay / self.lambda1, 4.0 * s_min)
        return stable.subordination_rule(self.sub, t, s_max, self.cfg.subordination_nodes,
                                         self.cfg.subordination_panel)

    def _subordination(self, t, px, py, order, matrix):
        nodes, weights = self.subordination_rule(t)
        total = 0.0
        for s, w in zip(nodes, weights):
            if order == 0:
                value = self.gauss.p2_matrix(s, px, py) if matrix else self.gauss.p2(s, px, py)
            elif matrix:
                value = self.gauss.grad_matrix(s, px, py, order)
            else:
                value = self.gauss.grad(s, px, py, order)
            total = total + w * value
        return total

    # -- public ------------------------------------------------------------

    def _evaluate(self, t, x, y, order, matrix, route=None):
        t = float(t)
        if not t > 0:
            raise RejectedInput("rD needs t > 0")
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
        if route == SUBORDINATION:
            out = self._subordination(t, px, py, order, matrix)
        elif route == EIGEN:
            out = self._eigen(t, px, py, order, matrix)
        else:
            raise RejectedInput("unknown route %r" % (route,))
        if not matrix and sx and sy:
            return out[0] if order else float(out[0])
        return out

    def rD(self, t, x, y, route=None):
        """ Pairwise r^D(t, x_i, y_i). """
        return self._evaluate(t, x, y, 0, False, route)

    def rD_matrix(self, t, xs, ys, route=None):
        return self._evaluate(t, xs, ys, 0, True, route)

    def rD_eigen(self, t, x, y):
        return self._evaluate(t, x, y, 0, False, EIGEN)

    def rD_subordination(self, t, x, y):
        return self._evaluate(t, x, y, 0, False, SUBORDINATION)

    def grad_rD(self, t, x, y, order=1, route=None):
        if order not in (1, 2):
            raise RejectedInput("gradient order must be 1 or 2")
        return self._evaluate(t, x, y, order, False, route)

    def grad_rD_matrix(self, t, xs, ys, order=1, route=None):
        if order not in (1, 2):
            raise RejectedInput("gradient order must be 1 or 2")
        return self._evaluate(t, xs, ys, order, True, route)

    def mass_rD(self, t, x):
        """ int_D r^D(t,x,y) dy through the mode integrals. """
        t = float(t)
        px, single = as_points(x, self.domain.dim)
        N, _ = self.modes(t)
        basis = self.basis(N)
        e = np.exp(-t * basis.eigenvalues ** self.power)
        out = basis.values(px) @ (e * basis.mode_integrals())
        return float(out[0]) if single else out

    def ck_residual_rD(self, t, s, x, y, route=EIGEN, n=16):
        """ Relative residual of int r^D(t,x,z) r^D(s,z,y) dz against the eigen-route r^D(t+s,x,y). """
        px, _ = as_points(x, self.domain.dim)
        py, _ = as_points(y, self.domain.dim)
        scales = [self.params.scale(t), self.params.scale(s)]
        nodes, w = quadrature.domain_rule(self.domain, n, [px[0], py[0]], scales)
        left = self.rD_matrix(t, px[:1], nodes, route)[0]
        right = self.rD_matrix(s, nodes, py[:1], route)[:, 0]
        value = np.sum(left * right * w)
        direct = float(np.ravel(self.rD(t + s, px[:1], py[:1], EIGEN))[0])
        return abs(value - direct) / abs(direct)


# -- bound diagnostics -------------------------------------------------------

def sharp_ratio(ctx, ev, t, x, y):
    """ r^D / q^D """
    return ev.rD(t, x, y) / comparison.qD(ctx, t, x, y)


def grad_norm(ev, t, x, y, order):
    g = ev.grad_rD(t, x, y, order)
    if order == 1:
        return point_norm(g)
    return np.sqrt(np.sum(g * g, axis=(-2, -1)))


def grad_bound_ratio(ctx, ev, t, x, y, order=1):
    """ |grad^j r^D| (rho(x) ^ (|x-y|+t^{1/alpha})) / ((|x-y|+t^{1/alpha})^{1-j} q^D) """
    px, _ = as_points(x, ctx.dim)
    py, _ = as_points(y, ctx.dim)
    scale = point_norm(px - py) + ctx.params.scale(t)
    front = np.minimum(ctx.domain.rho(px), scale) / scale ** (1.0 - order)
    return grad_norm(ev, t, px, py, order) * front / comparison.qD(ctx, t, px, py)


def intermediate_grad_ratio(ctx, ev, t, x, y, order=1):
    """ |grad^j r^D| against q_hat(t,y,x) varrho^1_{d+j}(t, x-y). """
    px, _ = as_points(x, ctx.dim)
    py, _ = as_points(y, ctx.dim)
    rhs = comparison.q_hat(ctx, t, py, px) * comparison.varrho(ctx, 1.0, t, px - py, dim=ctx.dim + order)
    return grad_norm(ev, t, px, py, order) / rhs


def holder_grad_check(ctx, ev, t, x, x2, y, vartheta):
    """ |grad r^D(t,x,y) - grad r^D(t,x',y)| over
        |x-x'|^vartheta q_hat(t,y,x~) varrho^1_{d+1+vartheta}(t, x~-y),
        x~ the one of x, x' closer to y.
    """
    if not 0.0 < vartheta < 1.0:
        raise RejectedInput("vartheta must lie in (0, 1)")
    px, single = as_points(x, ctx.dim)
    qx, _ = as_points(x2, ctx.dim)
    py, _ = as_points(y, ctx.dim)
    n = max(px.shape[0], qx.shape[0], py.shape[0])
    px, qx, py = [np.broadcast_to(p, (n, ctx.dim)) for p in (px, qx, py)]
    lhs = point_norm(ev.grad_rD(t, px, py, 1) - ev.grad_rD(t, qx, py, 1))
    closer = (point_norm(px - py) <= point_norm(qx - py))[:, None]
    xt = np.where(closer, px, qx)
    rhs = (point_norm(px - qx) ** vartheta * comparison.q_hat(ctx, t, py, xt)
           * comparison.varrho(ctx, 1.0, t, xt - py, dim=ctx.dim + 1.0 + vartheta))
    ratio = np.where(lhs == 0.0, 0.0, lhs / np.where(rhs > 0, rhs, 1.0))
    return float(ratio[0]) if single and n == 1 else ratio
