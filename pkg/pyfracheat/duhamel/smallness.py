"""Smallness of b.grad as a perturbation of r^D, and the contraction window.

    C(delta)     = sup int_s^t int_D r^D(r-s,x,z) |b(r,z)| |grad_z r^D(t-r,z,y)| dz dr
                       / r^D(t-s,x,y)
    C_hat(delta) = sup int_s^t int_D |grad_x r^D(r-s,x,z)| |b(r,z)| |grad_z r^D(t-r,z,y)| dz dr
                       / (q^D(t-s,x,y) / (rho(x) ^ (|x-y| + (t-s)^{1/alpha})))

    both over 0 <= s < t <= s + delta on a probe set. The r-integrals use
    Gauss-Jacobi nodes for the (t-r)^{-1/alpha} (and, for C_hat,
    (r-s)^{-1/alpha}) endpoint factors; each r gets its own z-rule refined
    around every probe point.
"""

import logging
import numpy as np

from ..domain import quadrature
from ..domain.grid import probe_grid
from ..domain.model import point_norm
from ..errors import RejectedInput, NonContractiveDriftError
from ..kernels import comparison

logger = logging.getLogger(__name__)

# Window lengths probed inside one delta, as fractions of delta.
WINDOW_FRACTIONS = (1.0, 0.5, 0.25)

# Quadrature nodes per kernel evaluation; bounds the (nodes, modes) work arrays.
CHUNK = 256


def probe_points(inputs):
    cfg = inputs.cfg
    return probe_grid(inputs.domain, cfg.probe_resolution, cfg.probe_refinement)


def _starts(inputs, delta):
    T = inputs.params.horizon_T
    if inputs.drift.time_independent or delta >= T:
        return [0.0]
    return list(np.linspace(0.0, T - delta, 3))


def _integrals(inputs, s, tau, points):
    """ The C and C_hat numerators on points x points for one window (s, s + tau). """
    cfg = inputs.cfg
    ev = inputs.rD
    a = inputs.params.alpha
    t = s + tau
    n = len(points)
    plain = np.zeros((n, n))
    grad = np.zeros((n, n))
    for acc, exp_lo in ((plain, 0.0), (grad, -1.0 / a)):
        nodes, weights = quadrature.jacobi_rule(s, t, cfg.check_time_nodes, exp_lo, -1.0 / a)
        for r, wr in zip(nodes, weights):
            sx = (r - s) ** (1.0 / a)
            sy = (t - r) ** (1.0 / a)
            z, wz = quadrature.domain_rule(inputs.domain, cfg.check_space_nodes, list(points) * 2,
                                           [sx] * n + [sy] * n)
            bz = wz * inputs.drift.norm(r, z)
            for lo in range(0, len(bz), CHUNK):
                zc = z[lo:lo + CHUNK]
                right = point_norm(ev.grad_rD_matrix(t - r, zc, points))
                if exp_lo == 0.0:
                    left = ev.rD_matrix(r - s, points, zc)
                else:
                    left = point_norm(ev.grad_rD_matrix(r - s, points, zc))
                acc += wr * (left * bz[None, lo:lo + CHUNK]) @ right
    return plain, grad


def estimate_smallness(inputs, delta, points=None):
    """ (C_est, C_hat_est) for one delta. """
    delta = float(delta)
    T = inputs.params.horizon_T
    if not 0.0 < delta <= T * (1.0 + 1e-12):
        raise RejectedInput("delta must lie in (0, horizon_T]")
    if inputs.drift.is_zero:
        return 0.0, 0.0
    points = probe_points(inputs) if points is None else points
    ctx = inputs.ctx
    best_c, best_hat = 0.0, 0.0
    for s in _starts(inputs, delta):
        for frac in WINDOW_FRACTIONS:
            tau = frac * delta
            plain, grad = _integrals(inputs, s, tau, points)
            base = inputs.rD.rD_matrix(tau, points, points)
            scale = comparison.outer(comparison.gradient_scale, ctx, tau, points, points)
            best_c = max(best_c, float(np.max(plain / base)))
            best_hat = max(best_hat, float(np.max(grad / scale)))
    logger.debug("smallness at delta=%g: C=%.4g C_hat=%.4g over %d probes", delta, best_c, best_hat,
                 len(points))
    return best_c, best_hat


def schedule(inputs):
    """ delta = T, T/2, T/4, ... """
    T = inputs.params.horizon_T
    return [T * 2.0 ** -k for k in range(inputs.cfg.schedule_levels)]


def pick_delta0(inputs):
    """ Largest delta in the halving schedule with C_est(delta) < contraction_target.

        The estimates are kept on inputs.smallness as (delta, C, C_hat) rows
        and the choice on inputs.delta0.
    """
    target = inputs.cfg.contraction_target
    inputs.smallness = []
    if inputs.drift.is_zero:
        inputs.delta0 = inputs.params.horizon_T
        inputs.smallness.append((inputs.delta0, 0.0, 0.0))
        logger.info("zero drift: contraction window is the whole horizon %g", inputs.delta0)
        return inputs.delta0
    points = probe_points(inputs)
    for delta in schedule(inputs):
        c, c_hat = estimate_smallness(inputs, delta, points)
        inputs.smallness.append((delta, c, c_hat))
        if c < target:
            inputs.delta0 = delta
            logger.info("contraction window delta0=%g (C=%.4g, C_hat=%.4g, target %g)", delta, c, c_hat,
                        target)
            return delta
    raise NonContractiveDriftError("no delta down to %g has C(delta) < %g"
                                   % (inputs.smallness[-1][0], target), inputs.smallness)
