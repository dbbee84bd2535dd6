"""The perturbed kernel r^{D,b} of -(-Delta|_D)^{alpha/2} + b.grad through its Picard series.

    r^{D,b}(s,x;t,y) = sum_k r_k(s,x;t,y),   r_0(s,x;t,y) = r^D(t-s,x,y),
    r_k(s,x;t,y)     = int_s^t int_D r_{k-1}(s,x;r,z) b(r,z).grad_z r_0(r,z;t,y) dz dr

    r_0 comes from the spectral evaluator. The terms k >= 1 live in the span
    of the first N Dirichlet eigenfunctions,

        r_k(s,x;t,y) = phi(x)^T C_k(s,t) phi(y),

    where C_k is the eps^k Taylor coefficient of the propagator of
    A + eps B(r), with A = -diag(lambda_n^{alpha/2}) and
    B(r)_{nm} = int_D phi_n b(r,.).grad phi_m. The propagator is sampled at
    J points of a circle in eps and the coefficients come out of a discrete
    Fourier transform. Time-independent drifts diagonalize A + eps B once;
    time-dependent drifts multiply matrix exponentials over lattice steps of
    length delta0/M, with B averaged over each step.

    A single series is used for t - s <= delta0. Longer spans are chained
    through Chapman-Kolmogorov by spatial quadrature.
"""

import collections
import logging
import warnings
import numpy as np
from scipy import linalg

from ..domain import quadrature
from ..domain.model import as_points, point_norm, check_consistent
from ..errors import (RejectedInput, TruncationError, TruncationWarning, NonContractiveDriftError,
                      PositivityError)
from ..kernels import comparison
from ..kernels.spectral import SpectralKernelEvaluator
from . import smallness
from .testfunctions import Constant

logger = logging.getLogger(__name__)

FIRST_KIND = 'first'
SECOND_KIND = 'second'

# Eigenvector matrices worse conditioned than this fall back to stepping.
COND_LIMIT = 1e10

# Cached propagator coefficients per evaluator.
SERIES_CACHE = 16
STEP_CACHE = 32

CHUNK = 256

# Relative size of the last quarter of the spectral coefficients of a test function.
COEFFICIENT_TAIL = 1e-6


class PerturbationConfig(object):

    def __init__(self, delta0=None, max_terms=6, series_tol=1e-10, n_modes=256, time_steps=8,
                 step_nodes=4, space_nodes=12, check_time_nodes=12, check_space_nodes=10,
                 contour_points=16, contraction_target=0.25, schedule_levels=30,
                 probe_resolution=5, probe_refinement=2, generator_modes=512, chain_panels=64):
        if delta0 is not None and not float(delta0) > 0:
            raise RejectedInput("delta0 must be positive")
        if int(max_terms) < 2:
            raise RejectedInput("max_terms must be at least 2")
        if not series_tol > 0:
            raise RejectedInput("series_tol must be positive")
        if not 0.0 < contraction_target < 0.5:
            raise RejectedInput("contraction_target must lie in (0, 1/2)")
        if int(contour_points) <= int(max_terms) + 1:
            raise RejectedInput("contour_points must exceed max_terms + 1")
        for name, value in (('n_modes', n_modes), ('time_steps', time_steps), ('step_nodes', step_nodes),
                            ('space_nodes', space_nodes), ('check_time_nodes', check_time_nodes),
                            ('check_space_nodes', check_space_nodes), ('schedule_levels', schedule_levels),
                            ('probe_resolution', probe_resolution), ('generator_modes', generator_modes),
                            ('chain_panels', chain_panels)):
            if int(value) < 1:
                raise RejectedInput("%s must be >= 1" % name)
        self.delta0             = None if delta0 is None else float(delta0)
        self.max_terms          = int(max_terms)
        self.series_tol         = float(series_tol)
        self.n_modes            = int(n_modes)
        self.time_steps         = int(time_steps)
        self.step_nodes         = int(step_nodes)
        self.space_nodes        = int(space_nodes)
        self.check_time_nodes   = int(check_time_nodes)
        self.check_space_nodes  = int(check_space_nodes)
        self.contour_points     = int(contour_points)
        self.contraction_target = float(contraction_target)
        self.schedule_levels    = int(schedule_levels)
        self.probe_resolution   = int(probe_resolution)
        self.probe_refinement   = int(probe_refinement)
        self.generator_modes    = int(generator_modes)
        self.chain_panels       = int(chain_panels)

    def get_save_state(self):
        return dict(self.__dict__)

    def refined(self, factor):
        """ The same settings with modes, steps, panels and check nodes scaled by factor. """
        state = self.get_save_state()
        state['check_time_nodes'] = max(1, int(round(self.check_time_nodes * factor)))
        state['n_modes'] = int(round(self.n_modes * factor))
        state['time_steps'] = max(1, int(round(self.time_steps * factor)))
        state['chain_panels'] = max(1, int(round(self.chain_panels * factor)))
        return PerturbationConfig(**state)


class EngineInputs(object):
    """ Everything the engine is built from. """

    def __init__(self, params, domain, drift, rD=None, cfg=None):
        check_consistent(params, domain)
        if drift.domain.dim != domain.dim:
            raise RejectedInput("drift and domain dimensions differ")
        self.params = params
        self.domain = domain
        self.drift  = drift
        self.rD     = rD or SpectralKernelEvaluator(params, domain)
        self.cfg    = cfg or PerturbationConfig()
        self.ctx    = comparison.ComparisonContext(params, domain)
        self.delta0 = self.cfg.delta0
        self.smallness = []
        if self.delta0 is not None and self.delta0 > params.horizon_T * (1.0 + 1e-12):
            raise RejectedInput("delta0 must not exceed horizon_T")

    def derived(self, cfg):
        """ Same problem, other numerical settings. """
        other = EngineInputs(self.params, self.domain, self.drift, self.rD, cfg)
        other.delta0 = self.delta0 if cfg.delta0 is None else cfg.delta0
        return other


def mode_rule(domain, count, n):
    """ Quadrature that integrates products of the first `count` modes and their gradients. """
    if domain.dim == 1:
        return quadrature.domain_rule(domain, n, boundary_levels=10, panels=count)
    if domain.dim == 2:
        n_angle = 4 * int(np.ceil(2.0 * np.sqrt(count))) + 8
    else:
        n_angle = 2 * int(np.ceil(2.0 * count ** (1.0 / 3.0))) + 6
    radial = np.linspace(0.0, domain.radius, 9)[1:-1]
    return quadrature.ball_rule(domain, n, n_angle, 8, radial)


class ModalDrift(object):
    """ B(r)_{nm} = int_D phi_n b(r,.).grad phi_m on the first N modes. """

    def __init__(self, inputs, count):
        self.drift   = inputs.drift
        self.basis   = inputs.rD.basis(count)
        self.rates   = self.basis.eigenvalues ** (inputs.params.alpha / 2.0)
        self.nodes, self.weights = mode_rule(inputs.domain, count, inputs.cfg.space_nodes)
        self.weighted_phi = self.basis.values(self.nodes) * self.weights[:, None]
        self.grad_phi = self.basis.gradients(self.nodes)
        logger.debug("drift matrix on %d modes from %d quadrature nodes", count, len(self.weights))

    @property
    def count(self):
        return self.basis.count

    def matrix(self, r):
        b = self.drift(r, self.nodes)
        return self.weighted_phi.T @ np.einsum('znd,zd->zn', self.grad_phi, b)

    def averaged(self, lo, hi, n):
        if self.drift.time_independent:
            return self.matrix(lo)
        nodes, weights = quadrature.gauss_legendre(lo, hi, n)
        return sum(w * self.matrix(r) for r, w in zip(nodes, weights)) / (hi - lo)


class Contour(object):
    """ J points eps_j = radius exp(2 pi i j / J). """

    def __init__(self, points, radius):
        self.points = int(points)
        self.radius = float(radius)
        self.eps = self.radius * np.exp(2j * np.pi * np.arange(self.points) / self.points)

    def coefficients(self, samples, terms):
        """ Taylor coefficients 0..terms from samples stacked along axis 0. """
        c = np.fft.fft(samples, axis=0)[:terms + 1] / self.points
        powers = self.radius ** np.arange(terms + 1)
        return (c / powers.reshape((-1,) + (1,) * (samples.ndim - 1))).real


class DiagonalPropagator(object):
    """ exp(tau (A + eps_j B)) for a time-independent B by eigendecomposition. """

    def __init__(self, rates, B, contour):
        self.contour = contour
        self.modes = []
        self.worst_condition = 1.0
        A = np.diag(-rates).astype(complex)
        for eps in contour.eps:
            mu, V = linalg.eig(A + eps * B)
            self.worst_condition = max(self.worst_condition, float(np.linalg.cond(V)))
            self.modes.append((mu, V, linalg.inv(V)))

    def matrices(self, s, t):
        tau = t - s
        return np.stack([(V * np.exp(tau * mu)[None, :]) @ Vinv for mu, V, Vinv in self.modes])


class SteppedPropagator(object):
    """ Ordered products of per-step exponentials on the lattice k * step. """

    def __init__(self, rates, modal, contour, step, nodes):
        self.A       = np.diag(-rates).astype(complex)
        self.modal   = modal
        self.contour = contour
        self.step    = float(step)
        self.nodes   = int(nodes)
        self._steps  = collections.OrderedDict()

    def _piece(self, lo, hi):
        B = self.modal.averaged(lo, hi, self.nodes)
        return np.stack([linalg.expm((hi - lo) * (self.A + eps * B)) for eps in self.contour.eps])

    def _full(self, k):
        if k in self._steps:
            self._steps.move_to_end(k)
            return self._steps[k]
        value = self._piece(k * self.step, (k + 1) * self.step)
        self._steps[k] = value
        if len(self._steps) > STEP_CACHE:
            self._steps.popitem(last=False)
        logger.debug("propagator step %d built", k)
        return value

    def matrices(self, s, t):
        h = self.step
        first = int(np.ceil(s / h - 1e-9))
        last = int(np.floor(t / h + 1e-9))
        edges = [s] + [k * h for k in range(first, last + 1) if s < k * h < t] + [t]
        out = None
        for lo, hi in zip(edges[:-1], edges[1:]):
            k = int(round(lo / h))
            aligned = abs(lo - k * h) < 1e-12 * h and abs(hi - (k + 1) * h) < 1e-12 * h
            piece = self._full(k) if aligned else self._piece(lo, hi)
            out = piece if out is None else np.matmul(out, piece)
        return out


def make_propagator(inputs, modal, delta0):
    cfg = inputs.cfg
    T = inputs.params.horizon_T
    probe_times = [0.0] if inputs.drift.time_independent else [0.0, 0.5 * T, T]
    norm = max(np.linalg.norm(modal.matrix(r), 2) for r in probe_times)
    radius = min(1.0, 1.0 / (delta0 * norm)) if norm > 0 else 1.0
    contour = Contour(cfg.contour_points, radius)
    if inputs.drift.time_independent:
        prop = DiagonalPropagator(modal.rates, modal.matrix(0.0), contour)
        if prop.worst_condition < COND_LIMIT:
            logger.debug("diagonalized propagator, eigenvector condition %.3g, contour radius %.3g",
                         prop.worst_condition, radius)
            return prop
        logger.warning("eigenvectors of A + eps B conditioned at %.3g; stepping instead",
                       prop.worst_condition)
    return SteppedPropagator(modal.rates, modal, contour, delta0 / cfg.time_steps, cfg.step_nodes)


class SpectralAction(object):
    """ A smooth f through its first modes: f_hat, -(-Delta)^{alpha/2} f and R^D_tau f. """

    def __init__(self, inputs, f):
        cfg = inputs.cfg
        count = min(cfg.generator_modes, inputs.rD.cap)
        self.f = f
        self.basis = inputs.rD.basis(count)
        self.rates = self.basis.eigenvalues ** (inputs.params.alpha / 2.0)
        nodes, weights = mode_rule(inputs.domain, count, cfg.space_nodes)
        self.coefficients = self.basis.values(nodes).T @ (weights * f(nodes))
        scaled = np.abs(self.rates * self.coefficients)
        tail = float(np.max(scaled[-max(count // 4, 1):]))
        if tail > COEFFICIENT_TAIL * float(np.max(scaled)):
            raise TruncationError("spectral coefficients of f have not decayed over %d modes "
                                  "(tail %.3g)" % (count, tail), tail)

    def fractional(self, x):
        """ (-(-Delta)^{alpha/2}) f """
        return -(self.basis.values(x) @ (self.rates * self.coefficients))

    def heat(self, tau, x, gradient=False):
        """ R^D_tau f or its gradient. """
        c = np.exp(-tau * self.rates) * self.coefficients
        if gradient:
            return np.einsum('xnd,n->xd', self.basis.gradients(x), c)
        return self.basis.values(x) @ c


class PerturbedKernelEvaluator(object):
    """ r^{D,b}(s,x;t,y), its Picard terms and x-gradients. """

    def __init__(self, inputs, delta0):
        self.inputs = inputs
        self.params = inputs.params
        self.domain = inputs.domain
        self.drift  = inputs.drift
        self.rD     = inputs.rD
        self.cfg    = inputs.cfg
        self.ctx    = inputs.ctx
        self.delta0 = float(delta0)
        self.terms_max = self.cfg.max_terms
        self.n_terms = 0 if self.drift.is_zero else self.terms_max
        self.term_sups = []
        self.grad_sups = []
        self.min_margin = None
        self.tail_bound = 0.0
        self.modal = None
        self.propagator = None
        self._series = collections.OrderedDict()
        if not self.drift.is_zero:
            self.modal = ModalDrift(inputs, self.cfg.n_modes)
            self.propagator = make_propagator(inputs, self.modal, self.delta0)
        logger.info("perturbed kernel: delta0=%g, %d modes, up to %d terms, %s", self.delta0,
                    self.cfg.n_modes, self.terms_max,
                    type(self.propagator).__name__ if self.propagator else "zero drift")

    # -- modal series ------------------------------------------------------------

    def series(self, s, t):
        """ C_k(s, t) for k = 0..max_terms as a (K+1, N, N) array. """
        key = round(t - s, 14) if self.drift.time_independent else (round(s, 14), round(t, 14))
        if key in self._series:
            self._series.move_to_end(key)
            return self._series[key]
        samples = self.propagator.matrices(s, t)
        value = self.propagator.contour.coefficients(samples, self.terms_max)
        self._series[key] = value
        if len(self._series) > SERIES_CACHE:
            self._series.popitem(last=False)
        return value

    def _check_window(self, s, t):
        s, t = float(s), float(t)
        if not 0.0 <= s < t:
            raise RejectedInput("need 0 <= s < t")
        if t - s > self.delta0 * (1.0 + 1e-9):
            raise RejectedInput("t - s = %g exceeds the contraction window %g" % (t - s, self.delta0))
        return s, t

    def _points(self, x, y, matrix):
        px, sx = as_points(x, self.domain.dim)
        py, sy = as_points(y, self.domain.dim)
        if not matrix and px.shape[0] != py.shape[0]:
            if px.shape[0] == 1:
                px = np.repeat(px, py.shape[0], axis=0)
            elif py.shape[0] == 1:
                py = np.repeat(py, px.shape[0], axis=0)
            else:
                raise RejectedInput("pairwise evaluation needs equal point counts")
        return px, py, sx and sy and not matrix

    def _terms(self, s, t, px, py, gradient, matrix):
        tau = t - s
        if gradient:
            lead = self.rD.grad_rD_matrix(tau, px, py) if matrix else self.rD.grad_rD(tau, px, py)
        else:
            lead = self.rD.rD_matrix(tau, px, py) if matrix else self.rD.rD(tau, px, py)
        lead = np.asarray(lead, dtype=float)
        out = np.zeros((self.terms_max + 1,) + lead.shape)
        out[0] = lead
        if self.drift.is_zero:
            return out
        C = self.series(s, t)[1:]
        right = np.einsum('knm,ym->kny', C, self.modal.basis.values(py))
        if gradient:
            rows = self.modal.basis.gradients(px)
            out[1:] = np.einsum('xnd,kny->kxyd' if matrix else 'xnd,knx->kxd', rows, right)
        else:
            rows = self.modal.basis.values(px)
            out[1:] = np.einsum('xn,kny->kxy' if matrix else 'xn,knx->kx', rows, right)
        return out

    def terms(self, s, x, t, y, gradient=False, matrix=False):
        """ All Picard terms r_0..r_K (or their x-gradients) stacked on axis 0. """
        s, t = self._check_window(s, t)
        px, py, single = self._points(x, y, matrix)
        out = self._terms(s, t, px, py, gradient, matrix)
        return out[:, 0] if single else out

    def picard_term(self, k, s, x, t, y):
        if not 0 <= int(k) <= self.terms_max:
            raise RejectedInput("term index must lie in 0..%d" % self.terms_max)
        return self.terms(s, x, t, y)[int(k)]

    def _sum(self, s, t, px, py, gradient, matrix):
        return np.sum(self._terms(s, t, px, py, gradient, matrix)[:self.n_terms + 1], axis=0)

    def value(self, s, x, t, y):
        """ Pairwise r^{D,b}(s,x;t,y); spans beyond delta0 are chained. """
        px, py, single = self._points(x, y, False)
        if float(t) - float(s) > self.delta0 * (1.0 + 1e-9):
            out = np.array([self.chain(s, xi, t, yi) for xi, yi in zip(px, py)])
            return float(out[0]) if single else out
        s, t = self._check_window(s, t)
        out = self._sum(s, t, px, py, False, False)
        return float(out[0]) if single else out

    __call__ = value

    def value_matrix(self, s, t, xs, ys):
        s, t = self._check_window(s, t)
        px, py, _ = self._points(xs, ys, True)
        return self._sum(s, t, px, py, False, True)

    def grad_perturbed(self, s, x, t, y):
        """ Pairwise grad_x r^{D,b}(s,x;t,y), termwise. """
        s, t = self._check_window(s, t)
        px, py, single = self._points(x, y, False)
        out = self._sum(s, t, px, py, True, False)
        return out[0] if single else out

    def grad_matrix(self, s, t, xs, ys):
        s, t = self._check_window(s, t)
        px, py, _ = self._points(xs, ys, True)
        return self._sum(s, t, px, py, True, True)

    # -- build-time lattice checks -------------------------------------------------

    def build(self):
        """ Lattice sups of |r_k|/q^D and |grad r_k|/(gradient scale), term count and positivity. """
        cfg = self.cfg
        points = smallness.probe_points(self.inputs)
        taus = self.delta0 * np.arange(1, cfg.time_steps + 1) / cfg.time_steps
        sups = np.zeros(self.terms_max + 1)
        grad_sups = np.zeros(self.terms_max + 1)
        margin = np.inf
        for s in smallness._starts(self.inputs, self.delta0):
            for tau in taus:
                q = comparison.outer(comparison.qD, self.ctx, tau, points, points)
                g = comparison.outer(comparison.gradient_scale, self.ctx, tau, points, points)
                values = self._terms(s, s + tau, points, points, False, True)
                grads = point_norm(self._terms(s, s + tau, points, points, True, True))
                sups = np.maximum(sups, np.max(np.abs(values) / q, axis=(1, 2)))
                grad_sups = np.maximum(grad_sups, np.max(grads / g, axis=(1, 2)))
                lower = values[0] - np.sum(np.abs(values[1:]), axis=0)
                margin = min(margin, float(np.min(lower / q)))
        self.term_sups = [float(v) for v in sups]
        self.grad_sups = [float(v) for v in grad_sups]
        self.min_margin = margin
        if not margin > 0:
            message = "perturbed kernel: lower bound r^D - sum |r_k| fails on the lattice (min %.3g)" % margin
            logger.warning(message)
            raise PositivityError(message, margin)
        if not self.drift.is_zero:
            self._check_geometric()
            self._choose_terms()
        logger.info("lattice term sups %s, using %d terms", ["%.3g" % v for v in self.term_sups],
                    self.n_terms)
        return self

    def _check_geometric(self):
        """ sup_k <= sup_1 theta^{k-1} on the lattice, theta twice the schedule's contraction target. """
        theta = 2.0 * self.cfg.contraction_target
        first = self.term_sups[1]
        for k in range(2, len(self.term_sups)):
            if self.term_sups[k] < self.cfg.series_tol:
                break
            if self.term_sups[k] > first * theta ** (k - 1) * (1.0 + 1e-9):
                message = ("Picard term %d has lattice sup %.3g above the geometric bound %.3g (ratio %g)"
                           % (k, self.term_sups[k], first * theta ** (k - 1), theta))
                logger.warning(message)
                raise NonContractiveDriftError(message, self.decay_ratios())

    def _choose_terms(self):
        tol = self.cfg.series_tol
        for k in range(1, self.terms_max + 1):
            if self.term_sups[k] < tol:
                self.n_terms = k
                self.tail_bound = 0.0
                return
        self.n_terms = self.terms_max
        ratio = max(self.decay_ratios()[-2:] or [1.0])
        last = self.term_sups[-1]
        self.tail_bound = last * ratio / (1.0 - ratio) if ratio < 1.0 else float('inf')
        message = ("Picard series not below %g after %d terms; geometric tail bound %.3g"
                   % (tol, self.terms_max, self.tail_bound))
        logger.warning(message)
        warnings.warn(message, TruncationWarning)

    def decay_ratios(self, grad=False):
        """ sup_{k+1}/sup_k for k >= 1. """
        sups = self.grad_sups if grad else self.term_sups
        return [sups[k + 1] / sups[k] for k in range(1, len(sups) - 1) if sups[k] > 0]

    def term_rows(self):
        return [{'k': k, 'sup_ratio': self.term_sups[k], 'grad_sup_ratio': self.grad_sups[k]}
                for k in range(len(self.term_sups))]

    # -- spatial quadrature ----------------------------------------------------------

    def space_rule(self, centers, scales, panels=None):
        panels = self.cfg.chain_panels if panels is None else panels
        return quadrature.domain_rule(self.domain, self.cfg.space_nodes, centers, scales, panels=panels)

    def _time_rule(self, s, t):
        """ Composite Gauss-Legendre on (s, t), panels halving toward both ends. """
        tau = t - s
        breaks = s + tau * np.array([0.0, 0.125, 0.25, 0.5, 0.75, 0.875, 1.0])
        return quadrature.composite(breaks, self.cfg.check_time_nodes)

    def windows(self, s, t, splits=None):
        """ Window edges from s to t, equal lengths <= delta0 unless splits are given. """
        s, t = float(s), float(t)
        if splits is None:
            m = max(int(np.ceil((t - s) / self.delta0 - 1e-9)), 1)
            return s + (t - s) * np.arange(m + 1) / m
        splits = np.asarray(splits, dtype=float)
        if np.any(splits <= 0) or np.any(splits > self.delta0 * (1.0 + 1e-9)):
            raise RejectedInput("chain windows must lie in (0, delta0]")
        if abs(np.sum(splits) - (t - s)) > 1e-12 * max(t, 1.0):
            raise RejectedInput("chain windows must add up to t - s")
        return s + np.concatenate([[0.0], np.cumsum(splits)])

    def _propagate(self, edges, nodes, weights, values):
        """ Apply the windows edges[1:] right to left to values on nodes; returns values on nodes. """
        cache = {}
        for lo, hi in reversed(list(zip(edges[1:-1], edges[2:]))):
            key = round(hi - lo, 14) if self.drift.time_independent else (lo, hi)
            if key not in cache:
                cache = {key: self.value_matrix(lo, hi, nodes, nodes)}
            values = cache[key] @ (weights * values)
        return values

    def chain(self, s, x, t, y, splits=None):
        """ r^{D,b}(s,x;t,y) composed over windows by Chapman-Kolmogorov. """
        px, _ = as_points(x, self.domain.dim)
        py, _ = as_points(y, self.domain.dim)
        if px.shape[0] != 1 or py.shape[0] != 1:
            raise RejectedInput("chain evaluates one pair at a time")
        edges = self.windows(s, t, splits)
        if len(edges) == 2:
            return float(self._sum(edges[0], edges[1], px, py, False, False)[0])
        scale = float(np.min(np.diff(edges))) ** (1.0 / self.params.alpha)
        nodes, w = self.space_rule([px[0], py[0]], [scale, scale])
        tail = self.value_matrix(edges[-2], edges[-1], nodes, py)[:, 0]
        inner = self._propagate(edges[:-1], nodes, w, tail)
        head = self.value_matrix(edges[0], edges[1], px, nodes)[0]
        return float(head @ (w * inner))

    # -- semigroup ------------------------------------------------------------------

    def apply(self, s, t, f, x, splits=None):
        """ R^{D,b}_{s,t} f at the points x. """
        px, single = as_points(x, self.domain.dim)
        edges = self.windows(s, t, splits)
        a = self.params.alpha
        if len(edges) == 2:
            out = np.empty(px.shape[0])
            for i, xi in enumerate(px):
                nodes, w = self.space_rule([xi], [(t - s) ** (1.0 / a)])
                out[i] = self.value_matrix(s, t, xi, nodes)[0] @ (w * f(nodes))
        else:
            scale = float(np.min(np.diff(edges))) ** (1.0 / a)
            nodes, w = self.space_rule(list(px), [scale] * px.shape[0])
            inner = self._propagate(edges, nodes, w, f(nodes))
            out = self.value_matrix(edges[0], edges[1], px, nodes) @ (w * inner)
        return float(out[0]) if single else out

    def semigroup_apply(self, s, t, f):
        """ x -> R^{D,b}_{s,t} f(x) """
        def applied(x):
            return self.apply(s, t, f, x)
        return applied

    def mass(self, s, x, t):
        """ int_D r^{D,b}(s,x;t,y) dy """
        return self.apply(s, t, Constant(self.domain), x)

    def continuity_gaps(self, s, f, spans, x=None):
        """ sup_x |R^{D,b}_{s,s+tau} f - f| over the probe points, one value per tau in spans. """
        px = smallness.probe_points(self.inputs) if x is None else as_points(x, self.domain.dim)[0]
        values = f(px)
        return [float(np.max(np.abs(self.apply(s, s + tau, f, px) - values))) for tau in spans]

    def generator_residual(self, s, t, f, x=None):
        """ sup_x |R_{s,t} f - f - int_s^t R_{s,r} L_r f dr|, L_r f = -(-Delta)^{alpha/2} f + b(r).grad f. """
        px = smallness.probe_points(self.inputs) if x is None else as_points(x, self.domain.dim)[0]
        action = SpectralAction(self.inputs, f)
        lhs = self.apply(s, t, f, px) - f(px)
        nodes, weights = quadrature.gauss_legendre(s, t, self.cfg.check_time_nodes)
        rhs = np.zeros(px.shape[0])
        for r, w in zip(nodes, weights):
            def generated(z, r=r):
                return action.fractional(z) + np.sum(self.drift(r, z) * f.gradient(z), axis=1)
            rhs += w * self.apply(s, r, generated, px)
        return float(np.max(np.abs(lhs - rhs)))

    def semigroup_duhamel_residual(self, s, t, f, x=None):
        """ sup_x |R^{D,b}_{s,t} f - R_{s,t} f - int_s^t R^{D,b}_{s,r}(b(r).grad R_{r,t} f) dr| """
        px = smallness.probe_points(self.inputs) if x is None else as_points(x, self.domain.dim)[0]
        action = SpectralAction(self.inputs, f)
        lhs = self.apply(s, t, f, px) - action.heat(t - s, px)
        nodes, weights = quadrature.gauss_legendre(s, t, self.cfg.check_time_nodes)
        rhs = np.zeros(px.shape[0])
        for r, w in zip(nodes, weights):
            def pushed(z, r=r):
                return np.sum(self.drift(r, z) * action.heat(t - r, z, gradient=True), axis=1)
            rhs += w * self.apply(s, r, pushed, px)
        return float(np.max(np.abs(lhs - rhs)))

    # -- independent-quadrature identities ------------------------------------------

    def _space_time(self, s, t, px, py, integrand):
        """ int_s^t int_D integrand(r, z) dz dr for all (x, y) pairs; integrand gives
            (left (nx, nz), right (nz, ny, d)) and the drift is contracted in between.
        """
        a = self.params.alpha
        total = np.zeros((px.shape[0], py.shape[0]))
        centers = list(px) + list(py)
        nodes, weights = self._time_rule(s, t)
        for r, wr in zip(nodes, weights):
            scales = [(r - s) ** (1.0 / a)] * px.shape[0] + [(t - r) ** (1.0 / a)] * py.shape[0]
            z, wz = self.space_rule(centers, scales, self.cfg.chain_panels // 2)
            for lo in range(0, len(wz), CHUNK):
                zc = z[lo:lo + CHUNK]
                left, right = integrand(r, zc)
                pushed = np.einsum('zyd,zd->zy', right, self.drift(r, zc))
                total += wr * (left * wz[None, lo:lo + CHUNK]) @ pushed
        return total

    def _pairs(self, x, y):
        px, py, single = self._points(x, y, False)
        return px, py, single

    def duhamel_residual(self, form, s, x, t, y):
        """ Relative residual of the first-kind (perturbed kernel on the left) or
            second-kind (perturbed kernel on the right) Duhamel equation.
        """
        s, t = self._check_window(s, t)
        px, py, single = self._pairs(x, y)
        if form == FIRST_KIND:
            def integrand(r, z):
                return self.value_matrix(s, r, px, z), self.rD.grad_rD_matrix(t - r, z, py)
        elif form == SECOND_KIND:
            def integrand(r, z):
                return self.rD.rD_matrix(r - s, px, z), self.grad_matrix(r, t, z, py)
        else:
            raise RejectedInput("unknown Duhamel form %r" % (form,))
        integral = np.diagonal(self._space_time(s, t, px, py, integrand))
        lhs = self._sum(s, t, px, py, False, False)
        rhs = np.asarray(self.rD.rD(t - s, px, py)) + integral
        out = np.abs(lhs - rhs) / np.abs(lhs)
        return float(out[0]) if single else out

    def right_picard_term(self, k, s, x, t, y):
        """ r_k by the right recursion int int r_0(s,x;r,z) b(r,z).grad_z r_{k-1}(r,z;t,y). """
        k = int(k)
        if not 1 <= k <= self.terms_max:
            raise RejectedInput("right recursion needs 1 <= k <= %d" % self.terms_max)
        s, t = self._check_window(s, t)
        px, py, single = self._pairs(x, y)
        if self.drift.is_zero:
            out = np.zeros(px.shape[0])
            return float(out[0]) if single else out

        def integrand(r, z):
            return self.rD.rD_matrix(r - s, px, z), self._terms(r, t, z, py, True, True)[k - 1]
        out = np.diagonal(self._space_time(s, t, px, py, integrand))
        return float(out[0]) if single else out

    def picard_ck_residual(self, n, s, r, t, x, y):
        """ |sum_m int r_m(s,x;r,z) r_{n-m}(r,z;t,y) dz - r_n(s,x;t,y)| / r^D(t-s,x,y) """
        n = int(n)
        if not 0 <= n <= self.terms_max:
            raise RejectedInput("term index must lie in 0..%d" % self.terms_max)
        if not s < r < t:
            raise RejectedInput("need s < r < t")
        s, t = self._check_window(s, t)
        px, py, single = self._pairs(x, y)
        a = self.params.alpha
        scales = [(r - s) ** (1.0 / a)] * px.shape[0] + [(t - r) ** (1.0 / a)] * py.shape[0]
        z, w = self.space_rule(list(px) + list(py), scales)
        left = self._terms(s, r, px, z, False, True)
        right = self._terms(r, t, z, py, False, True)
        composed = sum((left[m] * w[None, :]) @ right[n - m] for m in range(n + 1))
        direct = self._terms(s, t, px, py, False, False)[n]
        scale = np.asarray(self.rD.rD(t - s, px, py))
        out = np.abs(np.diagonal(composed) - direct) / scale
        return float(out[0]) if single else out

    def ck_residual(self, s, r, t, x, y):
        """ |int r^{D,b}(s,x;r,z) r^{D,b}(r,z;t,y) dz - r^{D,b}(s,x;t,y)| relative, spans up to 2 delta0.

            Beyond delta0 the reference value is chained over one window more
            than the default cover, so it is never the two-window composition
            through r itself.
        """
        if not s < r < t:
            raise RejectedInput("need s < r < t")
        px, py, single = self._pairs(x, y)
        a = self.params.alpha
        edges = self.windows(s, t)
        windows = len(edges) - 1
        splits = None if windows == 1 else [(t - s) / (windows + 1)] * (windows + 1)
        out = np.empty(px.shape[0])
        for i, (xi, yi) in enumerate(zip(px, py)):
            z, w = self.space_rule([xi, yi], [(r - s) ** (1.0 / a), (t - r) ** (1.0 / a)])
            composed = (self.value_matrix(s, r, xi, z)[0] * w) @ self.value_matrix(r, t, z, yi)[:, 0]
            direct = self.chain(s, xi, t, yi, splits)
            out[i] = abs(composed - direct) / abs(direct)
        return float(out[0]) if single else out

    def holder_perturbed_ratio(self, s, x, x2, t, y, gamma):
        """ |grad r^{D,b}(s,x;t,y) - grad r^{D,b}(s,x';t,y)| over
            |x-x'|^gamma (t-s)^{-gamma/alpha} q^D(t-s,x~,y)/(rho(x~) ^ (|x~-y|+(t-s)^{1/alpha})),
            x~ the one of x, x' closer to y.
        """
        if not 0.0 < gamma < 1.0:
            raise RejectedInput("gamma must lie in (0, 1)")
        s, t = self._check_window(s, t)
        px, single = as_points(x, self.domain.dim)
        qx, _ = as_points(x2, self.domain.dim)
        py, _ = as_points(y, self.domain.dim)
        n = max(px.shape[0], qx.shape[0], py.shape[0])
        px, qx, py = [np.broadcast_to(p, (n, self.domain.dim)) for p in (px, qx, py)]
        lhs = point_norm(self.grad_perturbed(s, px, t, py) - self.grad_perturbed(s, qx, t, py))
        closer = (point_norm(px - py) <= point_norm(qx - py))[:, None]
        xt = np.where(closer, px, qx)
        tau = t - s
        rhs = (point_norm(px - qx) ** gamma * tau ** (-gamma / self.params.alpha)
               * comparison.gradient_scale(self.ctx, tau, xt, py))
        ratio = np.where(lhs == 0.0, 0.0, lhs / np.where(rhs > 0, rhs, 1.0))
        return float(ratio[0]) if single and n == 1 else ratio


def build_perturbed(inputs):
    """ Pick the contraction window if the config leaves it open, then build and check the lattice. """
    delta0 = inputs.delta0 if inputs.delta0 is not None else smallness.pick_delta0(inputs)
    inputs.delta0 = delta0
    return PerturbedKernelEvaluator(inputs, delta0).build()


def refinement_study(ev, measure, factor=2.0):
    """ (measure(ev), measure of a rebuild with modes, steps, panels and check nodes scaled by factor). """
    cfg = ev.cfg.refined(factor)
    cfg.delta0 = ev.delta0
    fine = PerturbedKernelEvaluator(ev.inputs.derived(cfg), ev.delta0).build()
    coarse_value, fine_value = measure(ev), measure(fine)
    logger.info("refinement by %g: %s -> %s", factor, coarse_value, fine_value)
    return coarse_value, fine_value


def uniqueness_probe(inputs, factor=1.0, points=None):
    """ sup relative gap between two builds with unrelated mode counts, lattices and rules. """
    delta0 = inputs.delta0 if inputs.delta0 is not None else smallness.pick_delta0(inputs)
    first = inputs.cfg.refined(factor)
    second = inputs.cfg.refined(1.5 * factor)
    second.space_nodes = first.space_nodes + 4
    second.contour_points = first.contour_points + 8
    builds = []
    for cfg in (first, second):
        cfg.delta0 = delta0
        builds.append(PerturbedKernelEvaluator(inputs.derived(cfg), delta0))
    points = smallness.probe_points(inputs) if points is None else as_points(points, inputs.domain.dim)[0]
    gap = 0.0
    for s in smallness._starts(inputs, delta0):
        for frac in smallness.WINDOW_FRACTIONS:
            t = s + frac * delta0
            a = builds[0].value_matrix(s, t, points, points)
            b = builds[1].value_matrix(s, t, points, points)
            gap = max(gap, float(np.max(np.abs(a - b) / np.abs(a))))
    logger.info("uniqueness probe at refinement %g: sup relative gap %.3g", factor, gap)
    return gap
