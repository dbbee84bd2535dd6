"""Estimate suites. Each suite takes the Laboratory and returns Records.

    Bounded-ratio claims record the sweep's ratio range and the empirical
    constant c; thresholds come from the `verify` section of the config.
"""

import collections
import logging

import numpy as np

from .domain.grid import random_points, probe_grid
from .domain.model import ModelParams, point_norm
from .errors import RejectedInput
from .kernels import comparison, gaussian, spectral
from .subordinator import stable
from .kato.drift import DriftField, CONSTANT, CLOSED_FORM, ZERO
from .kato import functional
from .duhamel import engine, smallness
from .duhamel.testfunctions import EigenMode
from .montecarlo import paths
from .report import Record

logger = logging.getLogger(__name__)

PP_SEQUENCE = (0.2, 0.02, 0.002, 0.0002)
THREE_P_TIMES = (0.05, 0.1, 0.2)
HOLDER_EXPONENTS = (0.25, 0.5, 0.75)
LAPLACE_BETAS = (0.55, 0.75, 0.95)
LAPLACE_TIMES = (0.1, 0.5, 1.0, 2.0)
LAPLACE_LAMBDAS = (0.5, 1.0, 2.0, 4.0)
UPPER_LAMBDAS = (0.24, 0.2, 0.15, 0.1, 0.05)
LOWER_LAMBDAS = (0.26, 0.3, 0.4, 0.5, 1.0)
BOUNDARY_RHOS = (1e-2, 1e-3)
HOLDER_GAMMA = 0.25
CONTINUITY_SPANS = (0.1, 0.05, 0.025)
REFINEMENT_PROBES = 5
KATO_FACTOR = 3.0


def _thresholds(lab):
    return lab.config['verify']


def _sweep(lab, name, n=None, times=None):
    sweep = lab.config['sweep']
    T = lab.params.horizon_T
    times = [t for t in (sweep['times'] if times is None else times) if t <= T] or [T]
    return comparison.sweep_tuples(lab.ctx, lab.rng(name), sweep['n_tuples'] if n is None else n, times,
                                   sweep['rho_min'])


def _by_time(tuples, fn):
    """ Evaluate a pairwise fn(t, x, y) per distinct t of the sweep. """
    out = np.empty(len(tuples['t']))
    for t in np.unique(tuples['t']):
        sel = tuples['t'] == t
        out[sel] = fn(float(t), tuples['x'][sel], tuples['y'][sel])
    return out


# -- domain ------------------------------------------------------------------------

def domain_lipschitz(lab):
    rng = lab.rng('domain_lipschitz')
    x = random_points(rng, lab.domain, 10000)
    y = random_points(rng, lab.domain, 10000)
    ratios = np.abs(lab.domain.rho(x) - lab.domain.rho(y)) / point_norm(x - y)
    return [Record.from_ratios('domain_lipschitz', 'rho is 1-Lipschitz', ratios, cap=1.0 + 1e-12)]


def eigen_orthonormality(lab):
    basis = lab.rD.basis(10)
    nodes, w = engine.mode_rule(lab.domain, basis.count, 16)
    phi = basis.values(nodes)
    gram = phi.T @ (w[:, None] * phi)
    err = np.abs(gram - np.eye(basis.count))
    tol = _thresholds(lab)['orthonormal_tol']
    return [Record('eigen_orthonormality', '<phi_m, phi_n> = delta_mn, m,n <= 10', err.size, float(np.min(err)),
                   float(np.max(err)), float(np.max(err)), float(np.max(err)) < tol)]


def _boundary_points(domain, rho, rng, n=16):
    if domain.dim == 1:
        lo, hi = domain.bounding_box()
        return np.array([[lo[0] + rho], [hi[0] - rho]])
    dirs = rng.standard_normal((n, domain.dim))
    dirs /= point_norm(dirs)[:, None]
    return domain.center + (domain.radius - rho) * dirs


def eigen_boundary_decay(lab):
    basis = lab.rD.basis(10)
    rng = lab.rng('eigen_boundary_decay')
    levels = []
    for rho in BOUNDARY_RHOS:
        pts = _boundary_points(lab.domain, rho, rng)
        levels.append(np.abs(basis.values(pts)) / rho)
    outer, inner = float(np.max(levels[0])), float(np.max(levels[1]))
    ratios = np.concatenate([v.ravel() for v in levels])
    passed = np.isfinite(inner) and inner <= (1.0 + _thresholds(lab)['stability']) * outer
    return [Record('eigen_boundary_decay', '|phi_n(x)| <= C rho(x) near the boundary', ratios.size,
                   float(np.min(ratios)), float(np.max(ratios)), inner, passed)]


# -- comparison kernels --------------------------------------------------------------

def qd_symmetry(lab):
    tup = _sweep(lab, 'qd_symmetry')
    ctx = lab.ctx
    gaps = []
    for fn in (comparison.q_alpha, comparison.qD):
        a = np.asarray(fn(ctx, tup['t'], tup['x'], tup['y']))
        b = np.asarray(fn(ctx, tup['t'], tup['y'], tup['x']))
        gaps.append(np.abs(a - b) / np.abs(a))
    gaps = np.concatenate(gaps)
    return [Record('qd_symmetry', 'q_alpha and qD symmetric in x, y', gaps.size, float(np.min(gaps)),
                   float(np.max(gaps)), float(np.max(gaps)), float(np.max(gaps)) < 1e-12)]


def sharp_form(lab):
    tup = _sweep(lab, 'sharp_form')
    ratios = comparison.sharp_form_ratio(lab.ctx, tup['t'], tup['x'], tup['y'])
    return [Record.from_ratios('sharp_form', 'q_alpha ~ 1 ^ rho(x)rho(y)/(|x-y|+t^{1/alpha})^2', ratios,
                               _thresholds(lab)['ratio_cap'], lower=True)]


def three_p_q(lab):
    tup = _sweep(lab, 'three_p_q')
    ratios = comparison.three_p_q_ratio(lab.ctx, tup['t'], tup['s'], tup['x'], tup['y'], tup['z'])
    return [Record.from_ratios('three_p_q', 'q_alpha 3-P against squared boundary factors', ratios,
                               _thresholds(lab)['ratio_cap'])]


def varrho_product(lab):
    tup = _sweep(lab, 'varrho_product')
    ratios = comparison.varrho_product_ratio(lab.ctx, tup['t'], tup['s'], tup['x'], tup['y'], tup['z'])
    return [Record.from_ratios('varrho_product', 'varrho^1 product against (t^s)(varrho^0 + varrho^0)', ratios,
                               _thresholds(lab)['ratio_cap'])]


def hat_equivalence(lab):
    """ Empirical comparability constants of both implications; pass means finite on the sweep. """
    tup = _sweep(lab, 'hat_equivalence')
    hats, rhos = comparison.hat_comparability(lab.ctx, tup['t'], tup['s'], tup['x'], tup['y'], tup['z'])
    forward = rhos[hats <= 1.0]
    backward = hats[rhos <= 1.0]
    records = []
    for name, values in (('hat_equivalence_forward', forward), ('hat_equivalence_backward', backward)):
        if values.size == 0:
            values = np.zeros(1)
        records.append(Record(name, 'q_hat comparability <=> varrho^0 comparability', values.size,
                              float(np.min(values)), float(np.max(values)), float(np.max(values)),
                              bool(np.all(np.isfinite(values)))))
    return records


def classical_three_p_failure(lab):
    """ The classical 3-P ratio at rho(x) = rho(y) on a decade sequence, z at the center. """
    domain = lab.domain
    T = lab.params.horizon_T
    t, s = 0.2 * T, 0.1 * T
    e = np.zeros(domain.dim)
    e[0] = 1.0
    values = []
    for rho in PP_SEQUENCE:
        x = domain.center + (domain.radius - rho) * e
        y = domain.center - (domain.radius - rho) * e
        values.append(comparison.remark_pp_ratio(lab.ctx, t, s, x, y, domain.center, lab.rD))
    values = np.asarray(values)
    factors = values[:-1] / values[1:]
    factor = _thresholds(lab)['pp_factor']
    return [Record('classical_three_p_failure', 'classical 3-P ratio -> 0 as rho(x)=rho(y) -> 0',
                   len(values), float(np.min(values)), float(np.max(values)), float(np.min(factors)),
                   bool(np.all(factors >= factor)))]


# -- Gaussian Dirichlet kernel -------------------------------------------------------

def _gaussian_sweep(lab, name):
    times = [t for t in lab.config['sweep']['times'] if t <= 0.1] or [0.1]
    return _sweep(lab, name, times=times)


def _fitted_records(lab, name, claim, form):
    tup = _gaussian_sweep(lab, name)
    ctx = lab.ctx
    p2 = _by_time(tup, lambda t, x, y: lab.gauss.p2(t, x, y))
    cap = _thresholds(lab)['ratio_cap']

    def ratio(lam):
        return p2 / _by_time(tup, lambda t, x, y: form(ctx, t, x, y, lam))
    records = []
    for suffix, lambdas, upper in (('upper', UPPER_LAMBDAS, True), ('lower', LOWER_LAMBDAS, False)):
        lam, extreme = gaussian.fit_lambda(ratio, lambdas, cap, upper)
        values = ratio(lam if lam is not None else lambdas[-1])
        constant = float(np.max(values)) if upper else float(1.0 / np.min(values))
        records.append(Record('%s_%s' % (name, suffix), '%s, lambda=%s' % (claim, lam), values.size,
                              float(np.min(values)), float(np.max(values)), constant, lam is not None))
    return records


def gaussian_boundary_bounds(lab):
    return _fitted_records(lab, 'gaussian_boundary', 'p2 ~ (1 ^ rho(x)rho(y)/t) xi0_lambda', gaussian.boundary_form)


def gaussian_q2_bounds(lab):
    return _fitted_records(lab, 'gaussian_q2', 'p2 ~ q2 xi0_lambda', gaussian.q2_form)


def gaussian_domination(lab):
    tup = _gaussian_sweep(lab, 'gaussian_domination')
    ratios = _by_time(tup, lambda t, x, y: gaussian.domination_ratio(lab.ctx, t, x, y, 0.2))
    return [Record.from_ratios('gaussian_domination', 'boundary form at 2 lambda <= C split form at lambda',
                               ratios, _thresholds(lab)['ratio_cap'])]


def gaussian_gradient(lab):
    tup = _gaussian_sweep(lab, 'gaussian_gradient')
    T = lab.params.horizon_T
    records = []
    for order in (1, 2):
        ratios = []
        for t in list(np.unique(tup['t'])) + [2.0 * T]:
            x, y = tup['x'], tup['y']
            value = gaussian.gradient_norm(lab.gauss, t, x, y, order)
            ratios.append(value / gaussian.gradient_form(lab.ctx, t, x, y, 0.2, order, T))
        records.append(Record.from_ratios('gaussian_gradient_j%d' % order,
                                          '|grad^j p2| <= C q_hat2 xi^j_lambda', np.concatenate(ratios),
                                          _thresholds(lab)['ratio_cap']))
        combined = _by_time(tup, lambda t, x, y: gaussian.gradient_norm(lab.gauss, t, x, y, order)
                            / gaussian.combined_gradient_form(lab.ctx, t, x, y, 0.15, order))
        records.append(Record.from_ratios('gaussian_gradient_combined_j%d' % order,
                                          '|grad^j p2| <= C (|x-y|+sqrt t)^{1-j}/(rho(x) ^ (|x-y|+sqrt t)) q2 xi0',
                                          combined, _thresholds(lab)['ratio_cap']))
    local = _by_time(tup, lambda t, x, y: gaussian.local_gradient_ratio(lab.ctx, lab.gauss, t, x, y))
    records.append(Record.from_ratios('gaussian_gradient_local', '|grad p2| <= C p2 / (rho(x) ^ sqrt t) locally',
                                      local, _thresholds(lab)['ratio_cap']))
    return records


def gaussian_ck(lab):
    rng = lab.rng('gaussian_ck')
    x = random_points(rng, lab.domain, 100, rho_min=1e-2)
    y = random_points(rng, lab.domain, 100, rho_min=1e-2)
    times = rng.choice([0.01, 0.05, 0.1], size=(100, 2))
    res = np.array([gaussian.ck_residual_p2(lab.gauss, t, s, xi, yi) for (t, s), xi, yi in zip(times, x, y)])
    return [Record('gaussian_ck', 'Chapman-Kolmogorov for p2', res.size, float(np.min(res)), float(np.max(res)),
                   float(np.max(res)), float(np.max(res)) < _thresholds(lab)['ck_tol'])]


# -- stable subordinator -------------------------------------------------------------

def subordinator_shape(lab):
    sub = stable.SubordinatorParams.from_model(lab.params)
    s = np.geomspace(1e-3, 1e3, 1000)
    mu = stable.density(sub, 1.0, s)
    steps = np.diff(mu)
    # underflowed tails give flat steps
    changes = int(np.sum(np.diff(np.sign(steps[steps != 0])) != 0))
    return [Record('subordinator_shape', 'mu(1, .) nonnegative and unimodal', s.size, float(np.min(mu)),
                   float(np.max(mu)), float(changes), bool(np.all(mu >= 0) and changes <= 1))]


def subordinator_convolution(lab):
    sub = stable.SubordinatorParams.from_model(lab.params)
    rng = lab.rng('subordinator_convolution')
    tuples = zip(rng.uniform(0.2, 1.0, 20), rng.uniform(0.2, 1.0, 20), rng.uniform(0.2, 3.0, 20))
    res = np.array([stable.convolution_residual(sub, t, t2, s) for t, t2, s in tuples])
    return [Record('subordinator_convolution', 'mu(t) * mu(t2) = mu(t+t2)', res.size, float(np.min(res)),
                   float(np.max(res)), float(np.max(res)), float(np.max(res)) < _thresholds(lab)['convolution_tol'])]


def subordinator_laplace(lab):
    res = np.array([stable.laplace_check(stable.SubordinatorParams(beta), t, lam)
                    for beta in LAPLACE_BETAS for t in LAPLACE_TIMES for lam in LAPLACE_LAMBDAS])
    return [Record('subordinator_laplace', 'int exp(-lambda s) mu(t,s) ds = exp(-t lambda^beta)', res.size,
                   float(np.min(res)), float(np.max(res)), float(np.max(res)),
                   float(np.max(res)) < _thresholds(lab)['laplace_tol'])]


def subordinator_half(lab):
    half = stable.SubordinatorParams(0.5)
    probes = [(1.0, 1.0), (0.5, 0.2), (2.0, 3.0)]
    res = np.array([abs(stable.density(half, t, s) / stable.density_half(t, s) - 1.0) for t, s in probes])
    return [Record('subordinator_half', 'beta = 1/2 closed form', res.size, float(np.min(res)),
                   float(np.max(res)), float(np.max(res)), float(np.max(res)) < _thresholds(lab)['laplace_tol'])]


def subordinator_sampler(lab):
    sub = stable.SubordinatorParams.from_model(lab.params)
    n = _thresholds(lab)['sampler_draws']
    draws = stable.sample(sub, 1.0, lab.rng('subordinator_sampler'), size=n)
    values = np.exp(-draws)
    z = abs(np.mean(values) - np.exp(-1.0)) / (np.std(values) / np.sqrt(n))
    return [Record('subordinator_sampler', 'E exp(-T_1) = exp(-1) within z sigma', n, float(np.min(draws)),
                   float(np.max(draws)), float(z),
                   bool(np.all(draws > 0) and z <= _thresholds(lab)['sampler_sigma']))]


# -- spectral kernel -----------------------------------------------------------------

def kernel_cross_route(lab):
    n = lab.config['sweep']['grid_points']
    pts = (np.arange(1, n + 1) / (n + 1.0)).reshape(-1, 1)
    worst = []
    for t in lab.config['sweep']['kernel_times']:
        eig = lab.rD.rD_matrix(t, pts, pts, spectral.EIGEN)
        sub = lab.rD.rD_matrix(t, pts, pts, spectral.SUBORDINATION)
        worst.append(np.abs(eig - sub) / np.abs(eig))
    rel = np.concatenate([w.ravel() for w in worst])
    return [Record('kernel_cross_route', 'eigen and subordination routes agree', rel.size, float(np.min(rel)),
                   float(np.max(rel)), float(np.max(rel)), float(np.max(rel)) < _thresholds(lab)['cross_route_tol'])]


def _doubled_sweep(lab, name):
    """ The suite's sweep followed by an independent one of the same size. """
    first = _sweep(lab, name)
    extra = _sweep(lab, name + '_doubled')
    return len(first['t']), {k: np.concatenate([first[k], extra[k]]) for k in first}


def _stable_under_doubling(lab, name, ratios, n, two_sided=False):
    """ The empirical constant on the first n tuples moves by at most `stability` on all of them. """
    def constant(values):
        top = float(np.max(values))
        return max(top, 1.0 / float(np.min(values))) if two_sided else top
    c1, c2 = constant(ratios[:n]), constant(ratios)
    logger.info("%s: c=%.4g on %d tuples, %.4g on %d", name, c1, n, c2, len(ratios))
    return bool(abs(c2 - c1) <= _thresholds(lab)['stability'] * c1)


def kernel_sharp_bound(lab):
    """ r^D/q^D two-sided, with the constant stable when the sweep doubles. """
    n, tup = _doubled_sweep(lab, 'kernel_sharp_bound')
    ratios = _by_time(tup, lambda t, x, y: spectral.sharp_ratio(lab.ctx, lab.rD, t, x, y))
    record = Record.from_ratios('kernel_sharp_bound', 'r^D ~ q^D', ratios[:n], _thresholds(lab)['ratio_cap'],
                                lower=True)
    record.pass_flag = record.pass_flag and _stable_under_doubling(lab, record.estimate_id, ratios, n, True)
    return [record]


def kernel_gradient_bound(lab):
    """ |grad^j r^D| bounded by the q^D form, with the constant stable when the sweep doubles. """
    n, tup = _doubled_sweep(lab, 'kernel_gradient_bound')
    records = []
    for order in (1, 2):
        ratios = _by_time(tup, lambda t, x, y: spectral.grad_bound_ratio(lab.ctx, lab.rD, t, x, y, order))
        record = Record.from_ratios('kernel_gradient_j%d' % order, '|grad^j r^D| bound by q^D', ratios[:n],
                                    _thresholds(lab)['ratio_cap'])
        record.pass_flag = record.pass_flag and _stable_under_doubling(lab, record.estimate_id, ratios, n)
        records.append(record)
    return records


def kernel_intermediate_gradient(lab):
    tup = _sweep(lab, 'kernel_intermediate_gradient')
    ratios = _by_time(tup, lambda t, x, y: spectral.intermediate_grad_ratio(lab.ctx, lab.rD, t, x, y, 1))
    return [Record.from_ratios('kernel_intermediate_gradient', '|grad r^D| <= C q_hat(t,y,x) varrho^1_{d+1}',
                               ratios, _thresholds(lab)['ratio_cap'])]


def _nearby(domain, x, rng):
    """ x' within rho(x)/2 of x. """
    step = rng.standard_normal(x.shape)
    step /= point_norm(step)[:, None]
    size = 0.5 * domain.rho(x) * rng.random(x.shape[0])
    return x + size[:, None] * step


def kernel_holder(lab):
    """ Holder bound of grad r^D, with the constant stable when the sweep doubles. """
    n, tup = _doubled_sweep(lab, 'kernel_holder')
    x2 = _nearby(lab.domain, tup['x'], lab.rng('kernel_holder_offsets'))
    records = []
    for theta in HOLDER_EXPONENTS:
        ratios = np.empty(len(tup['t']))
        for t in np.unique(tup['t']):
            sel = tup['t'] == t
            ratios[sel] = spectral.holder_grad_check(lab.ctx, lab.rD, float(t), tup['x'][sel], x2[sel],
                                                     tup['y'][sel], theta)
        record = Record.from_ratios('kernel_holder_%g' % theta, 'Holder bound of grad r^D', ratios[:n],
                                    _thresholds(lab)['ratio_cap'])
        record.pass_flag = record.pass_flag and _stable_under_doubling(lab, record.estimate_id, ratios, n)
        records.append(record)
    return records


def kernel_generalized_three_p(lab):
    T = lab.params.horizon_T
    times = [t for t in THREE_P_TIMES if 2.0 * t <= T] or [0.25 * T]
    tup = _sweep(lab, 'kernel_generalized_three_p', times=times)
    ratios = np.empty(len(tup['t']))
    for t in np.unique(tup['t']):
        for s in np.unique(tup['s']):
            sel = (tup['t'] == t) & (tup['s'] == s)
            if np.any(sel):
                ratios[sel] = comparison.three_p_r_ratio(lab.ctx, float(t), float(s), tup['x'][sel],
                                                         tup['y'][sel], tup['z'][sel], lab.rD)
    return [Record.from_ratios('kernel_generalized_three_p', 'generalized 3-P for r^D', ratios,
                               _thresholds(lab)['ratio_cap'])]


def kernel_sub_markov(lab):
    pts = probe_grid(lab.domain, 9 if lab.domain.dim == 1 else 4, 4)
    masses = np.concatenate([np.atleast_1d(lab.rD.mass_rD(t, pts)) for t in lab.config['sweep']['kernel_times']])
    return [Record('kernel_sub_markov', 'int r^D dy <= 1', masses.size, float(np.min(masses)),
                   float(np.max(masses)), float(np.max(masses)),
                   float(np.max(masses)) <= 1.0 + _thresholds(lab)['mass_slack'])]


def kernel_ck(lab):
    rng = lab.rng('kernel_ck')
    n = _thresholds(lab)['n_probes']
    x = random_points(rng, lab.domain, n, rho_min=1e-2)
    y = random_points(rng, lab.domain, n, rho_min=1e-2)
    times = rng.choice([0.05, 0.1, 0.2], size=(n, 2))
    res = np.array([lab.rD.ck_residual_rD(t, s, xi, yi) for (t, s), xi, yi in zip(times, x, y)])
    return [Record('kernel_ck', 'Chapman-Kolmogorov for r^D', res.size, float(np.min(res)), float(np.max(res)),
                   float(np.max(res)), float(np.max(res)) < _thresholds(lab)['chain_tol'])]


# -- Kato classes ---------------------------------------------------------------------

def _unit_drift(domain):
    value = np.zeros(domain.dim)
    value[0] = 1.0
    return DriftField(domain, CONSTANT, value)


def _singular_drift(domain):
    return DriftField(domain, CLOSED_FORM, expressions=['rho(x)^-0.9'] + ['0'] * (domain.dim - 1))


def _kato_values(lab, drift, gamma=0.0):
    kato = lab.config['kato']
    t_probes = functional.default_t_probes(lab.params, kato['t_probes'])
    return np.array([functional.kato_functional(lab.domain, lab.params, drift, gamma, d, t_probes)
                     for d in kato['delta_grid']])


def kato_zero(lab):
    values = _kato_values(lab, DriftField(lab.domain, ZERO))
    return [Record('kato_zero', 'K_0 = 0', values.size, float(np.min(values)), float(np.max(values)),
                   float(np.max(values)), bool(np.all(values == 0.0)))]


def _decay_record(lab, name, claim, drift):
    grid = np.asarray(lab.config['kato']['delta_grid'], dtype=float)
    values = _kato_values(lab, drift)
    order = np.argsort(grid)[::-1]
    monotone = bool(np.all(np.diff(values[order]) < 0))
    return Record(name, claim, values.size, float(np.min(values)), float(np.max(values)),
                  functional.decay_exponent(grid, values),
                  bool(np.all(np.isfinite(values)) and monotone and functional.decays(grid, values)))


def kato_constant_decay(lab):
    return [_decay_record(lab, 'kato_constant_decay', 'K^0_b(delta) -> 0 for constant b', _unit_drift(lab.domain))]


def kato_singular_decay(lab):
    return [_decay_record(lab, 'kato_singular_decay', 'K^0_b(delta) -> 0 for b = rho^-0.9',
                          _singular_drift(lab.domain))]


def kato_homogeneity(lab):
    b = _unit_drift(lab.domain)
    base = _kato_values(lab, b)
    scaled = _kato_values(lab, b.scaled(KATO_FACTOR))
    rel = np.abs(scaled - KATO_FACTOR * base) / (KATO_FACTOR * base)
    return [Record('kato_homogeneity', 'K_{cb} = c K_b', rel.size, float(np.min(rel)), float(np.max(rel)),
                   float(np.max(rel)), float(np.max(rel)) < _thresholds(lab)['degeneracy_tol'])]


def kato_monotone(lab):
    b = _singular_drift(lab.domain)
    small = _kato_values(lab, b.scaled(0.5))
    large = _kato_values(lab, b)
    ratios = small / large
    return [Record('kato_monotone', '|f1| <= |f2| => K_f1 <= K_f2', ratios.size, float(np.min(ratios)),
                   float(np.max(ratios)), float(np.max(ratios)), bool(np.all(small <= large)))]


def kato_classes(lab):
    """ Nesting in gamma and the class inclusion chain for the configured and test drifts. """
    kato = lab.config['kato']
    t_probes = functional.default_t_probes(lab.params, kato['t_probes'])
    drifts = [_unit_drift(lab.domain), _singular_drift(lab.domain)]
    if not lab.drift.is_zero:
        drifts.append(lab.drift)
    nesting, chain = [], []
    for b in drifts:
        result = functional.classify(lab.domain, lab.params, b, kato['gammas'], kato['delta_grid'], t_probes)
        nesting.append(result.nesting_consistent)
        chain.append(result.chain_consistent)
    return [Record('kato_nesting', 'K^gamma2 member => K^gamma1 member for gamma1 < gamma2', len(nesting),
                   float(min(nesting)), float(max(nesting)), float(sum(nesting)), all(nesting)),
            Record('kato_chain', 'K^{alpha-1} => hat class => K^0', len(chain), float(min(chain)),
                   float(max(chain)), float(sum(chain)), all(chain))]


LP_LQ_TABLE = [
    # alpha, dim, gamma, p, q, expected
    (1.5, 1, 0.0, np.inf, np.inf, True),
    (1.5, 1, 0.4, np.inf, np.inf, True),
    (1.2, 3, 0.0, 20.0, 10.0, False),
    (1.5, 1, 0.6, np.inf, np.inf, False),
    (1.8, 2, 0.0, 10.0, 10.0, True),
    (1.2, 1, 0.0, 2.0, np.inf, False),
]


def kato_lp_lq(lab):
    hits = [functional.lp_lq_membership(ModelParams(a, d), g, p, q) == expected
            for a, d, g, p, q, expected in LP_LQ_TABLE]
    return [Record('kato_lp_lq', 'L^p-L^q membership predicate truth table', len(hits), float(min(hits)),
                   float(max(hits)), float(sum(hits)), all(hits))]


def hat_kato_decay(lab):
    b = _unit_drift(lab.domain)
    grid = [0.4, 0.2, 0.1]
    values = np.array([functional.hat_kato_functional(lab.domain, lab.params, b, t) for t in grid])
    return [Record('hat_kato_decay', 'hat functional of f = 1 -> 0 as t -> 0', values.size,
                   float(np.min(values)), float(np.max(values)), float(values[-1]),
                   bool(np.all(np.diff(values) < 0)))]


# -- perturbed kernel ------------------------------------------------------------------

def _window_pairs(lab, ev, count=None):
    """ count (s, t, x, y) probes inside the contraction window from the probe lattice. """
    pts = smallness.probe_points(ev.inputs)
    rng = lab.rng('window_pairs')
    count = _thresholds(lab)['n_probes'] if count is None else count
    i = rng.integers(0, len(pts), count)
    j = rng.integers(0, len(pts), count)
    return pts[i], pts[j]


def _refined_enough(thresholds, coarse, fine):
    """ Refinement gains refinement_ratio unless the finer value already sits at the floor. """
    if not (np.isfinite(coarse) and np.isfinite(fine)):
        return False
    return bool(fine <= thresholds['refinement_floor'] or coarse >= thresholds['refinement_ratio'] * fine)


def _refinement_record(lab, estimate_id, claim, coarse, fine):
    ratio = coarse / fine if fine > 0 else float('inf')
    return Record(estimate_id, claim, 2, fine, coarse, ratio, _refined_enough(_thresholds(lab), coarse, fine))


def _term_contraction(ev):
    """ (C, C_hat) at delta0, from the window search when it ran. """
    if ev.drift.is_zero:
        return 0.0, 0.0
    for delta, c, c_hat in ev.inputs.smallness:
        if delta == ev.delta0:
            return c, c_hat
    return smallness.estimate_smallness(ev.inputs, ev.delta0)


def perturbed_term_decay(lab):
    ev = lab.perturbed()
    c, c_hat = _term_contraction(ev)
    slack = _thresholds(lab)['decay_slack']
    records = []
    for name, sups, bound in (('perturbed_term_decay', ev.term_sups, c), ('perturbed_gradient_decay',
                                                                          ev.grad_sups, c_hat)):
        ratios = np.array([sups[k + 1] / sups[k] for k in range(1, len(sups) - 1)
                           if sups[k] > 0 and sups[k + 1] > 1e-14])
        if ratios.size == 0:
            ratios = np.zeros(1)
        limit = min(bound + slack, 0.5) if name == 'perturbed_term_decay' else bound + slack
        records.append(Record(name, 'geometric decay of lattice sups of the Picard terms', ratios.size,
                              float(np.min(ratios)), float(np.max(ratios)), bound,
                              bool(np.all(np.isfinite(ratios)) and np.max(ratios) <= limit)))
    return records


def perturbed_fubini(lab):
    ev = lab.perturbed()
    x, y = _window_pairs(lab, ev, 10)
    left = np.atleast_1d(ev.picard_term(2, 0.0, x, ev.delta0, y))
    right = np.atleast_1d(ev.right_picard_term(2, 0.0, x, ev.delta0, y))
    scale = max(float(np.max(np.abs(left))), 1e-300)
    rel = np.abs(left - right) / scale
    return [Record('perturbed_fubini', 'left and right Picard recursions agree at k = 2', rel.size,
                   float(np.min(rel)), float(np.max(rel)), float(np.max(rel)),
                   float(np.max(rel)) < _thresholds(lab)['fubini_tol'])]


def perturbed_sharp_bound(lab):
    ev = lab.perturbed()
    pts = smallness.probe_points(ev.inputs)
    ratios = []
    grads = []
    for s in smallness._starts(ev.inputs, ev.delta0):
        for frac in smallness.WINDOW_FRACTIONS:
            tau = frac * ev.delta0
            value = ev.value_matrix(s, s + tau, pts, pts)
            ratios.append(value / comparison.outer(comparison.qD, lab.ctx, tau, pts, pts))
            grad = point_norm(ev.grad_matrix(s, s + tau, pts, pts))
            grads.append(grad / comparison.outer(comparison.gradient_scale, lab.ctx, tau, pts, pts))
    cap = _thresholds(lab)['ratio_cap']
    return [Record.from_ratios('perturbed_sharp_bound', 'r^{D,b} ~ q^D in the contraction window',
                               np.concatenate([r.ravel() for r in ratios]), cap, lower=True),
            Record.from_ratios('perturbed_gradient_bound', '|grad r^{D,b}| bound by q^D',
                               np.concatenate([g.ravel() for g in grads]), cap)]


def perturbed_chapman_kolmogorov(lab):
    ev = lab.perturbed()
    x, y = _window_pairs(lab, ev)
    rng = lab.rng('perturbed_chapman_kolmogorov')
    spans = rng.choice([1.0, 1.5, 2.0], size=len(x)) * ev.delta0
    res = np.array([ev.ck_residual(0.0, 0.5 * t, t, xi, yi) for t, xi, yi in zip(spans, x, y)])
    tol = _thresholds(lab)['chain_tol']
    records = [Record('perturbed_chapman_kolmogorov', 'chained r^{D,b} agrees with the direct series', res.size,
                      float(np.min(res)), float(np.max(res)), float(np.max(res)), float(np.max(res)) < tol)]
    t = ev.delta0
    for n in (1, 2):
        res = np.asarray(ev.picard_ck_residual(n, 0.0, 0.5 * t, t, x, y))
        records.append(Record('perturbed_chapman_kolmogorov_term%d' % n,
                              'sum_m r_m * r_{n-m} = r_n through an intermediate time', res.size,
                              float(np.min(res)), float(np.max(res)), float(np.max(res)), float(np.max(res)) < tol))
    return records


def perturbed_holder(lab):
    ev = lab.perturbed()
    x, y = _window_pairs(lab, ev)
    x2 = _nearby(lab.domain, x, lab.rng('perturbed_holder_offsets'))
    ratios = ev.holder_perturbed_ratio(0.0, x, x2, ev.delta0, y, HOLDER_GAMMA)
    return [Record.from_ratios('perturbed_holder', 'Holder bound of grad r^{D,b}', ratios,
                               _thresholds(lab)['ratio_cap'])]


def perturbed_duhamel(lab):
    """ Both Duhamel equations hold, and their residual shrinks when the lattice is refined. """
    ev = lab.perturbed()
    x, y = _window_pairs(lab, ev)
    tol = _thresholds(lab)['duhamel_tol']
    forms = (engine.FIRST_KIND, engine.SECOND_KIND)
    records = []
    for form in forms:
        res = np.atleast_1d(ev.duhamel_residual(form, 0.0, x, ev.delta0, y))
        records.append(Record('perturbed_duhamel_%s' % form, 'Duhamel equation, %s kind' % form, res.size,
                              float(np.min(res)), float(np.max(res)), float(np.max(res)), float(np.max(res)) < tol))
    xr, yr = x[:REFINEMENT_PROBES], y[:REFINEMENT_PROBES]

    def residuals(e):
        return [float(np.max(np.atleast_1d(e.duhamel_residual(form, 0.0, xr, e.delta0, yr)))) for form in forms]
    coarse, fine = engine.refinement_study(ev, residuals)
    for form, c, f in zip(forms, coarse, fine):
        records.append(_refinement_record(lab, 'perturbed_duhamel_refinement_%s' % form,
                                          'Duhamel residual, %s kind, under lattice refinement' % form, c, f))
    return records


def perturbed_generator(lab):
    ev = lab.perturbed()
    f = lab.test_function()
    res = ev.generator_residual(0.0, ev.delta0, f)
    semi = ev.semigroup_duhamel_residual(0.0, ev.delta0, f)
    tol = _thresholds(lab)['generator_tol']
    return [Record('perturbed_generator', 'R_{s,t} f - f = int R_{s,r} L_r f dr', 1, res, res, res, res < tol),
            Record('perturbed_semigroup_duhamel', 'R^b f = R f + int R^b (b.grad R f) dr', 1, semi, semi, semi,
                   semi < _thresholds(lab)['duhamel_tol'])]


def perturbed_continuity(lab):
    """ sup |R_{s,t} f - f| decreases as t - s runs down 0.1, 0.05, 0.025. """
    ev = lab.perturbed()
    spans = [tau for tau in CONTINUITY_SPANS if tau <= lab.params.horizon_T]
    pts = smallness.probe_points(ev.inputs)
    gaps = np.array(ev.continuity_gaps(0.0, lab.test_function(), spans, pts))
    logger.info("continuity: sup |R f - f| = %s at t - s = %s", gaps, spans)
    decreasing = bool(np.all(np.isfinite(gaps)) and np.all(np.diff(gaps) < 0.0))
    return [Record('perturbed_continuity_%g' % tau, 'sup |R_{0,tau} f - f| along a shrinking tau', len(pts),
                   gap, gap, gap, decreasing) for tau, gap in zip(spans, gaps)]


def perturbed_degeneracy(lab):
    """ A zero drift reproduces r^D, and the generator identity holds for the first eigenmode. """
    zero = lab.drift.scaled(0.0)
    ev = lab.perturbed(zero)
    pts = smallness.probe_points(ev.inputs)
    tau = ev.delta0
    value = ev.value_matrix(0.0, tau, pts, pts)
    base = lab.rD.rD_matrix(tau, pts, pts)
    rel = (np.abs(value - base) / np.abs(base)).ravel()
    res = ev.generator_residual(0.0, min(tau, 0.1), EigenMode(lab.domain, 1))
    return [Record('perturbed_degeneracy', 'b = 0 reproduces r^D', rel.size, float(np.min(rel)),
                   float(np.max(rel)), float(np.max(rel)), float(np.max(rel)) < _thresholds(lab)['degeneracy_tol']),
            Record('perturbed_generator_eigenmode', 'generator identity for phi_1 with b = 0', 1, res, res, res,
                   res < 1e-6)]


def perturbed_uniqueness(lab):
    """ Two unrelated discretizations agree, closer after refinement. """
    inputs = lab.perturbed().inputs
    gap = engine.uniqueness_probe(inputs)
    finer = engine.uniqueness_probe(inputs, 2.0)
    return [Record('perturbed_uniqueness', 'two unrelated discretizations agree', 1, gap, gap, gap,
                   gap < _thresholds(lab)['duhamel_tol']),
            _refinement_record(lab, 'perturbed_uniqueness_refinement', 'discrepancy under simultaneous refinement',
                               gap, finer)]


def perturbed_mass(lab):
    ev = lab.perturbed()
    pts = smallness.probe_points(ev.inputs)
    masses = np.atleast_1d(ev.mass(0.0, pts, ev.delta0))
    return [Record('perturbed_mass', 'int r^{D,b} dy (diagnostic)', masses.size, float(np.min(masses)),
                   float(np.max(masses)), float(np.max(masses)), bool(np.all(np.isfinite(masses))))]


# -- Monte Carlo ---------------------------------------------------------------------

def mc_survival(lab):
    cfg = lab.mc_cfg()
    t = lab.config['mc']['t']
    x0 = lab.mc_start()
    estimate = paths.survival_frequency(lab.domain, lab.params, cfg, t, x0)
    mass = float(np.ravel(lab.rD.mass_rD(t, x0))[0])
    z = abs(estimate.frequency - mass) / max(estimate.stderr, 1e-300)
    return [Record('mc_survival', 'survival frequency matches int r^D dy', estimate.n_paths, estimate.frequency,
                   mass, z, estimate.covers(mass, _thresholds(lab)['mc_sigma']))]


def mc_density(lab):
    cfg = lab.mc_cfg()
    t = lab.config['mc']['t']
    x0 = lab.mc_start()
    hist = paths.density_estimate(lab.domain, lab.params, cfg, t, x0)
    exact = paths.binned_kernel(lab.rD, t, x0, hist)
    p = exact * hist.volume
    sigma = np.sqrt(np.maximum(p * (1.0 - p), 1e-300) / hist.n_paths) / hist.volume
    z = np.abs(hist.density - exact) / sigma
    occupied = (hist.counts > 0) | (exact > 0)
    inside = z[occupied]
    fraction = float(np.mean(inside <= _thresholds(lab)['mc_sigma']))
    return [Record('mc_density', 'binned r^D within the Monte Carlo interval', inside.size, float(np.min(inside)),
                   float(np.max(inside)), fraction, fraction >= _thresholds(lab)['mc_bin_fraction'])]


def mc_reflection(lab):
    cfg = lab.mc_cfg()
    center = lab.domain.center
    points = paths.endpoints(lab.domain, lab.params, cfg, lab.config['mc']['t'], center)
    stat, threshold = paths.reflection_distance(points[:, 0], center[0], cfg.bootstrap, lab.rng('mc_reflection'))
    return [Record('mc_reflection', 'endpoint law symmetric about the center', len(points), stat, threshold,
                   stat, stat < threshold)]


def mc_determinism(lab):
    cfg = lab.mc_cfg()
    n = min(cfg.n_paths, 20000)
    t = lab.config['mc']['t']
    x0 = lab.mc_start()
    first = paths.density_estimate(lab.domain, lab.params, cfg, t, x0, n)
    second = paths.density_estimate(lab.domain, lab.params, cfg, t, x0, n)
    same = bool(np.array_equal(first.counts, second.counts))
    return [Record('mc_determinism', 'same seed, same bin counts', n, float(same), float(same), float(same), same)]


SUITES = collections.OrderedDict([
    ('domain_lipschitz', domain_lipschitz),
    ('eigen_orthonormality', eigen_orthonormality),
    ('eigen_boundary_decay', eigen_boundary_decay),
    ('qd_symmetry', qd_symmetry),
    ('sharp_form', sharp_form),
    ('three_p_q', three_p_q),
    ('varrho_product', varrho_product),
    ('hat_equivalence', hat_equivalence),
    ('classical_three_p_failure', classical_three_p_failure),
    ('gaussian_boundary_bounds', gaussian_boundary_bounds),
    ('gaussian_q2_bounds', gaussian_q2_bounds),
    ('gaussian_domination', gaussian_domination),
    ('gaussian_gradient', gaussian_gradient),
    ('gaussian_ck', gaussian_ck),
    ('subordinator_shape', subordinator_shape),
    ('subordinator_convolution', subordinator_convolution),
    ('subordinator_laplace', subordinator_laplace),
    ('subordinator_half', subordinator_half),
    ('subordinator_sampler', subordinator_sampler),
    ('kernel_cross_route', kernel_cross_route),
    ('kernel_sharp_bound', kernel_sharp_bound),
    ('kernel_gradient_bound', kernel_gradient_bound),
    ('kernel_intermediate_gradient', kernel_intermediate_gradient),
    ('kernel_holder', kernel_holder),
    ('kernel_generalized_three_p', kernel_generalized_three_p),
    ('kernel_sub_markov', kernel_sub_markov),
    ('kernel_ck', kernel_ck),
    ('kato_zero', kato_zero),
    ('kato_constant_decay', kato_constant_decay),
    ('kato_singular_decay', kato_singular_decay),
    ('kato_homogeneity', kato_homogeneity),
    ('kato_monotone', kato_monotone),
    ('kato_classes', kato_classes),
    ('kato_lp_lq', kato_lp_lq),
    ('hat_kato_decay', hat_kato_decay),
    ('perturbed_term_decay', perturbed_term_decay),
    ('perturbed_fubini', perturbed_fubini),
    ('perturbed_sharp_bound', perturbed_sharp_bound),
    ('perturbed_chapman_kolmogorov', perturbed_chapman_kolmogorov),
    ('perturbed_holder', perturbed_holder),
    ('perturbed_duhamel', perturbed_duhamel),
    ('perturbed_generator', perturbed_generator),
    ('perturbed_continuity', perturbed_continuity),
    ('perturbed_degeneracy', perturbed_degeneracy),
    ('perturbed_uniqueness', perturbed_uniqueness),
    ('perturbed_mass', perturbed_mass),
    ('mc_survival', mc_survival),
    ('mc_density', mc_density),
    ('mc_reflection', mc_reflection),
    ('mc_determinism', mc_determinism),
])

CLAIMS = {name: (fn.__doc__ or name).strip().split('\n')[0] for name, fn in SUITES.items()}

_GROUP_PREFIXES = collections.OrderedDict([
    ('domain', ('domain_', 'eigen_')),
    ('comparison', ('qd_', 'sharp_form', 'three_p_q', 'varrho_', 'hat_equivalence', 'classical_')),
    ('gaussian', ('gaussian_',)),
    ('subordinator', ('subordinator_',)),
    ('kernel', ('kernel_',)),
    ('kato', ('kato_', 'hat_kato_')),
    ('perturbed', ('perturbed_',)),
    ('mc', ('mc_',)),
])

GROUPS = collections.OrderedDict((group, [name for name in SUITES if name.startswith(prefixes)])
                                 for group, prefixes in _GROUP_PREFIXES.items())

# the subordination route exists on the interval only
INTERVAL_ONLY = {'kernel_cross_route'}


def select(names, domain):
    """ Expand suite names, group names and 'all' in order; unknown names are rejected. """
    out = []
    for name in names:
        if name == 'all':
            chosen = list(SUITES)
        elif name in GROUPS:
            chosen = GROUPS[name]
        elif name in SUITES:
            chosen = [name]
        else:
            raise RejectedInput("unknown suite %r" % (name,))
        out.extend(n for n in chosen if n not in out and (domain.is_interval or n not in INTERVAL_ONLY))
    return out
