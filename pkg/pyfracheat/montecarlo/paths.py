"""Paths of the subordinate killed Brownian motion Y^D_t = W_{T_t}, killed at the exit from D.

    Each path draws S = T_t from the stable subordinator, then walks a
    Brownian motion with generator Delta (variance 2h per step of length h)
    over [0, S] in bridge_substeps steps. Between consecutive positions the
    path survives with the Brownian-bridge probability of not leaving D:

      UnitInterval   two-sided image series, |k| <= 10
      Ball           half-space bound exp(-rho(a) rho(b) / h) using the
                     distances to the sphere, which kills slightly more often
                     than the exact ball-bridge law.

    Paths run in chunks, each seeded by SeedSequence(seed).spawn, so a seed
    and config give bit-identical counts.
"""

import logging
import numpy as np
from scipy import stats

from ..domain.model import as_points, check_consistent
from ..errors import RejectedInput, InsufficientSampleError
from ..subordinator import stable

logger = logging.getLogger(__name__)

IMAGE_TERMS = 10
MIN_SURVIVORS = 100
MIN_CI_PATHS = 1000


class McConfig(object):

    def __init__(self, n_paths=100000, bins=20, seed=0, bridge_substeps=64, chunk_size=20000,
                 bootstrap=200):
        for name, value in (('n_paths', n_paths), ('bins', bins), ('bridge_substeps', bridge_substeps),
                            ('chunk_size', chunk_size), ('bootstrap', bootstrap)):
            if int(value) < 1:
                raise RejectedInput("%s must be >= 1" % name)
        self.n_paths         = int(n_paths)
        self.bins            = int(bins)
        self.seed            = int(seed)
        self.bridge_substeps = int(bridge_substeps)
        self.chunk_size      = int(chunk_size)
        self.bootstrap       = int(bootstrap)

    def get_save_state(self):
        return dict(self.__dict__)

    def streams(self, n_paths=None):
        """ (rng, paths) per chunk, each rng from its own spawned SeedSequence. """
        n_paths = self.n_paths if n_paths is None else int(n_paths)
        sizes = [self.chunk_size] * (n_paths // self.chunk_size)
        if n_paths % self.chunk_size:
            sizes.append(n_paths % self.chunk_size)
        children = np.random.SeedSequence(self.seed).spawn(len(sizes))
        return [(np.random.default_rng(child), size) for child, size in zip(children, sizes)]


def _interval_survival(a, b, h):
    """ P(a Brownian bridge a -> b of variance 2h stays in (0, 1)). """
    k = np.arange(-IMAGE_TERMS, IMAGE_TERMS + 1)[None, :]
    a = a[:, None]
    b = b[:, None]
    base = (b - a) ** 2
    h = h[:, None]
    direct = np.exp(-((b - a + 2.0 * k) ** 2 - base) / (4.0 * h))
    mirror = np.exp(-((b + a + 2.0 * k) ** 2 - base) / (4.0 * h))
    return np.clip(np.sum(direct - mirror, axis=1), 0.0, 1.0)


def _ball_survival(domain, a, b, h):
    """ 1 - exp(-rho(a) rho(b) / h), the half-space bridge survival on the distances to the sphere. """
    return -np.expm1(-domain.rho(a) * domain.rho(b) / h)


def sample_paths(domain, params, cfg, t, x0, rng, n):
    """ Vectorized draws of Y^D_t from x0: (alive (n,), endpoints (n, dim)). """
    check_consistent(params, domain)
    t = float(t)
    if not t > 0:
        raise RejectedInput("t must be positive")
    start, _ = as_points(x0, domain.dim)
    if start.shape[0] != 1 or not domain.contains(start)[0]:
        raise RejectedInput("x0 must be one interior point")
    d = domain.dim
    S = np.atleast_1d(stable.sample(stable.SubordinatorParams.from_model(params), t, rng, size=n))
    h = S / cfg.bridge_substeps
    x = np.repeat(start, n, axis=0)
    alive = np.ones(n, dtype=bool)
    for _ in range(cfg.bridge_substeps):
        step = np.sqrt(2.0 * h)[:, None] * rng.standard_normal((n, d))
        u = rng.random(n)
        nxt = x + step
        inside = domain.contains(nxt)
        live = alive & inside
        p_stay = np.zeros(n)
        if domain.is_interval:
            p_stay[live] = _interval_survival(x[live, 0], nxt[live, 0], h[live])
        else:
            p_stay[live] = _ball_survival(domain, x[live], nxt[live], h[live])
        alive = live & (u < p_stay)
        x = np.where(alive[:, None], nxt, x)
    return alive, x


def sample_YD(domain, params, cfg, t, x0, rng):
    """ One path: (alive, endpoint or None). """
    alive, x = sample_paths(domain, params, cfg, t, x0, rng, 1)
    return bool(alive[0]), (x[0].copy() if alive[0] else None)


def _endpoints(domain, params, cfg, t, x0, n_paths=None):
    """ Surviving endpoints over all chunks, and the number of paths run. """
    survivors = []
    total = 0
    for rng, size in cfg.streams(n_paths):
        alive, x = sample_paths(domain, params, cfg, t, x0, rng, size)
        survivors.append(x[alive])
        total += size
    out = np.concatenate(survivors) if survivors else np.empty((0, domain.dim))
    logger.debug("monte carlo t=%g: %d of %d paths alive", t, out.shape[0], total)
    return out, total


class SurvivalEstimate(object):
    """ Surviving fraction with its binomial standard error. """

    def __init__(self, survivors, n_paths):
        self.survivors = int(survivors)
        self.n_paths   = int(n_paths)
        self.frequency = self.survivors / float(self.n_paths)
        self.stderr    = np.sqrt(self.frequency * (1.0 - self.frequency) / self.n_paths)

    def interval(self, z=3.0):
        return self.frequency - z * self.stderr, self.frequency + z * self.stderr

    def covers(self, value, z=3.0):
        lo, hi = self.interval(z)
        return lo <= value <= hi

    def __repr__(self):
        return "SurvivalEstimate(%d/%d = %.5f +- %.2g)" % (self.survivors, self.n_paths, self.frequency,
                                                           self.stderr)


def survival_frequency(domain, params, cfg, t, x0, n_paths=None):
    n_paths = cfg.n_paths if n_paths is None else int(n_paths)
    if n_paths < MIN_CI_PATHS:
        raise RejectedInput("a survival interval needs at least %d paths" % MIN_CI_PATHS)
    points, total = _endpoints(domain, params, cfg, t, x0, n_paths)
    estimate = SurvivalEstimate(points.shape[0], total)
    logger.info("survival at t=%g from %s: %r", t, np.ravel(x0), estimate)
    return estimate


class Histogram(object):
    """ Binned density of surviving endpoints, normalized by paths * bin volume. """

    def __init__(self, counts, edges, n_paths, z=1.96):
        self.counts  = np.asarray(counts)
        self.edges   = [np.asarray(e) for e in edges]
        self.n_paths = int(n_paths)
        widths = np.meshgrid(*[np.diff(e) for e in self.edges], indexing='ij')
        self.volume = np.prod(np.stack(widths), axis=0)
        p = self.counts / float(self.n_paths)
        half = z * np.sqrt(p * (1.0 - p) / self.n_paths)
        self.density = p / self.volume
        self.ci_low  = np.maximum(p - half, 0.0) / self.volume
        self.ci_high = (p + half) / self.volume

    @property
    def centers(self):
        mids = [0.5 * (e[1:] + e[:-1]) for e in self.edges]
        return np.stack(np.meshgrid(*mids, indexing='ij'), axis=-1).reshape(-1, len(mids))

    @property
    def mass(self):
        return float(np.sum(self.counts)) / self.n_paths

    def rows(self):
        centers = self.centers
        flat = [a.ravel() for a in (self.counts, self.density, self.ci_low, self.ci_high)]
        out = []
        for i, c in enumerate(centers):
            row = {'x%d' % (k + 1): float(v) for k, v in enumerate(c)}
            row.update({'count': int(flat[0][i]), 'density': float(flat[1][i]),
                        'ci_low': float(flat[2][i]), 'ci_high': float(flat[3][i])})
            out.append(row)
        return out


def density_estimate(domain, params, cfg, t, x0, n_paths=None):
    n_paths = cfg.n_paths if n_paths is None else int(n_paths)
    points, total = _endpoints(domain, params, cfg, t, x0, n_paths)
    if points.shape[0] < MIN_SURVIVORS:
        raise InsufficientSampleError("only %d of %d paths survived to t=%g" % (points.shape[0], total, t),
                                      points.shape[0])
    lo, hi = domain.bounding_box()
    counts, edges = np.histogramdd(points, bins=[cfg.bins] * domain.dim,
                                   range=list(zip(lo, hi)))
    logger.info("density at t=%g: %d survivors in %d bins", t, points.shape[0], counts.size)
    return Histogram(counts, edges, total)


def binned_kernel(ev, t, x0, histogram, n=6):
    """ Bin averages of r^D(t, x0, .) over the histogram bins, zero outside D. """
    domain = ev.domain
    u, w = np.polynomial.legendre.leggauss(n)
    edges = histogram.edges
    mids = [0.5 * (e[1:] + e[:-1]) for e in edges]
    halves = [0.5 * np.diff(e) for e in edges]
    grids = np.meshgrid(*[np.arange(len(m)) for m in mids], indexing='ij')
    cells = np.stack([g.ravel() for g in grids], axis=1)
    offsets = np.stack(np.meshgrid(*[u] * domain.dim, indexing='ij'), axis=-1).reshape(-1, domain.dim)
    weights = np.prod(np.stack(np.meshgrid(*[w] * domain.dim, indexing='ij'), axis=-1).reshape(-1, domain.dim),
                      axis=1)
    center = np.array([[mids[k][c[k]] for k in range(domain.dim)] for c in cells])
    half = np.array([[halves[k][c[k]] for k in range(domain.dim)] for c in cells])
    pts = (center[:, None, :] + half[:, None, :] * offsets[None, :, :]).reshape(-1, domain.dim)
    inside = domain.contains(pts)
    values = np.zeros(pts.shape[0])
    if np.any(inside):
        values[inside] = ev.rD_matrix(t, x0, pts[inside])[0]
    averaged = (values.reshape(len(cells), -1) @ weights) / 2.0 ** domain.dim
    return averaged.reshape(histogram.counts.shape)


def reflection_distance(endpoints, center, n_boot=200, rng=None, z=3.0):
    """ KS distance between the halves left and right of center after reflecting one,
        with a bootstrap threshold mean + z std from sign-symmetrized resamples.
    """
    x = np.asarray(endpoints, dtype=float).reshape(-1)
    rng = rng or np.random.default_rng(0)
    rel = x - float(center)

    def statistic(sample):
        left, right = -sample[sample < 0], sample[sample > 0]
        if len(left) == 0 or len(right) == 0:
            return 1.0
        return stats.ks_2samp(left, right).statistic

    observed = statistic(rel)
    boot = np.empty(int(n_boot))
    for i in range(len(boot)):
        resample = rng.choice(np.abs(rel), size=len(rel), replace=True)
        boot[i] = statistic(resample * rng.choice([-1.0, 1.0], size=len(rel)))
    threshold = float(np.mean(boot) + z * np.std(boot))
    logger.debug("reflection KS %.4g against threshold %.4g", observed, threshold)
    return float(observed), threshold


def endpoints(domain, params, cfg, t, x0, n_paths=None):
    """ Surviving endpoints only. """
    return _endpoints(domain, params, cfg, t, x0, n_paths)[0]
