"""Model parameters and the model domains (unit interval, balls in d <= 3)."""

import logging
import numpy as np
from scipy import special

from ..errors import RejectedInput, UnsupportedDomain

logger = logging.getLogger(__name__)

UNIT_INTERVAL = 'UnitInterval'
BALL = 'Ball'


class ModelParams(object):
    """ Stability index alpha in (1,2), dimension and time horizon T. """

    def __init__(self, alpha, dim, horizon_T=1.0):
        alpha = float(alpha)
        horizon_T = float(horizon_T)
        if not 1.0 < alpha < 2.0:
            raise RejectedInput("alpha must lie in (1, 2), got %r" % (alpha,))
        if int(dim) != dim or dim not in (1, 2, 3):
            raise RejectedInput("dim must be 1, 2 or 3, got %r" % (dim,))
        if not horizon_T > 0:
            raise RejectedInput("horizon_T must be positive, got %r" % (horizon_T,))
        self.alpha     = alpha
        self.dim       = int(dim)
        self.horizon_T = horizon_T

    @property
    def beta(self):
        return self.alpha / 2.0

    def scale(self, t):
        """ Space scale t^{1/alpha}. """
        return np.power(t, 1.0 / self.alpha)

    def get_save_state(self):
        return {'alpha': self.alpha, 'dim': self.dim, 'horizon_T': self.horizon_T}

    def __repr__(self):
        return "ModelParams(alpha=%r, dim=%r, horizon_T=%r)" % (self.alpha, self.dim, self.horizon_T)


def as_points(x, dim):
    """ Coerce x to an (n, dim) float array.

        Returns (points, single) where single is True when x was one point.
    """
    arr = np.asarray(x, dtype=float)
    if dim == 1 and arr.ndim <= 1:
        single = arr.ndim == 0
        arr = arr.reshape(-1, 1)
    elif arr.ndim == 1:
        if arr.shape[0] != dim:
            raise RejectedInput("point has %d coordinates, domain needs %d" % (arr.shape[0], dim))
        single = True
        arr = arr.reshape(1, dim)
    elif arr.ndim == 2:
        single = False
        if arr.shape[1] != dim:
            raise RejectedInput("points have %d coordinates, domain needs %d" % (arr.shape[1], dim))
    else:
        raise RejectedInput("cannot interpret array of shape %r as points" % (arr.shape,))
    if not np.all(np.isfinite(arr)):
        raise RejectedInput("points must have finite coordinates")
    return arr, single


def point_norm(u):
    """ Euclidean norm along the coordinate axis of an (..., d) array. """
    return np.sqrt(np.sum(np.square(u), axis=-1))


class Domain(object):
    """ A model C^{1,1} domain with exact boundary distance. """

    def __init__(self, kind, dim=1, radius=1.0, center=None):
        if kind == UNIT_INTERVAL:
            if dim != 1:
                raise RejectedInput("UnitInterval forces dim = 1")
            radius = 0.5
            center = np.array([0.5])
        elif kind == BALL:
            if dim not in (1, 2, 3):
                raise UnsupportedDomain("Ball supported for dim <= 3, got %r" % (dim,))
            if not radius > 0:
                raise RejectedInput("Ball radius must be positive")
            center = np.zeros(dim) if center is None else np.asarray(center, dtype=float).reshape(dim)
        else:
            raise RejectedInput("unknown domain kind %r" % (kind,))
        self.kind   = kind
        self.dim    = int(dim)
        self.radius = float(radius)
        self.center = center

    @classmethod
    def from_spec(cls, spec):
        kind = spec.get('kind', UNIT_INTERVAL)
        if kind == UNIT_INTERVAL:
            return cls(kind, 1)
        return cls(kind, spec.get('dim', 2), spec.get('radius', 1.0), spec.get('center'))

    def get_save_state(self):
        state = {'kind': self.kind, 'dim': self.dim}
        if self.kind == BALL:
            state['radius'] = self.radius
            state['center'] = [float(c) for c in self.center]
        return state

    @property
    def is_interval(self):
        return self.kind == UNIT_INTERVAL

    @property
    def volume(self):
        if self.kind == UNIT_INTERVAL:
            return 1.0
        d = self.dim
        return np.pi ** (d / 2.0) / special.gamma(d / 2.0 + 1.0) * self.radius ** d

    def bounding_box(self):
        return self.center - self.radius, self.center + self.radius

    def rho(self, x):
        """ Vectorized distance to the boundary, zero outside the domain. """
        pts, single = as_points(x, self.dim)
        if self.kind == UNIT_INTERVAL:
            r = np.minimum(pts[:, 0], 1.0 - pts[:, 0])
        else:
            r = self.radius - point_norm(pts - self.center)
        r = np.maximum(r, 0.0)
        return r[0] if single else r

    def contains(self, x):
        pts, single = as_points(x, self.dim)
        inside = self.rho(pts) > 0
        return bool(inside[0]) if single else inside

    def exit_distance(self, x, directions):
        """ Distance from interior points x along unit directions to the boundary.

            x is (n, d), directions is (m, d); returns (n, m).
        """
        pts, _ = as_points(x, self.dim)
        dirs = np.asarray(directions, dtype=float).reshape(-1, self.dim)
        rel = pts - self.center
        proj = rel @ dirs.T
        radial = np.sum(rel * rel, axis=1)[:, None]
        disc = np.maximum(proj * proj - radial + self.radius ** 2, 0.0)
        return np.maximum(-proj + np.sqrt(disc), 0.0)

    def __repr__(self):
        if self.kind == UNIT_INTERVAL:
            return "Domain(UnitInterval)"
        return "Domain(Ball, dim=%d, radius=%r)" % (self.dim, self.radius)


def unit_interval():
    return Domain(UNIT_INTERVAL, 1)


def ball(dim, radius=1.0, center=None):
    return Domain(BALL, dim, radius, center)


def check_consistent(params, domain):
    if params.dim != domain.dim:
        raise RejectedInput("model dim %d differs from domain dim %d" % (params.dim, domain.dim))


def dist_to_boundary(domain, x):
    """ rho(x) for a single point (or an array of points). """
    return domain.rho(x)
