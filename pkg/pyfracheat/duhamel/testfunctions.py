"""Test functions f for the semigroup and generator checks.

    Each carries values f(x) shaped (n,) and gradients shaped (n, dim).
"""

import numpy as np

from ..domain.model import as_points
from ..domain import eigen
from ..errors import RejectedInput


class SmoothBump(object):
    """ amplitude * exp(1 - 1/(1 - |x-c|^2/R^2)) on B(c, R), zero outside. """

    def __init__(self, domain, center, radius, amplitude=1.0):
        pts, _ = as_points(center, domain.dim)
        self.domain    = domain
        self.center    = pts[0]
        self.radius    = float(radius)
        self.amplitude = float(amplitude)
        if not self.radius > 0:
            raise RejectedInput("bump radius must be positive")
        if not float(domain.rho(pts)[0]) > self.radius:
            raise RejectedInput("bump support must lie strictly inside the domain")

    def _profile(self, x):
        pts, _ = as_points(x, self.domain.dim)
        rel = pts - self.center
        u = np.sum(rel * rel, axis=1) / self.radius ** 2
        inside = u < 1.0
        safe = np.where(inside, u, 0.0)
        value = np.where(inside, self.amplitude * np.exp(1.0 - 1.0 / (1.0 - safe)), 0.0)
        return rel, safe, inside, value

    def __call__(self, x):
        return self._profile(x)[3]

    def gradient(self, x):
        rel, u, inside, value = self._profile(x)
        factor = np.where(inside, -2.0 * value / (self.radius ** 2 * (1.0 - u) ** 2), 0.0)
        return factor[:, None] * rel

    def get_save_state(self):
        return {'kind': 'bump', 'center': [float(c) for c in self.center],
                'radius': self.radius, 'amplitude': self.amplitude}


class EigenMode(object):
    """ The n-th Dirichlet eigenfunction (1-based). """

    def __init__(self, domain, index=1):
        if int(index) < 1:
            raise RejectedInput("eigenmode index is 1-based")
        self.domain = domain
        self.index  = int(index)
        self.basis  = eigen.eigen_pairs(domain, self.index)
        self.eigenvalue = float(self.basis.eigenvalues[self.index - 1])

    def __call__(self, x):
        return self.basis.values(x)[:, self.index - 1]

    def gradient(self, x):
        return self.basis.gradients(x)[:, self.index - 1, :]

    def get_save_state(self):
        return {'kind': 'eigenmode', 'index': self.index}


class Constant(object):
    """ f = value on D. Not compactly supported, so only for semigroup_apply and mass. """

    def __init__(self, domain, value=1.0):
        self.domain = domain
        self.value  = float(value)

    def __call__(self, x):
        pts, _ = as_points(x, self.domain.dim)
        return np.full(pts.shape[0], self.value)

    def gradient(self, x):
        pts, _ = as_points(x, self.domain.dim)
        return np.zeros_like(pts)

    def get_save_state(self):
        return {'kind': 'constant', 'value': self.value}


def from_spec(spec, domain):
    """ Build a test function from a config dict {kind, ...}. """
    spec = dict(spec or {})
    kind = spec.get('kind', 'bump')
    if kind == 'bump':
        center = spec.get('center', domain.center)
        radius = spec.get('radius', 0.5 * float(domain.rho(as_points(center, domain.dim)[0])[0]))
        return SmoothBump(domain, center, radius, spec.get('amplitude', 1.0))
    if kind == 'eigenmode':
        return EigenMode(domain, spec.get('index', 1))
    if kind == 'constant':
        return Constant(domain, spec.get('value', 1.0))
    raise RejectedInput("unknown test function kind %r" % (kind,))

