"""Interior probe grids and seeded random sweeps."""

import numpy as np

from .model import point_norm

# Default directions for boundary shells on balls.
_SHELL_DIRECTIONS = {
    1: np.array([[-1.0], [1.0]]),
    2: np.array([[np.cos(a), np.sin(a)] for a in np.arange(8) * np.pi / 4.0]),
    3: np.array([[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1], [0, 0, -1],
                 [1, 1, 1], [1, 1, -1], [1, -1, 1], [1, -1, -1],
                 [-1, 1, 1], [-1, 1, -1], [-1, -1, 1], [-1, -1, -1]], dtype=float),
}


def shell_distances(domain, boundary_refinement):
    """ rho values of the boundary shells: half the inradius, halved per level. """
    base = 0.5 * domain.radius
    return [base * 2.0 ** (-k) for k in range(1, boundary_refinement + 1)]


def probe_grid(domain, resolution, boundary_refinement=0):
    """ Interior points: a uniform grid plus shells accumulating at the boundary.

        Returned as an (n, dim) array; every point has rho > 0.
    """
    resolution = max(int(resolution), 2)
    d = domain.dim
    lo, hi = domain.bounding_box()
    axes = [lo[k] + (hi[k] - lo[k]) * np.arange(1, resolution + 1) / (resolution + 1.0) for k in range(d)]
    mesh = np.stack(np.meshgrid(*axes, indexing='ij'), axis=-1).reshape(-1, d)
    pts = [mesh[domain.rho(mesh) > 0]]
    dirs = _SHELL_DIRECTIONS[d]
    dirs = dirs / point_norm(dirs)[:, None]
    for rho in shell_distances(domain, boundary_refinement):
        pts.append(domain.center + (domain.radius - rho) * dirs)
    return np.concatenate(pts)


def random_points(rng, domain, n, boundary_fraction=0.5, rho_min=1e-4):
    """ n seeded interior points; a fraction has log-uniform rho in [rho_min, R/2]. """
    d = domain.dim
    n_edge = int(round(boundary_fraction * n))
    n_bulk = n - n_edge
    if d == 1:
        bulk = domain.center + domain.radius * (2.0 * rng.random((n_bulk, 1)) - 1.0)
        dirs = np.where(rng.random((n_edge, 1)) < 0.5, -1.0, 1.0)
    else:
        g = rng.standard_normal((n_bulk, d))
        g /= point_norm(g)[:, None]
        radius = domain.radius * rng.random(n_bulk) ** (1.0 / d)
        bulk = domain.center + radius[:, None] * g
        dirs = rng.standard_normal((n_edge, d))
        dirs /= point_norm(dirs)[:, None]
    log_rho = rng.uniform(np.log(rho_min), np.log(0.5 * domain.radius), n_edge)
    edge = domain.center + (domain.radius - np.exp(log_rho))[:, None] * dirs
    pts = np.concatenate([bulk, edge])
    # keep strictly interior points
    bad = domain.rho(pts) <= 0
    pts[bad] = domain.center
    return pts
