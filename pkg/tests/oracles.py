"""Independent reference computations used by the tests.

These deliberately avoid the package's solvers: closest points come from a
dense parametric scan refined by golden-section search, derivatives from
finite differences.
"""

import math

import numpy as np
from scipy.optimize import minimize

from cavf.geometry import make_obstacle, rotation_2d, rotation_from_axis_angle

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def _golden(f, lo, hi, iters=90):
    """Vectorised golden-section minimisation of ``f`` on ``[lo, hi]`` (arrays)."""
    x1 = hi - INV_PHI * (hi - lo)
    x2 = lo + INV_PHI * (hi - lo)
    f1, f2 = f(x1), f(x2)
    for _ in range(iters):
        left = f1 < f2
        hi = np.where(left, x2, hi)
        lo = np.where(left, lo, x1)
        x2n = np.where(left, x1, lo + INV_PHI * (hi - lo))
        x1n = np.where(left, hi - INV_PHI * (hi - lo), x2)
        f2n = np.where(left, f1, np.nan)
        f1n = np.where(left, np.nan, f2)
        x1, x2 = x1n, x2n
        need1 = np.isnan(f1n)
        need2 = np.isnan(f2n)
        f1 = np.where(need1, f(x1), f1n)
        f2 = np.where(need2, f(x2), f2n)
    mid = 0.5 * (lo + hi)
    return mid, f(mid)


def scan_distance_2d(a, b, q, samples=100_000):
    """Distance from body point ``q`` to the ellipse ``(a, b)`` by scan + golden refinement.

    Every local minimum of the sampled squared distance is refined, so the
    global minimum is found even when the scan brackets several basins.
    Returns ``(distance, u)``.
    """
    qx, qy = float(q[0]), float(q[1])

    def f(u):
        return (a * np.cos(u) - qx) ** 2 + (b * np.sin(u) - qy) ** 2

    h = 2.0 * math.pi / samples
    u = np.arange(samples) * h
    fu = f(u)
    is_min = (fu <= np.roll(fu, 1)) & (fu < np.roll(fu, -1))
    idx = np.flatnonzero(is_min)
    if idx.size == 0:
        idx = np.array([int(np.argmin(fu))])
    ustar, fstar = _golden(f, u[idx] - h, u[idx] + h)
    k = int(np.argmin(fstar))
    return math.sqrt(max(float(fstar[k]), 0.0)), float(ustar[k]) % (2 * math.pi)


def scan_distance_3d(e, q, nu=1200, nv=600):
    """Distance from body point ``q`` to an axis-aligned ellipsoid by grid scan + local polish."""
    q = np.asarray(q, dtype=float)
    u = np.linspace(0.0, 2 * math.pi, nu, endpoint=False)
    v = np.linspace(0.0, math.pi, nv)
    U, V = np.meshgrid(u, v, indexing="ij")
    pts = np.stack([e[0] * np.cos(U) * np.sin(V), e[1] * np.sin(U) * np.sin(V), e[2] * np.cos(V)], axis=-1)
    f = np.sum((pts - q) ** 2, axis=-1)
    order = np.argsort(f, axis=None)[:8]

    def g(x):
        uu, vv = x
        p = np.array([e[0] * math.cos(uu) * math.sin(vv), e[1] * math.sin(uu) * math.sin(vv), e[2] * math.cos(vv)])
        return float(np.sum((p - q) ** 2))

    best = math.inf
    for flat in order:
        i, j = np.unravel_index(flat, f.shape)
        res = minimize(g, [u[i], v[j]], method="Nelder-Mead", options={"xatol": 1e-13, "fatol": 1e-20, "maxiter": 4000})
        best = min(best, res.fun)
    return math.sqrt(max(best, 0.0))


def random_obstacle(rng, dim=2, max_ratio=5.0, moving=False, scale=1.0, d_i=0.3):
    """Random ellipse/ellipsoid with axis ratio up to ``max_ratio``."""
    center = rng.uniform(-scale, scale, dim)
    big = rng.uniform(0.2, 1.0) * scale
    axes = big / np.exp(rng.uniform(0.0, math.log(max_ratio), dim))
    axes[rng.integers(dim)] = big
    if dim == 2:
        orient = rotation_2d(rng.uniform(-math.pi, math.pi))
    else:
        orient = rotation_from_axis_angle(rng.normal(size=3), rng.uniform(0, math.pi))
    kwargs = {}
    if moving:
        vel = rng.normal(size=dim)
        vel *= rng.uniform(0, 2.0) / np.linalg.norm(vel)
        kwargs = dict(velocity=vel, semi_axes_rate=rng.uniform(-1.0, 1.0, dim))
    return make_obstacle(center, axes, orientation=orient, influence_distance=d_i, **kwargs)


def random_params(rng, dim):
    u = rng.uniform(0, 2 * math.pi)
    v = math.acos(rng.uniform(-1, 1)) if dim == 3 else math.pi / 2
    return u, v
