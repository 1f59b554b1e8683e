"""
Time-parameterized elliptical (2D) and ellipsoidal (3D) obstacles.

An obstacle translates at constant velocity and its semi-axes follow an
affine schedule clamped from below, ``a(t) = max(a0 + rate * t, a_min)``.
Orientation is fixed. All queries are pure functions of their inputs.

The boundary parameterization is

    2D:  (a cos u, b sin u)
    3D:  (a cos u sin v, b sin u sin v, c cos v)

expressed in the body frame, then rotated by ``orientation`` and shifted
by the current center.
"""

from __future__ import annotations

import dataclasses
import functools
import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import ConvergenceFailure

ORIENTATION_TOL = 1e-9
DEFAULT_SEMI_AXES_MIN = 1e-3
DEFAULT_INFLUENCE_DISTANCE = 0.3

# Closest points closer than this to the boundary are never flagged inside.
INSIDE_TOL = 1e-12

_NEWTON_MAX_ITER = 200
_BISECT_MAX_ITER = 1100


def _as_vector(x, name: str) -> np.ndarray:
    arr = np.array(x, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be a 1-D vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite components")
    arr.setflags(write=False)
    return arr


def rotation_2d(angle: float) -> np.ndarray:
    """Counter-clockwise rotation by ``angle`` radians (body to world)."""
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s], [s, c]])


def rotation_from_axis_angle(axis: Sequence[float], angle: float) -> np.ndarray:
    """Right-handed rotation about ``axis`` by ``angle`` radians."""
    from scipy.spatial.transform import Rotation

    axis = np.asarray(axis, dtype=float)
    norm = np.linalg.norm(axis)
    if angle == 0.0 or norm == 0.0:
        return np.eye(3)
    return Rotation.from_rotvec(axis / norm * angle).as_matrix()


@dataclass(frozen=True, eq=False)
class Obstacle:
    """Moving ellipse/ellipsoid with an affine semi-axis schedule.

    Vectors are stored as read-only float arrays. ``id`` is a free-form
    label used in diagnostics and output files.
    """

    center0: np.ndarray
    velocity: np.ndarray
    semi_axes0: np.ndarray
    semi_axes_rate: np.ndarray
    orientation: np.ndarray
    influence_distance: float = DEFAULT_INFLUENCE_DISTANCE
    semi_axes_min: float = DEFAULT_SEMI_AXES_MIN
    is_wall: bool = False
    id: str = ""

    def __post_init__(self):
        set_ = object.__setattr__
        center0 = _as_vector(self.center0, "center0")
        n = center0.shape[0]
        if n not in (2, 3):
            raise ValueError(f"dimension must be 2 or 3, got {n}")
        set_(self, "center0", center0)
        for name in ("velocity", "semi_axes0", "semi_axes_rate"):
            vec = _as_vector(getattr(self, name), name)
            if vec.shape != (n,):
                raise ValueError(f"{name} must have {n} components, got {vec.shape[0]}")
            set_(self, name, vec)
        rot = np.array(self.orientation, dtype=float)
        if rot.shape != (n, n):
            raise ValueError(f"orientation must be {n}x{n}, got {rot.shape}")
        if not np.allclose(rot.T @ rot, np.eye(n), rtol=0.0, atol=ORIENTATION_TOL) or (
            abs(np.linalg.det(rot) - 1.0) > ORIENTATION_TOL
        ):
            raise ValueError("orientation must be a proper rotation (orthonormal, det +1)")
        rot.setflags(write=False)
        set_(self, "orientation", rot)
        if not self.semi_axes_min > 0:
            raise ValueError("semi_axes_min must be positive")
        if np.any(self.semi_axes0 <= 0):
            raise ValueError("semi_axes0 must be positive")
        if not self.influence_distance > 0:
            raise ValueError("influence_distance must be positive")
        set_(self, "influence_distance", float(self.influence_distance))
        set_(self, "semi_axes_min", float(self.semi_axes_min))
        set_(self, "is_wall", bool(self.is_wall))

    @property
    def dim(self) -> int:
        return self.center0.shape[0]

    @functools.cached_property
    def is_static(self) -> bool:
        return not (np.any(self.velocity) or np.any(self.semi_axes_rate))

    def center(self, t: float) -> np.ndarray:
        return self.center0 + self.velocity * t

    def semi_axes(self, t: float) -> np.ndarray:
        return np.maximum(self.semi_axes0 + self.semi_axes_rate * t, self.semi_axes_min)

    def semi_axes_velocity(self, t: float) -> np.ndarray:
        """Time derivative of the semi-axes; zero on the clamp and at the kink."""
        raw = self.semi_axes0 + self.semi_axes_rate * t
        return np.where(raw > self.semi_axes_min, self.semi_axes_rate, 0.0)

    def to_body(self, P, t: float) -> np.ndarray:
        return self.orientation.T @ (np.asarray(P, dtype=float) - self.center(t))

    def level(self, P, t: float) -> float:
        """Implicit function ``sum((q_i / e_i)^2)``; below 1 means inside."""
        q = self.to_body(P, t) / self.semi_axes(t)
        return float(q @ q)

    def replace(self, **changes) -> "Obstacle":
        return dataclasses.replace(self, **changes)


def make_obstacle(
    center,
    semi_axes,
    *,
    velocity=None,
    semi_axes_rate=None,
    angle: float | None = None,
    orientation=None,
    influence_distance: float = DEFAULT_INFLUENCE_DISTANCE,
    semi_axes_min: float = DEFAULT_SEMI_AXES_MIN,
    is_wall: bool = False,
    id: str = "",
) -> Obstacle:
    """Convenience constructor; zero velocity/rates and identity orientation by default.

    In 2D ``angle`` gives the orientation directly; otherwise pass a full
    rotation matrix as ``orientation``.
    """
    center = np.asarray(center, dtype=float)
    n = center.shape[0]
    if orientation is None:
        orientation = rotation_2d(angle) if (angle is not None and n == 2) else np.eye(n)
    return Obstacle(
        center0=center,
        velocity=np.zeros(n) if velocity is None else velocity,
        semi_axes0=semi_axes,
        semi_axes_rate=np.zeros(n) if semi_axes_rate is None else semi_axes_rate,
        orientation=orientation,
        influence_distance=influence_distance,
        semi_axes_min=semi_axes_min,
        is_wall=is_wall,
        id=id,
    )


def _body_direction(n: int, u: float, v: float) -> np.ndarray:
    if n == 2:
        return np.array([math.cos(u), math.sin(u)])
    sv = math.sin(v)
    return np.array([math.cos(u) * sv, math.sin(u) * sv, math.cos(v)])


def boundary_point(obs: Obstacle, u: float, v: float = math.pi / 2, t: float = 0.0) -> np.ndarray:
    """World-frame boundary point for parameters ``(u, v)``; ``v`` is unused in 2D."""
    body = obs.semi_axes(t) * _body_direction(obs.dim, u, v)
    return obs.center(t) + obs.orientation @ body


def expansion_velocity(obs: Obstacle, u: float, v: float = math.pi / 2, t: float = 0.0) -> np.ndarray:
    """Velocity of the boundary point ``(u, v)`` due to shape change only."""
    body = obs.semi_axes_velocity(t) * _body_direction(obs.dim, u, v)
    return obs.orientation @ body


def boundary_velocity(obs: Obstacle, params: tuple[float, float], t: float = 0.0) -> np.ndarray:
    """Total boundary velocity: rigid translation plus expansion."""
    u, v = params
    return obs.velocity + expansion_velocity(obs, u, v, t)


def outward_normal(obs: Obstacle, params: tuple[float, float], t: float = 0.0) -> np.ndarray:
    """Unit outward normal at boundary parameters ``(u, v)``.

    Uses the implicit-form gradient ``x_i / e_i^2`` evaluated at the body
    point, which simplifies to ``direction_i / e_i``.
    """
    u, v = params
    grad = _body_direction(obs.dim, u, v) / obs.semi_axes(t)
    grad /= math.sqrt(float(grad @ grad))
    return obs.orientation @ grad


def inflate(obs: Obstacle, margin: float) -> Obstacle:
    """Enlarge every semi-axis by ``margin``. Walls are returned unchanged.

    This is not the exact offset surface of an ellipse; the true boundary
    sits at least ``margin * b / a`` inside the inflated one.
    """
    if margin < 0:
        raise ValueError("margin must be non-negative")
    if obs.is_wall or margin == 0:
        return obs
    return obs.replace(
        semi_axes0=obs.semi_axes0 + margin,
        semi_axes_min=obs.semi_axes_min + margin,
    )


class ClosestPoint(NamedTuple):
    point: np.ndarray
    params: tuple[float, float]
    distance: float
    inside: bool


def _secular_root(r: list[float], z: list[float]) -> float:
    """Root of ``sum((r_i z_i / (sigma - 1 + r_i))^2) = 1`` for ``sigma > 0``.

    ``r`` are squared axis ratios relative to the smallest axis (last entry
    is 1) and ``z`` the scaled, non-negative body coordinates with
    ``z[-1] > 0``. The function is convex and decreasing in sigma, so Newton
    started left of the root climbs to it monotonically.
    """
    rz = [ri * zi for ri, zi in zip(r, z)]
    # sigma + (r_i - 1) rather than (sigma - 1) + r_i: sigma is tiny for
    # interior points near the center and must not cancel against 1.
    rm1 = [ri - 1.0 for ri in r]

    def g_and_slope(sigma):
        g = -1.0
        slope = 0.0
        for rm1i, rzi in zip(rm1, rz):
            if rzi == 0.0:
                continue
            denom = sigma + rm1i
            ratio = rzi / denom
            g += ratio * ratio
            slope -= 2.0 * ratio * ratio / denom
        return g, slope

    sigma = z[-1]
    for _ in range(_NEWTON_MAX_ITER):
        g, slope = g_and_slope(sigma)
        if g <= 0.0:
            return sigma
        nxt = sigma - g / slope
        if not nxt > sigma:
            return sigma
        if nxt - sigma <= 4e-16 * nxt:
            return nxt
        sigma = nxt

    # Rounding trouble: bisect on the bracket instead.
    lo = z[-1]
    hi = max(math.sqrt(sum(v * v for v in rz)), lo)
    for _ in range(_BISECT_MAX_ITER):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            return mid
        g, _ = g_and_slope(mid)
        if g > 0.0:
            lo = mid
        elif g < 0.0:
            hi = mid
        else:
            return mid
    raise ConvergenceFailure("closest-point root finding did not converge")


def _closest_sorted(e: list[float], y: list[float]) -> list[float]:
    """Closest boundary point for semi-axes ``e`` sorted descending and ``y >= 0``."""
    n = len(e)
    if n == 1:
        return [e[0]]
    e_last = e[-1]
    if y[-1] > 0.0:
        z = [yi / ei for yi, ei in zip(y, e)]
        r = [(ei / e_last) ** 2 for ei in e]
        sigma = _secular_root(r, z)
        return [ei * ri * zi / (sigma + (ri - 1.0)) for ei, ri, zi in zip(e, r, z)]
    # Point lies in the plane of the two largest axes: the optimum either
    # leaves that plane (interior points) or reduces to a lower dimension.
    el2 = e_last * e_last
    xs = []
    total = 0.0
    feasible = True
    for ei, yi in zip(e[:-1], y[:-1]):
        numer = ei * yi
        denom = ei * ei - el2
        if numer == 0.0:
            xde = 0.0
        elif numer < denom:
            xde = numer / denom
        else:
            feasible = False
            break
        xs.append(ei * xde)
        total += xde * xde
    if feasible and total < 1.0:
        return xs + [e_last * math.sqrt(1.0 - total)]
    return _closest_sorted(e[:-1], y[:-1]) + [0.0]


def closest_body_point(e: Sequence[float], q: Sequence[float]) -> list[float]:
    """Closest point on the axis-aligned ellipse/ellipsoid ``e`` to body point ``q``."""
    n = len(e)
    y = [abs(qi) for qi in q]
    # Largest axis first; among equal axes, zero coordinates first so that the
    # trailing (smallest) axis carries a non-zero coordinate whenever possible.
    order = sorted(range(n), key=lambda i: (-e[i], y[i]))
    xs = _closest_sorted([float(e[i]) for i in order], [y[i] for i in order])
    out = [0.0] * n
    for k, i in enumerate(order):
        out[i] = math.copysign(xs[k], q[i]) if q[i] != 0.0 else xs[k]
    return out


def _params_from_body(x: Sequence[float], e: Sequence[float]) -> tuple[float, float]:
    if len(e) == 2:
        return math.atan2(x[1] / e[1], x[0] / e[0]) % (2 * math.pi), math.pi / 2
    c = max(-1.0, min(1.0, x[2] / e[2]))
    v = math.acos(c)
    if abs(c) == 1.0:
        return 0.0, v
    return math.atan2(x[1] / e[1], x[0] / e[0]) % (2 * math.pi), v


def closest_point(obs: Obstacle, P, t: float = 0.0) -> ClosestPoint:
    """Nearest boundary point to ``P`` at time ``t``.

    For interior points the nearest boundary point is still returned, with
    ``inside=True`` and the true (positive) Euclidean distance.

    Raises:
        ConvergenceFailure: the root finder failed (non-finite input or
            pathological axis ratios).
    """
    P = np.asarray(P, dtype=float)
    if not np.all(np.isfinite(P)):
        raise ConvergenceFailure("closest_point called with non-finite position")
    e = obs.semi_axes(t)
    center = obs.center(t)
    q = obs.orientation.T @ (P - center)
    e_list = e.tolist()
    q_list = q.tolist()
    x = closest_body_point(e_list, q_list)
    diff = [qi - xi for qi, xi in zip(q_list, x)]
    distance = math.sqrt(sum(d * d for d in diff))
    level = sum((qi / ei) ** 2 for qi, ei in zip(q_list, e_list))
    inside = level < 1.0 and distance > INSIDE_TOL
    point = center + obs.orientation @ np.array(x)
    return ClosestPoint(point, _params_from_body(x, e_list), distance, inside)


def signed_distance(obs: Obstacle, P, t: float = 0.0) -> float:
    """Boundary distance, negative when ``P`` is strictly inside."""
    cp = closest_point(obs, P, t)
    return -cp.distance if cp.inside else cp.distance
