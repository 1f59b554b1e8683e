"""
Collision-avoidance vector field.

The desired velocity at ``P`` for a single obstacle is

    h(P) = R(P) |P_f - P|^-p [gamma |P_f - P| n + (P_f - P)] + gamma V_b'

where ``n`` is the outward normal at the closest boundary point, ``gamma``
a sigmoid that is 1 on the boundary and 0 at the influence distance,
``R`` a rotation steering around the obstacle, and ``V_b'`` the gated
boundary velocity. Several obstacles are blended with inverse-distance
weights, so each obstacle fully owns the field on its own boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .geometry import (
    Obstacle,
    boundary_velocity,
    closest_point,
    make_obstacle,
    outward_normal,
)

RECEDING_MODES = ("tangential", "drop")
WALL_AXIS_RATIO = 100.0
WEIGHT_DISTANCE_FLOOR = 1e-12
ANTIPARALLEL_TOL = 1e-9


@dataclass(frozen=True)
class FieldParams:
    """Shape constants of the field.

    ``receding`` selects how boundary velocity pointing away from the agent is
    handled: ``"tangential"`` keeps only its tangential part, ``"drop"``
    ignores the boundary velocity altogether.
    """

    p: float = 0.5
    a_i: float = 0.01
    b_i: float = 0.01
    target_epsilon: float = 1e-6
    receding: str = "tangential"
    rotate_walls: bool = True

    def __post_init__(self):
        if not 0.0 < self.p < 1.0:
            raise ValueError(f"p must lie in (0, 1), got {self.p}")
        if not self.target_epsilon > 0.0:
            raise ValueError("target_epsilon must be positive")
        if not self.b_i >= 0.0:
            raise ValueError("b_i must be non-negative")
        if self.receding not in RECEDING_MODES:
            raise ValueError(f"receding must be one of {RECEDING_MODES}")


def _x(d: float, d_i: float) -> float:
    # (d + d2) / (d d2) written as a sum so the product cannot underflow.
    # Overflows to +inf for subnormal d, which callers treat as the limit.
    d2 = d - d_i
    return 1.0 / d + 1.0 / d2


def gamma(d: float, d_i: float, a_i: float) -> float:
    """Sigmoid blending factor: 1 on the boundary, 0 from ``d_i`` outward."""
    if d <= 0.0:
        return 1.0
    if d >= d_i:
        return 0.0
    ax = a_i * _x(d, d_i)
    if math.isinf(ax):
        return 1.0 if ax > 0 else 0.0
    # hypot keeps the ratio finite when a_i * x overflows a square.
    return ax / math.hypot(1.0, 2.0 * ax) + 0.5


def beta(d: float, d_i: float, b_i: float) -> float:
    """Bump factor gating the rotation: 0 on the boundary and from ``d_i`` outward."""
    if d <= 0.0 or d >= d_i:
        return 0.0
    if b_i == 0.0:
        return 1.0
    x = _x(d, d_i)
    return math.exp(-b_i * x * x)


def signed_angle_2d(a, b) -> float:
    """Angle from ``a`` to ``b`` in (-pi, pi], counter-clockwise positive."""
    return math.atan2(a[0] * b[1] - a[1] * b[0], a[0] * b[0] + a[1] * b[1])


def _unsigned_angle(a, b) -> float:
    cross = np.cross(a, b)
    return math.atan2(float(np.linalg.norm(cross)), float(np.dot(a, b)))


def rotation_axis(n_hat, target_dir) -> tuple[np.ndarray, bool]:
    """Unit axis ``n_hat x target_dir`` for the 3D rotation.

    Returns ``(axis, degenerate)``. When the vectors are (anti)parallel the
    axis is ``n_hat x e_k`` for the first basis vector ``e_k`` not parallel
    to ``n_hat`` and ``degenerate`` is True.
    """
    n_hat = np.asarray(n_hat, dtype=float)
    target_dir = np.asarray(target_dir, dtype=float)
    cross = np.cross(n_hat, target_dir)
    norm = np.linalg.norm(cross)
    scale = np.linalg.norm(n_hat) * np.linalg.norm(target_dir)
    if norm > ANTIPARALLEL_TOL * scale:
        return cross / norm, False
    for k in range(3):
        e_k = np.zeros(3)
        e_k[k] = 1.0
        c = np.cross(n_hat, e_k)
        cn = np.linalg.norm(c)
        if cn > 0.5:
            return c / cn, True
    raise AssertionError("unreachable: a unit vector is not parallel to every axis")


def _rodrigues(axis: np.ndarray, angle: float) -> np.ndarray:
    k = np.array([[0.0, -axis[2], axis[1]], [axis[2], 0.0, -axis[0]], [-axis[1], axis[0], 0.0]])
    return np.eye(3) + math.sin(angle) * k + (1.0 - math.cos(angle)) * (k @ k)


def rotation_angle(n_hat, target_dir, beta_val: float) -> float:
    """Rotation magnitude ``beta/2 * angle(n_hat, target_dir)`` (signed in 2D)."""
    if len(n_hat) == 2:
        return 0.5 * beta_val * signed_angle_2d(n_hat, target_dir)
    return 0.5 * beta_val * _unsigned_angle(n_hat, target_dir)


def rotation_operator(n_hat, target_dir, beta_val: float) -> np.ndarray:
    """Local rotation applied to the field.

    In 2D this is ``[[cos a, sin a], [-sin a, cos a]]`` with
    ``a = beta/2 * signed_angle(n_hat, target_dir)``. In 3D it is the rotation
    by ``-beta/2 * angle`` about ``n_hat x target_dir``, which agrees with the
    2D operator in the plane spanned by the two vectors.
    """
    n = len(n_hat)
    alpha = rotation_angle(n_hat, target_dir, beta_val)
    if alpha == 0.0:
        return np.eye(n)
    if n == 2:
        c, s = math.cos(alpha), math.sin(alpha)
        return np.array([[c, s], [-s, c]])
    axis, _ = rotation_axis(n_hat, target_dir)
    return _rodrigues(axis, -alpha)


def attraction_field(P, target, params: FieldParams) -> np.ndarray:
    """Obstacle-free field ``|P_f - P|^-p (P_f - P)``; zero inside the target ball."""
    r = np.asarray(target, dtype=float) - np.asarray(P, dtype=float)
    dist = math.sqrt(float(r @ r))
    if dist <= params.target_epsilon:
        return np.zeros_like(r)
    return dist ** (-params.p) * r


class ObstacleContribution(NamedTuple):
    """Diagnostic breakdown of one obstacle's share of the blended field."""

    id: str
    weight: float
    field: np.ndarray
    distance: float
    gamma: float
    beta: float
    alpha: float
    inside: bool
    degenerate_axis: bool


class FieldSample(NamedTuple):
    value: np.ndarray
    per_obstacle: list


def _local_field(P: np.ndarray, obs: Obstacle, target: np.ndarray, t: float, params: FieldParams):
    """Local field of one obstacle plus the distance used for blending."""
    r = target - P
    dist_f = math.sqrt(float(r @ r))
    cp = closest_point(obs, P, t)
    d = 0.0 if cp.inside else cp.distance
    d_i = obs.influence_distance
    if dist_f <= params.target_epsilon:
        return ObstacleContribution(obs.id, 0.0, np.zeros_like(P), d, 0.0, 0.0, 0.0, cp.inside, False)
    scale = dist_f ** (-params.p)
    if d >= d_i:
        return ObstacleContribution(obs.id, 0.0, scale * r, d, 0.0, 0.0, 0.0, cp.inside, False)

    g = gamma(d, d_i, params.a_i)
    n_hat = outward_normal(obs, cp.params, t)
    h = scale * (g * dist_f * n_hat + r)

    b = 0.0
    alpha = 0.0
    degenerate = False
    if not (obs.is_wall and not params.rotate_walls):
        b = beta(d, d_i, params.b_i)
        if b > 0.0:
            target_dir = target - obs.center(t)
            alpha = rotation_angle(n_hat, target_dir, b)
            if P.shape[0] == 3:
                _, degenerate = rotation_axis(n_hat, target_dir)
            h = rotation_operator(n_hat, target_dir, b) @ h

    if not obs.is_static:
        v_b = boundary_velocity(obs, cp.params, t)
        normal_speed = float(v_b @ n_hat)
        if normal_speed > 0.0:
            h = h + g * v_b
        elif params.receding == "tangential":
            h = h + g * (v_b - normal_speed * n_hat)
    return ObstacleContribution(obs.id, 0.0, h, d, g, b, alpha, cp.inside, degenerate)


def single_obstacle_field(P, obs: Obstacle, target, t: float, params: FieldParams) -> np.ndarray:
    """Field induced by one (possibly moving) obstacle."""
    P = np.asarray(P, dtype=float)
    return _local_field(P, obs, np.asarray(target, dtype=float), t, params).field


def blend_weights(distances: Sequence[float]) -> np.ndarray:
    """Normalized ``prod_{j != i} d_j`` weights, computed in log space."""
    d = np.maximum(np.asarray(distances, dtype=float), WEIGHT_DISTANCE_FLOOR)
    # prod_{j != i} d_j = exp(sum_j log d_j - log d_i); the common sum cancels.
    logw = -np.log(d)
    logw -= logw.max()
    w = np.exp(logw)
    return w / w.sum()


def blended_field(P, obstacles: Sequence[Obstacle], target, t: float, params: FieldParams) -> FieldSample:
    """Distance-weighted blend of the local fields, with per-obstacle diagnostics."""
    P = np.asarray(P, dtype=float)
    target = np.asarray(target, dtype=float)
    if not obstacles:
        return FieldSample(attraction_field(P, target, params), [])
    parts = [_local_field(P, obs, target, t, params) for obs in obstacles]
    w = blend_weights([c.distance for c in parts])
    parts = [c._replace(weight=float(wi)) for c, wi in zip(parts, w)]
    value = np.zeros_like(P)
    for c in parts:
        value += c.weight * c.field
    return FieldSample(value, parts)


def field_value(P, obstacles: Sequence[Obstacle], target, t: float, params: FieldParams) -> np.ndarray:
    return blended_field(P, obstacles, target, t, params).value


def central_difference_jacobian(fn: Callable[[np.ndarray], np.ndarray], P, step: float) -> np.ndarray:
    """Jacobian by symmetric difference quotients; column k is d fn / d P_k."""
    if not step > 0:
        raise ValueError("step must be positive")
    P = np.asarray(P, dtype=float)
    n = P.shape[0]
    jac = np.empty((n, n))
    for k in range(n):
        dp = np.zeros(n)
        dp[k] = step
        jac[:, k] = (np.asarray(fn(P + dp)) - np.asarray(fn(P - dp))) / (2.0 * step)
    return jac


def field_jacobian(P, obstacles, target, t: float, params: FieldParams, step: float) -> np.ndarray:
    """Spatial jacobian of the blended field at frozen time ``t``."""
    return central_difference_jacobian(lambda Q: field_value(Q, obstacles, target, t, params), P, step)


def wall_obstacles(
    lower,
    upper,
    *,
    axis_ratio: float = WALL_AXIS_RATIO,
    influence_distance: float = 0.3,
) -> list[Obstacle]:
    """Flat ellipses/ellipsoids bounding an axis-aligned box.

    Each facet gets one obstacle lying just outside the box, tangent to the
    facet at its center. Along-facet semi-axes are half the facet extent so
    neighbouring walls never overlap; the across-facet semi-axis is the
    smallest along-facet semi-axis divided by ``axis_ratio``.
    """
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    if lower.shape != upper.shape or lower.shape[0] not in (2, 3):
        raise ValueError("domain bounds must be matching 2- or 3-vectors")
    if np.any(upper <= lower):
        raise ValueError("domain must have positive extent in every dimension")
    n = lower.shape[0]
    mid = 0.5 * (lower + upper)
    half = 0.5 * (upper - lower)
    names = "xyz"
    walls = []
    for k in range(n):
        along = np.delete(half, k)
        thickness = along.min() / axis_ratio
        semi = half.copy()
        semi[k] = thickness
        for side, bound, sign in (("min", lower[k], -1.0), ("max", upper[k], 1.0)):
            center = mid.copy()
            center[k] = bound + sign * thickness
            walls.append(
                make_obstacle(
                    center,
                    semi,
                    influence_distance=influence_distance,
                    is_wall=True,
                    id=f"wall_{names[k]}{side}",
                )
            )
    return walls
