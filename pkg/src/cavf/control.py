"""Field-following control law, input saturation and speed-dependent inflation."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .geometry import Obstacle, boundary_velocity, closest_point, inflate


@dataclass(frozen=True)
class ControlParams:
    """Gains and input bound.

    ``u_max=None`` means the input is unbounded. ``jacobian_step=None`` lets the
    caller pick a step from the scene scale.
    """

    k_p: float = 2.0
    k_v: float = 1.0
    u_max: Optional[float] = None
    jacobian_step: Optional[float] = None

    def __post_init__(self):
        if not self.k_p > 0:
            raise ValueError("k_p must be positive")
        if not self.k_v >= 0:
            raise ValueError("k_v must be non-negative")
        if self.u_max is not None and not self.u_max > 0:
            raise ValueError("u_max must be positive when given")
        if self.jacobian_step is not None and not self.jacobian_step > 0:
            raise ValueError("jacobian_step must be positive when given")


def saturate(u: np.ndarray, u_max: Optional[float]) -> np.ndarray:
    """Scale ``u`` onto the ball of radius ``u_max``, keeping its direction."""
    if u_max is None:
        return u
    norm = float(np.linalg.norm(u))
    if norm <= u_max:
        return u
    u = u * (u_max / norm)
    # Rounding can leave the norm one ulp above the bound.
    while float(np.linalg.norm(u)) > u_max:
        u = u * (1.0 - 2.0**-52)
    return u


def control_input(state, field_value, jacobian, params: ControlParams) -> np.ndarray:
    """``k_p (h - V) + k_v (J V)``, saturated when ``u_max`` is set.

    ``state`` is anything with a ``velocity`` attribute or a ``(P, V)`` pair.
    """
    velocity = state.velocity if hasattr(state, "velocity") else state[1]
    velocity = np.asarray(velocity, dtype=float)
    h = np.asarray(field_value, dtype=float)
    u = params.k_p * (h - velocity) + params.k_v * (np.asarray(jacobian) @ velocity)
    return saturate(u, params.u_max)


def inflation_radius(radial_speed: float, u_max: float) -> float:
    """Braking distance ``v^2 / (2 u_max)`` for a closing speed ``v`` (negative clamps to 0)."""
    if not u_max > 0:
        raise ValueError("u_max must be positive")
    v = max(radial_speed, 0.0)
    return v * v / (2.0 * u_max)


def radial_speed(position, velocity, obs: Obstacle, t: float) -> float:
    """Closing speed of the agent toward ``obs`` in the obstacle frame.

    Measured along the line of sight to the closest boundary point, using the
    boundary velocity (translation plus expansion) at that point. Positive
    when approaching.
    """
    position = np.asarray(position, dtype=float)
    cp = closest_point(obs, position, t)
    los = cp.point - position
    norm = float(np.linalg.norm(los))
    if norm == 0.0:
        return 0.0
    rel = np.asarray(velocity, dtype=float) - boundary_velocity(obs, cp.params, t)
    speed = float(rel @ los) / norm
    return -speed if cp.inside else speed


def effective_obstacles(state, obstacles: Sequence[Obstacle], t: float, params: ControlParams) -> list[Obstacle]:
    """Obstacles inflated by the braking distance of the agent.

    An obstacle is inflated only when the agent lies within the influence
    region of the inflated obstacle, i.e. closer than ``R + d_i`` to the true
    boundary. Walls are never inflated. Identity when ``u_max`` is unset.
    """
    if params.u_max is None:
        return list(obstacles)
    position = np.asarray(state.position if hasattr(state, "position") else state[0], dtype=float)
    velocity = np.asarray(state.velocity if hasattr(state, "velocity") else state[1], dtype=float)
    out = []
    for obs in obstacles:
        if obs.is_wall:
            out.append(obs)
            continue
        cp = closest_point(obs, position, t)
        margin = inflation_radius(radial_speed(position, velocity, obs, t), params.u_max)
        clearance = 0.0 if cp.inside else cp.distance
        if margin > 0.0 and clearance < margin + obs.influence_distance:
            out.append(inflate(obs, margin))
        else:
            out.append(obs)
    return out


def default_jacobian_step(scale: float) -> float:
    return 1e-5 * scale if scale > 0 and math.isfinite(scale) else 1e-5
