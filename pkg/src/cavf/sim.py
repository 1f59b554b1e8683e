"""
Closed-loop simulation of a double-integrator agent following the field.

Each step builds the effective (possibly inflated) obstacle set, evaluates
the blended field and its jacobian at the current position, applies the
control law and advances the state with an exact zero-order-hold update.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, NamedTuple, Optional, Sequence

import numpy as np

from .control import control_input, effective_obstacles
from .errors import ConvergenceFailure, NumericFailure
from .field import blended_field, field_jacobian
from .geometry import Obstacle, closest_point

if TYPE_CHECKING:
    from .scenario import Scenario


class Outcome(str, enum.Enum):
    ARRIVED = "ARRIVED"
    TIMEOUT = "TIMEOUT"
    COLLISION = "COLLISION"
    NUMERIC_FAILURE = "NUMERIC_FAILURE"


@dataclass(frozen=True)
class AgentState:
    position: np.ndarray
    velocity: np.ndarray

    def __post_init__(self):
        p = np.array(self.position, dtype=float)
        v = np.array(self.velocity, dtype=float)
        if p.shape != v.shape or p.ndim != 1:
            raise ValueError("position and velocity must be vectors of equal length")
        if not (np.all(np.isfinite(p)) and np.all(np.isfinite(v))):
            raise NumericFailure("agent state has non-finite components")
        p.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "position", p)
        object.__setattr__(self, "velocity", v)


@dataclass(frozen=True)
class SimConfig:
    dt: float = 1e-2
    t_max: float = 20.0
    arrival_pos_tol: float = 1e-2
    arrival_vel_tol: float = 1e-2
    record_stride: int = 1

    def __post_init__(self):
        for name in ("dt", "t_max", "arrival_pos_tol", "arrival_vel_tol"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise ValueError(f"{name} must be positive and finite")
        if not (isinstance(self.record_stride, int) and self.record_stride >= 1):
            raise ValueError("record_stride must be a positive integer")


class Sample(NamedTuple):
    t: float
    position: np.ndarray
    velocity: np.ndarray
    control: np.ndarray
    min_clearance: float
    active_obstacle_id: str


@dataclass(frozen=True)
class Metrics:
    path_length: float
    completion_time: float
    min_clearance: float
    max_control_norm: float
    final_error: float

    def as_dict(self) -> dict:
        return {
            "path_length": self.path_length,
            "completion_time": self.completion_time,
            "min_clearance": self.min_clearance,
            "max_control_norm": self.max_control_norm,
            "final_error": self.final_error,
        }


@dataclass(frozen=True)
class SimResult:
    samples: tuple
    outcome: Outcome
    metrics: Metrics
    final_state: AgentState
    final_time: float
    message: str = ""


def step(state: AgentState, u, dt: float) -> AgentState:
    """Exact double-integrator update for an input held constant over ``dt``."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    u = np.asarray(u, dtype=float)
    with np.errstate(over="ignore", invalid="ignore"):
        p = state.position + state.velocity * dt + 0.5 * dt * dt * u
        v = state.velocity + dt * u
    if not (np.all(np.isfinite(p)) and np.all(np.isfinite(v))):
        raise NumericFailure("state became non-finite")
    return AgentState(p, v)


def min_obstacle_distance(P, obstacles: Sequence[Obstacle], t: float) -> tuple[float, Optional[str]]:
    """Smallest signed clearance to ``obstacles`` and the id of that obstacle.

    Returns ``(inf, None)`` for an empty list. Clearance is negative inside.
    """
    best = math.inf
    best_id = None
    for obs in obstacles:
        cp = closest_point(obs, P, t)
        d = -cp.distance if cp.inside else cp.distance
        if d < best:
            best, best_id = d, obs.id
    return best, best_id


def compute_metrics(samples: Sequence[Sample], final_state: AgentState, final_time: float, target, obstacles, t_final) -> Metrics:
    """Metrics recomputable from the recorded samples.

    With no samples (immediate termination) the metrics describe the
    initial state.
    """
    target = np.asarray(target, dtype=float)
    final_error = float(np.linalg.norm(final_state.position - target))
    if not samples:
        clearance, _ = min_obstacle_distance(final_state.position, obstacles, t_final)
        return Metrics(0.0, final_time, clearance, 0.0, final_error)
    return Metrics(
        path_length=path_length([s.position for s in samples]),
        completion_time=samples[-1].t,
        min_clearance=min(s.min_clearance for s in samples),
        max_control_norm=max(float(np.linalg.norm(s.control)) for s in samples),
        final_error=final_error,
    )


def path_length(positions) -> float:
    positions = np.asarray(positions, dtype=float)
    if len(positions) < 2:
        return 0.0
    return float(np.sum(np.linalg.norm(np.diff(positions, axis=0), axis=1)))


def run(scenario: "Scenario") -> SimResult:
    """Simulate ``scenario`` until arrival, collision or ``t_max``.

    The run is deterministic. Arrival means ``|P - P_f| <= arrival_pos_tol``
    and ``|V| <= arrival_vel_tol``; collision means strictly inside a true
    (non-inflated) obstacle. A numeric failure stops the run and keeps the
    samples recorded so far.
    """
    cfg = scenario.sim
    fparams = scenario.field
    cparams = scenario.control
    target = np.asarray(scenario.target, dtype=float)
    obstacles = scenario.all_obstacles()
    jac_step = cparams.jacobian_step if cparams.jacobian_step is not None else 1e-5 * scenario.scale
    state = scenario.agent
    dim = state.position.shape[0]
    zero = np.zeros(dim)

    samples: list[Sample] = []
    outcome = Outcome.TIMEOUT
    message = ""
    k = 0
    t = 0.0
    while True:
        t = k * cfg.dt
        try:
            clearance, active = min_obstacle_distance(state.position, obstacles, t)
        except ConvergenceFailure as exc:
            outcome, message = Outcome.NUMERIC_FAILURE, str(exc)
            break
        terminal = None
        if clearance < 0.0:
            terminal = Outcome.COLLISION
        elif (
            np.linalg.norm(state.position - target) <= cfg.arrival_pos_tol
            and np.linalg.norm(state.velocity) <= cfg.arrival_vel_tol
        ):
            terminal = Outcome.ARRIVED
        elif t >= cfg.t_max:
            terminal = Outcome.TIMEOUT
        if terminal is not None:
            outcome = terminal
            if k > 0:
                samples.append(Sample(t, state.position, state.velocity, zero, clearance, active or ""))
            break

        try:
            eff = effective_obstacles(state, obstacles, t, cparams)
            h = blended_field(state.position, eff, target, t, fparams).value
            jac = field_jacobian(state.position, eff, target, t, fparams, jac_step)
            u = control_input(state, h, jac, cparams)
            if not np.all(np.isfinite(u)):
                raise NumericFailure(f"non-finite control at t={t}")
            if k % cfg.record_stride == 0:
                samples.append(Sample(t, state.position, state.velocity, u, clearance, active or ""))
            state = step(state, u, cfg.dt)
        except (ConvergenceFailure, NumericFailure) as exc:
            outcome, message = Outcome.NUMERIC_FAILURE, str(exc)
            break
        k += 1

    metrics = compute_metrics(samples, state, t, target, obstacles, t)
    return SimResult(tuple(samples), outcome, metrics, state, t, message)


@dataclass(frozen=True)
class FieldGrid:
    """Field sampled on a uniform grid.

    ``points`` and ``values`` have shape ``(M, N)``; ``inside`` flags points
    strictly inside an obstacle (value set to zero) and ``failed`` flags points
    whose evaluation raised.
    """

    points: np.ndarray
    values: np.ndarray
    inside: np.ndarray
    failed: np.ndarray
    shape: tuple
    t: float


def grid_bounds(scenario: "Scenario", t: float) -> tuple[np.ndarray, np.ndarray]:
    """Domain box, or a padded bounding box of agent, target and obstacles."""
    if scenario.domain is not None:
        return np.asarray(scenario.domain[0], float), np.asarray(scenario.domain[1], float)
    pts = [scenario.agent.position, np.asarray(scenario.target, float)]
    for obs in scenario.obstacles:
        reach = float(np.max(obs.semi_axes(t)))
        pts.append(obs.center(t) - reach)
        pts.append(obs.center(t) + reach)
    pts = np.array(pts)
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    pad = 0.1 * max(float(np.max(hi - lo)), 1e-9)
    return lo - pad, hi + pad


def _slice_points(lo, hi, plane, resolution):
    a = np.asarray(plane[:3], dtype=float)
    d = float(plane[3])
    if not np.any(a):
        raise ValueError("slice plane normal must be non-zero")
    k = int(np.argmax(np.abs(a)))
    others = [i for i in range(3) if i != k]
    g0 = np.linspace(lo[others[0]], hi[others[0]], resolution)
    g1 = np.linspace(lo[others[1]], hi[others[1]], resolution)
    pts = np.zeros((resolution * resolution, 3))
    m0, m1 = np.meshgrid(g0, g1, indexing="ij")
    pts[:, others[0]] = m0.ravel()
    pts[:, others[1]] = m1.ravel()
    pts[:, k] = (d - a[others[0]] * pts[:, others[0]] - a[others[1]] * pts[:, others[1]]) / a[k]
    return pts


def sample_field_grid(scenario: "Scenario", t: float, resolution: int, plane=None) -> FieldGrid:
    """Evaluate the blended field (true obstacles, frozen time) on a grid.

    2D scenes use a ``resolution x resolution`` grid over the domain. 3D
    scenes need ``plane = (a, b, c, d)`` describing ``a x + b y + c z = d``;
    the grid spans the domain along the two coordinates least aligned with
    the plane normal.
    """
    if resolution < 2:
        raise ValueError("resolution must be at least 2")
    lo, hi = grid_bounds(scenario, t)
    dim = lo.shape[0]
    if dim == 2:
        xs = np.linspace(lo[0], hi[0], resolution)
        ys = np.linspace(lo[1], hi[1], resolution)
        mx, my = np.meshgrid(xs, ys, indexing="ij")
        points = np.column_stack([mx.ravel(), my.ravel()])
    else:
        if plane is None:
            raise ValueError("3D field grids need a slice plane")
        points = _slice_points(lo, hi, plane, resolution)

    obstacles = scenario.all_obstacles()
    target = np.asarray(scenario.target, dtype=float)
    values = np.zeros_like(points)
    inside = np.zeros(len(points), dtype=bool)
    failed = np.zeros(len(points), dtype=bool)
    for i, P in enumerate(points):
        try:
            sample = blended_field(P, obstacles, target, t, scenario.field)
        except (ConvergenceFailure, NumericFailure):
            failed[i] = True
            continue
        if any(c.inside for c in sample.per_obstacle):
            inside[i] = True
        else:
            values[i] = sample.value
    return FieldGrid(points, values, inside, failed, (resolution, resolution), t)
