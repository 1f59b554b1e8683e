"""Collision-avoidance vector fields for a double-integrator agent among moving ellipses and ellipsoids."""

from .control import ControlParams, control_input, effective_obstacles, inflation_radius, saturate
from .errors import CavfError, ConvergenceFailure, IOFailure, NumericFailure, ParseError, ValidationFailure
from .field import FieldParams, blended_field, field_jacobian, field_value, single_obstacle_field, wall_obstacles
from .geometry import (
    ClosestPoint,
    Obstacle,
    boundary_point,
    boundary_velocity,
    closest_point,
    expansion_velocity,
    inflate,
    make_obstacle,
    outward_normal,
    signed_distance,
)
from .scenario import (
    Scenario,
    builtin_names,
    builtin_scenario,
    load_scenario,
    parse_scenario,
    serialize_scenario,
    write_field_grid,
    write_summary,
    write_trajectory,
)
from .sim import AgentState, Outcome, SimConfig, SimResult, run, sample_field_grid, step

__all__ = [
    "AgentState", "CavfError", "ClosestPoint", "ControlParams", "ConvergenceFailure", "FieldParams",
    "IOFailure", "NumericFailure", "Obstacle", "Outcome", "ParseError", "Scenario", "SimConfig",
    "SimResult", "ValidationFailure", "blended_field", "boundary_point", "boundary_velocity",
    "builtin_names", "builtin_scenario", "closest_point", "control_input", "effective_obstacles",
    "expansion_velocity", "field_jacobian", "field_value", "inflate", "inflation_radius",
    "load_scenario", "make_obstacle", "outward_normal", "parse_scenario", "run", "sample_field_grid",
    "saturate", "serialize_scenario", "signed_distance", "single_obstacle_field", "step",
    "wall_obstacles", "write_field_grid", "write_summary", "write_trajectory",
]
