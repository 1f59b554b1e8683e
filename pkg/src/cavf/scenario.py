"""
Scenario documents and output files.

Scenarios are JSON objects (schema in the README). Parsing fills in
defaults, rejects unknown keys and validates the physics: obstacles must
not overlap over the run, the agent must start outside every obstacle and
the target must stay clear of them. Serializing a parsed scenario writes
every resolved value, so ``parse(serialize(s)) == s``.

Output formats:

* trajectory CSV: ``t, x.., vx.., ux.., min_clearance, active_obstacle_id``
* field grid CSV: ``# format_version=1`` line, then ``x.., hx.., inside, failed``
* summary JSON: outcome plus the five run metrics
"""

from __future__ import annotations

import copy
import csv
import functools
import io
import json
import math
from dataclasses import dataclass
from importlib import resources
from typing import Any, Optional, Sequence

import numpy as np

from .control import ControlParams
from .errors import IOFailure, ParseError, ValidationFailure
from .field import RECEDING_MODES, WALL_AXIS_RATIO, FieldParams, wall_obstacles
from .geometry import (
    DEFAULT_INFLUENCE_DISTANCE,
    DEFAULT_SEMI_AXES_MIN,
    Obstacle,
    rotation_2d,
    rotation_from_axis_angle,
)
from .sim import AgentState, FieldGrid, SimConfig, SimResult

FORMAT_VERSION = 1
TRAJECTORY_FORMAT_VERSION = 1
FIELD_GRID_FORMAT_VERSION = 1
SUMMARY_FORMAT_VERSION = 1

SCHEMA = {
    "": {"format_version", "name", "description", "dimension", "domain", "obstacles", "agent", "target", "field", "control", "sim"},
    "domain": {"lower", "upper", "influence_distance", "axis_ratio"},
    "obstacles.*": {"id", "center", "velocity", "semi_axes", "semi_axes_rate", "semi_axes_min", "orientation", "influence_distance"},
    "agent": {"position", "velocity"},
    "field": {"p", "a_i", "b_i", "target_epsilon", "receding", "rotate_walls"},
    "control": {"k_p", "k_v", "u_max", "jacobian_step"},
    "sim": {"dt", "t_max", "arrival_pos_tol", "arrival_vel_tol", "record_stride"},
}

NUMERIC_KEYS = {
    "field.p", "field.a_i", "field.b_i", "field.target_epsilon",
    "control.k_p", "control.k_v", "control.u_max", "control.jacobian_step",
    "sim.dt", "sim.t_max", "sim.arrival_pos_tol", "sim.arrival_vel_tol", "sim.record_stride",
    "domain.influence_distance", "domain.axis_ratio",
}


@dataclass(frozen=True)
class Orientation:
    """Fixed obstacle orientation: a planar angle (2D) or axis-angle (3D), radians."""

    angle: float = 0.0
    axis: Optional[tuple] = None

    def matrix(self, dim: int) -> np.ndarray:
        if dim == 2:
            return rotation_2d(self.angle)
        axis = self.axis if self.axis is not None else (0.0, 0.0, 1.0)
        return rotation_from_axis_angle(axis, self.angle)


@dataclass(frozen=True)
class ObstacleSpec:
    """Obstacle as written in a scenario file."""

    id: str
    center: tuple
    semi_axes: tuple
    velocity: tuple
    semi_axes_rate: tuple
    semi_axes_min: float = DEFAULT_SEMI_AXES_MIN
    orientation: Orientation = Orientation()
    influence_distance: float = DEFAULT_INFLUENCE_DISTANCE

    def build(self) -> Obstacle:
        dim = len(self.center)
        return Obstacle(
            center0=self.center,
            velocity=self.velocity,
            semi_axes0=self.semi_axes,
            semi_axes_rate=self.semi_axes_rate,
            orientation=self.orientation.matrix(dim),
            influence_distance=self.influence_distance,
            semi_axes_min=self.semi_axes_min,
            id=self.id,
        )


@dataclass(frozen=True)
class Domain:
    lower: tuple
    upper: tuple
    influence_distance: float = DEFAULT_INFLUENCE_DISTANCE
    axis_ratio: float = WALL_AXIS_RATIO

    def __getitem__(self, i):
        return (self.lower, self.upper)[i]


@dataclass(frozen=True)
class Scenario:
    name: str
    dimension: int
    obstacle_specs: tuple
    agent_position: tuple
    agent_velocity: tuple
    target: tuple
    field: FieldParams
    control: ControlParams
    sim: SimConfig
    domain: Optional[Domain] = None
    description: str = ""

    @functools.cached_property
    def obstacles(self) -> list[Obstacle]:
        return [spec.build() for spec in self.obstacle_specs]

    @functools.cached_property
    def walls(self) -> list[Obstacle]:
        if self.domain is None:
            return []
        return wall_obstacles(
            self.domain.lower,
            self.domain.upper,
            axis_ratio=self.domain.axis_ratio,
            influence_distance=self.domain.influence_distance,
        )

    def all_obstacles(self) -> list[Obstacle]:
        return self.obstacles + self.walls

    @property
    def agent(self) -> AgentState:
        return AgentState(np.array(self.agent_position), np.array(self.agent_velocity))

    @property
    def scale(self) -> float:
        return scene_scale(self.domain, self.agent_position, self.target)


def scene_scale(domain, start, target) -> float:
    """Characteristic length: domain diagonal, else start-target distance."""
    if domain is not None:
        return float(np.linalg.norm(np.subtract(domain.upper, domain.lower)))
    dist = float(np.linalg.norm(np.subtract(target, start)))
    return dist if dist > 0 else 1.0


# ---------------------------------------------------------------- parsing


def _check_keys(obj: dict, section: str, path: str):
    allowed = SCHEMA[section]
    for key in obj:
        if key not in allowed:
            where = f"{path}.{key}" if path else key
            raise ParseError(f"unknown key '{where}'")


def _expect(kind, value, path: str):
    ok = {
        "object": isinstance(value, dict),
        "list": isinstance(value, list),
        "string": isinstance(value, str),
        "bool": isinstance(value, bool),
        "number": isinstance(value, (int, float)) and not isinstance(value, bool),
        "int": isinstance(value, int) and not isinstance(value, bool),
    }[kind]
    if not ok:
        raise ParseError(f"'{path}' must be a {kind}, got {type(value).__name__}")
    return value


def _number(obj: dict, key: str, path: str, default=None):
    if key not in obj or obj[key] is None:
        return default
    return float(_expect("number", obj[key], f"{path}.{key}" if path else key))


def _vector(value, path: str, dim: Optional[int]) -> tuple:
    _expect("list", value, path)
    for i, item in enumerate(value):
        _expect("number", item, f"{path}[{i}]")
    if dim is not None and len(value) != dim:
        raise ValidationFailure("DIMENSION_MISMATCH", f"'{path}' has {len(value)} components, expected {dim}")
    return tuple(float(v) for v in value)


def _orientation(value, dim: int, path: str) -> Orientation:
    if value is None:
        return Orientation() if dim == 2 else Orientation(axis=(0.0, 0.0, 1.0))
    if dim == 2:
        return Orientation(angle=float(_expect("number", value, path)))
    _expect("object", value, path)
    for key in value:
        if key not in ("axis", "angle"):
            raise ParseError(f"unknown key '{path}.{key}'")
    axis = _vector(value.get("axis", [0.0, 0.0, 1.0]), f"{path}.axis", 3)
    if not any(axis):
        raise ValidationFailure("BAD_ORIENTATION", f"'{path}.axis' must be non-zero")
    return Orientation(angle=float(_expect("number", value.get("angle", 0.0), f"{path}.angle")), axis=axis)


def _section(doc: dict, name: str) -> dict:
    value = doc.get(name)
    if value is None:
        return {}
    _expect("object", value, name)
    _check_keys(value, name, name)
    return value


def _physical(build, reason: str):
    try:
        return build()
    except ValueError as exc:
        raise ValidationFailure(reason, str(exc)) from None


def scenario_from_dict(doc: Any) -> Scenario:
    """Build and validate a :class:`Scenario` from a decoded JSON document."""
    _expect("object", doc, "document")
    _check_keys(doc, "", "")
    version = doc.get("format_version", FORMAT_VERSION)
    if version != FORMAT_VERSION:
        raise ParseError(f"unsupported format_version {version!r}")
    if "target" not in doc:
        raise ParseError("missing required key 'target'")
    if "agent" not in doc:
        raise ParseError("missing required key 'agent'")
    agent = _section(doc, "agent")
    if "position" not in agent:
        raise ParseError("missing required key 'agent.position'")

    dim = doc.get("dimension")
    if dim is None:
        dim = len(_expect("list", doc["target"], "target"))
    dim = _expect("int", dim, "dimension")
    if dim not in (2, 3):
        raise ValidationFailure("BAD_DIMENSION", f"dimension must be 2 or 3, got {dim}")

    target = _vector(doc["target"], "target", dim)
    start = _vector(agent["position"], "agent.position", dim)
    start_vel = _vector(agent.get("velocity", [0.0] * dim), "agent.velocity", dim)

    domain = None
    if doc.get("domain") is not None:
        dom = _section(doc, "domain")
        if "lower" not in dom or "upper" not in dom:
            raise ParseError("domain needs 'lower' and 'upper'")
        domain = Domain(
            lower=_vector(dom["lower"], "domain.lower", dim),
            upper=_vector(dom["upper"], "domain.upper", dim),
            influence_distance=_number(dom, "influence_distance", "domain", DEFAULT_INFLUENCE_DISTANCE),
            axis_ratio=_number(dom, "axis_ratio", "domain", WALL_AXIS_RATIO),
        )
        if any(u <= l for l, u in zip(domain.lower, domain.upper)):
            raise ValidationFailure("BAD_DOMAIN", "domain must have positive extent in every dimension")
        if domain.axis_ratio < 50:
            raise ValidationFailure("BAD_DOMAIN", "domain.axis_ratio must be at least 50")
        if not domain.influence_distance > 0:
            raise ValidationFailure("BAD_DOMAIN", "domain.influence_distance must be positive")

    specs = []
    raw_obstacles = doc.get("obstacles") or []
    _expect("list", raw_obstacles, "obstacles")
    ids = set()
    for i, raw in enumerate(raw_obstacles):
        path = f"obstacles[{i}]"
        _expect("object", raw, path)
        _check_keys(raw, "obstacles.*", path)
        for key in ("center", "semi_axes"):
            if key not in raw:
                raise ParseError(f"missing required key '{path}.{key}'")
        oid = raw.get("id", f"obs{i}")
        _expect("string", oid, f"{path}.id")
        if oid in ids:
            raise ValidationFailure("DUPLICATE_ID", f"obstacle id '{oid}' is used twice")
        ids.add(oid)
        spec = ObstacleSpec(
            id=oid,
            center=_vector(raw["center"], f"{path}.center", dim),
            semi_axes=_vector(raw["semi_axes"], f"{path}.semi_axes", dim),
            velocity=_vector(raw.get("velocity", [0.0] * dim), f"{path}.velocity", dim),
            semi_axes_rate=_vector(raw.get("semi_axes_rate", [0.0] * dim), f"{path}.semi_axes_rate", dim),
            semi_axes_min=_number(raw, "semi_axes_min", path, DEFAULT_SEMI_AXES_MIN),
            orientation=_orientation(raw.get("orientation"), dim, f"{path}.orientation"),
            influence_distance=_number(raw, "influence_distance", path, DEFAULT_INFLUENCE_DISTANCE),
        )
        _physical(spec.build, "BAD_OBSTACLE")
        specs.append(spec)

    scale = scene_scale(domain, start, target)
    fsec = _section(doc, "field")
    receding = fsec.get("receding", "tangential")
    _expect("string", receding, "field.receding")
    rotate_walls = fsec.get("rotate_walls", True)
    _expect("bool", rotate_walls, "field.rotate_walls")
    p = _number(fsec, "p", "field", 0.5)
    if not 0.0 < p < 1.0:
        raise ValidationFailure("P_OUT_OF_RANGE", f"field.p must lie in the open interval (0, 1), got {p}")
    if receding not in RECEDING_MODES:
        raise ValidationFailure("BAD_FIELD", f"field.receding must be one of {RECEDING_MODES}")
    fparams = _physical(
        lambda: FieldParams(
            p=p,
            a_i=_number(fsec, "a_i", "field", 0.01),
            b_i=_number(fsec, "b_i", "field", 0.01),
            target_epsilon=_number(fsec, "target_epsilon", "field", 1e-6 * scale),
            receding=receding,
            rotate_walls=rotate_walls,
        ),
        "BAD_FIELD",
    )

    csec = _section(doc, "control")
    cparams = _physical(
        lambda: ControlParams(
            k_p=_number(csec, "k_p", "control", 2.0),
            k_v=_number(csec, "k_v", "control", 1.0),
            u_max=_number(csec, "u_max", "control", None),
            jacobian_step=_number(csec, "jacobian_step", "control", 1e-5 * scale),
        ),
        "BAD_CONTROL",
    )

    ssec = _section(doc, "sim")
    stride = ssec.get("record_stride", 1)
    _expect("int", stride, "sim.record_stride")
    start_dist = float(np.linalg.norm(np.subtract(start, target)))
    pos_tol_default = 1e-2 * (start_dist if start_dist > 0 else scale)
    sconfig = _physical(
        lambda: SimConfig(
            dt=_number(ssec, "dt", "sim", 1e-2),
            t_max=_number(ssec, "t_max", "sim", 20.0),
            arrival_pos_tol=_number(ssec, "arrival_pos_tol", "sim", pos_tol_default),
            arrival_vel_tol=_number(ssec, "arrival_vel_tol", "sim", 1e-2),
            record_stride=stride,
        ),
        "BAD_SIM",
    )

    name = doc.get("name", "scenario")
    _expect("string", name, "name")
    description = doc.get("description", "")
    _expect("string", description, "description")
    scenario = Scenario(
        name=name,
        dimension=dim,
        obstacle_specs=tuple(specs),
        agent_position=start,
        agent_velocity=start_vel,
        target=target,
        field=fparams,
        control=cparams,
        sim=sconfig,
        domain=domain,
        description=description,
    )
    validate_scenario(scenario)
    return scenario


def parse_scenario(text: str) -> Scenario:
    """Parse a scenario document.

    Raises:
        ParseError: malformed JSON, unknown keys or wrong types.
        ValidationFailure: physically invalid content (``reason`` says which).
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, exc.lineno, exc.colno) from None
    return scenario_from_dict(doc)


def load_scenario(path) -> Scenario:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ParseError(f"cannot read scenario file {path}: {exc.strerror}") from None
    except UnicodeDecodeError as exc:
        raise ParseError(f"scenario file {path} is not UTF-8: {exc.reason}") from None
    return parse_scenario(text)


def builtin_names() -> list[str]:
    pack = resources.files("cavf") / "scenarios"
    return sorted(p.name[:-5] for p in pack.iterdir() if p.name.endswith(".json"))


def builtin_path(name: str):
    return resources.files("cavf") / "scenarios" / f"{name}.json"


def builtin_scenario(name: str) -> Scenario:
    """One of the shipped scenarios, e.g. ``"fig4"``."""
    path = builtin_path(name)
    if not path.is_file():
        raise ParseError(f"no built-in scenario named '{name}'")
    return parse_scenario(path.read_text(encoding="utf-8"))


# ------------------------------------------------------------- validation


def _shape_inverse(obs: Obstacle, ts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Centers ``(T, N)`` and inverse shape matrices ``R diag(e^2) R^T`` ``(T, N, N)``."""
    axes = np.maximum(obs.semi_axes0 + np.outer(ts, obs.semi_axes_rate), obs.semi_axes_min)
    rot = obs.orientation
    inv = np.einsum("ij,tj,kj->tik", rot, axes**2, rot)
    centers = obs.center0 + np.outer(ts, obs.velocity)
    return centers, inv


def ellipsoids_separated(a: Obstacle, b: Obstacle, ts) -> np.ndarray:
    """Whether ``a`` and ``b`` are strictly disjoint at each time in ``ts``.

    Uses the Perram-Wertheim contact function
    ``F(l) = l (1 - l) r^T [(1 - l) A^-1 + l B^-1]^-1 r``: the ellipsoids are
    disjoint iff ``max_l F(l) > 1``. ``F`` is concave, so a grid search
    followed by golden-section refinement finds the maximum.
    """
    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    ca, ia = _shape_inverse(a, ts)
    cb, ib = _shape_inverse(b, ts)
    r = cb - ca

    def contact(lam):
        lam = np.asarray(lam, dtype=float)
        mats = (1.0 - lam)[..., None, None] * ia + lam[..., None, None] * ib
        sol = np.linalg.solve(mats, r[..., None])[..., 0]
        return lam * (1.0 - lam) * np.einsum("...i,...i->...", r, sol)

    grid = np.linspace(0.0, 1.0, 33)[1:-1]
    vals = np.stack([contact(np.full(len(ts), g)) for g in grid], axis=1)
    best = np.argmax(vals, axis=1)
    lo = np.where(best > 0, grid[np.maximum(best - 1, 0)], 0.0)
    hi = np.where(best < grid.size - 1, grid[np.minimum(best + 1, grid.size - 1)], 1.0)
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    for _ in range(40):
        x1 = hi - invphi * (hi - lo)
        x2 = lo + invphi * (hi - lo)
        left = contact(x1) > contact(x2)
        hi = np.where(left, x2, hi)
        lo = np.where(left, lo, x1)
    peak = np.maximum(contact(0.5 * (lo + hi)), vals.max(axis=1))
    return peak > 1.0


def _sample_times(sim: SimConfig) -> np.ndarray:
    n = int(math.ceil(sim.t_max / sim.dt - 1e-9))
    return np.arange(n + 1) * sim.dt


def validate_scenario(scenario: Scenario) -> None:
    """Physical checks over the run horizon, sampled at ``dt``.

    Raises:
        ValidationFailure: start inside an obstacle, target inside an
            obstacle at some sampled time, obstacles overlapping, or
            start/target outside the domain.
    """
    start = np.array(scenario.agent_position)
    target = np.array(scenario.target)
    if scenario.domain is not None:
        lo, hi = np.array(scenario.domain.lower), np.array(scenario.domain.upper)
        for label, pt in (("agent start", start), ("target", target)):
            if np.any(pt <= lo) or np.any(pt >= hi):
                raise ValidationFailure("OUTSIDE_DOMAIN", f"{label} lies outside the domain")

    obstacles = scenario.all_obstacles()
    for obs in obstacles:
        if obs.level(start, 0.0) <= 1.0:
            raise ValidationFailure("START_INSIDE_OBSTACLE", f"agent starts inside obstacle '{obs.id}'")

    ts = _sample_times(scenario.sim)
    for obs in scenario.obstacles:
        times = ts[:1] if obs.is_static else ts
        centers, inv = _shape_inverse(obs, times)
        # level = q^T (R diag(e^-2) R^T) q
        q = target - centers
        level = np.einsum("ti,ti->t", q, np.linalg.solve(inv, q[..., None])[..., 0])
        if np.any(level <= 1.0):
            t_bad = float(times[np.argmax(level <= 1.0)])
            raise ValidationFailure("TARGET_INSIDE_OBSTACLE", f"target is inside obstacle '{obs.id}' at t={t_bad:g}")

    for i, a in enumerate(obstacles):
        for b in obstacles[i + 1:]:
            if a.is_wall and b.is_wall:
                continue
            times = ts[:1] if (a.is_static and b.is_static) else ts
            sep = ellipsoids_separated(a, b, times)
            if not np.all(sep):
                t_bad = float(times[np.argmin(sep)])
                raise ValidationFailure(
                    "OVERLAPPING_OBSTACLES", f"obstacles '{a.id}' and '{b.id}' overlap at t={t_bad:g}"
                )


# ---------------------------------------------------------- serialization


def scenario_to_dict(scenario: Scenario) -> dict:
    doc: dict = {
        "format_version": FORMAT_VERSION,
        "name": scenario.name,
    }
    if scenario.description:
        doc["description"] = scenario.description
    doc["dimension"] = scenario.dimension
    if scenario.domain is not None:
        d = scenario.domain
        doc["domain"] = {
            "lower": list(d.lower),
            "upper": list(d.upper),
            "influence_distance": d.influence_distance,
            "axis_ratio": d.axis_ratio,
        }
    obstacles = []
    for spec in scenario.obstacle_specs:
        if scenario.dimension == 2:
            orientation: Any = spec.orientation.angle
        else:
            axis = spec.orientation.axis if spec.orientation.axis is not None else (0.0, 0.0, 1.0)
            orientation = {"axis": list(axis), "angle": spec.orientation.angle}
        obstacles.append(
            {
                "id": spec.id,
                "center": list(spec.center),
                "semi_axes": list(spec.semi_axes),
                "velocity": list(spec.velocity),
                "semi_axes_rate": list(spec.semi_axes_rate),
                "semi_axes_min": spec.semi_axes_min,
                "orientation": orientation,
                "influence_distance": spec.influence_distance,
            }
        )
    doc["obstacles"] = obstacles
    doc["agent"] = {"position": list(scenario.agent_position), "velocity": list(scenario.agent_velocity)}
    doc["target"] = list(scenario.target)
    f = scenario.field
    doc["field"] = {
        "p": f.p,
        "a_i": f.a_i,
        "b_i": f.b_i,
        "target_epsilon": f.target_epsilon,
        "receding": f.receding,
        "rotate_walls": f.rotate_walls,
    }
    c = scenario.control
    doc["control"] = {"k_p": c.k_p, "k_v": c.k_v, "u_max": c.u_max, "jacobian_step": c.jacobian_step}
    s = scenario.sim
    doc["sim"] = {
        "dt": s.dt,
        "t_max": s.t_max,
        "arrival_pos_tol": s.arrival_pos_tol,
        "arrival_vel_tol": s.arrival_vel_tol,
        "record_stride": s.record_stride,
    }
    return doc


def serialize_scenario(scenario: Scenario) -> str:
    return json.dumps(scenario_to_dict(scenario), indent=2) + "\n"


# --------------------------------------------------------------- overrides


def _schema_section(parts: list[str]) -> Optional[str]:
    if len(parts) == 1:
        return ""
    if parts[0] == "obstacles" and len(parts) == 3:
        return "obstacles.*"
    if len(parts) == 2 and parts[0] in SCHEMA and parts[0] != "obstacles.*":
        return parts[0]
    return None


def check_override_key(key: str) -> None:
    """Raise :class:`ParseError` unless ``key`` names a schema key."""
    parts = key.split(".")
    section = _schema_section(parts)
    if section is None or parts[-1] not in SCHEMA[section]:
        raise ParseError(f"override key '{key}' is not a scenario schema key")
    if section == "obstacles.*" and not parts[1].isdigit():
        raise ParseError(f"override key '{key}' needs a numeric obstacle index")


def parse_override_value(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_overrides(doc: dict, overrides: Sequence[str]) -> dict:
    """Apply ``key=value`` overrides (dotted keys) to a decoded document.

    Values are decoded as JSON when possible (``0.5``, ``[1, 2]``, ``null``),
    otherwise kept as strings. Returns a new document; validation happens
    when it is parsed.
    """
    doc = copy.deepcopy(doc)
    for item in overrides:
        if "=" not in item:
            raise ParseError(f"override '{item}' is not of the form key=value")
        key, raw = item.split("=", 1)
        key = key.strip()
        check_override_key(key)
        value = parse_override_value(raw.strip())
        parts = key.split(".")
        if parts[0] == "obstacles":
            idx = int(parts[1])
            obstacles = doc.get("obstacles") or []
            if idx >= len(obstacles):
                raise ParseError(f"override key '{key}': no obstacle at index {idx}")
            obstacles[idx][parts[2]] = value
        elif len(parts) == 1:
            doc[key] = value
        else:
            section = doc.get(parts[0])
            if section is None:
                section = doc[parts[0]] = {}
            if not isinstance(section, dict):
                raise ParseError(f"override key '{key}': '{parts[0]}' is not an object")
            section[parts[1]] = value
    return doc


# ------------------------------------------------------------------ output


def _fmt(value: float) -> str:
    return f"{value:.17g}"


def _open_sink(sink):
    if hasattr(sink, "write"):
        return sink, False
    try:
        return open(sink, "w", encoding="utf-8", newline=""), True
    except OSError as exc:
        raise IOFailure(f"cannot open {sink} for writing: {exc.strerror}") from None


def trajectory_header(dim: int) -> list[str]:
    axes = "xyz"[:dim]
    return (
        ["t"]
        + list(axes)
        + [f"v{a}" for a in axes]
        + [f"u{a}" for a in axes]
        + ["min_clearance", "active_obstacle_id"]
    )


def write_trajectory(result: SimResult, sink) -> None:
    """One CSV row per recorded sample, numbers with 17 significant digits."""
    dim = result.final_state.position.shape[0]
    fh, owned = _open_sink(sink)
    try:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(trajectory_header(dim))
        for s in result.samples:
            row = [_fmt(s.t)]
            row += [_fmt(v) for v in s.position]
            row += [_fmt(v) for v in s.velocity]
            row += [_fmt(v) for v in s.control]
            row += [_fmt(s.min_clearance), s.active_obstacle_id]
            writer.writerow(row)
    except OSError as exc:
        raise IOFailure(f"failed writing trajectory: {exc}") from None
    finally:
        if owned:
            fh.close()


def read_trajectory(source) -> dict:
    """Read a trajectory CSV back into column arrays (``position`` is ``(K, N)``)."""
    text = source.read() if hasattr(source, "read") else open(source, encoding="utf-8").read()
    rows = list(csv.reader(io.StringIO(text)))
    header, body = rows[0], rows[1:]
    dim = (len(header) - 3) // 3
    data = np.array([[float(v) for v in row[:-1]] for row in body]).reshape(len(body), len(header) - 1)
    return {
        "t": data[:, 0],
        "position": data[:, 1 : 1 + dim],
        "velocity": data[:, 1 + dim : 1 + 2 * dim],
        "control": data[:, 1 + 2 * dim : 1 + 3 * dim],
        "min_clearance": data[:, 1 + 3 * dim],
        "active_obstacle_id": [row[-1] for row in body],
    }


def write_field_grid(grid: FieldGrid, sink) -> None:
    """Field grid CSV: a version comment, a header and one row per grid point."""
    dim = grid.points.shape[1]
    axes = "xyz"[:dim]
    fh, owned = _open_sink(sink)
    try:
        fh.write(f"# format_version={FIELD_GRID_FORMAT_VERSION} t={_fmt(grid.t)}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(list(axes) + [f"h{a}" for a in axes] + ["inside", "failed"])
        for p, h, ins, bad in zip(grid.points, grid.values, grid.inside, grid.failed):
            writer.writerow([_fmt(v) for v in p] + [_fmt(v) for v in h] + [int(ins), int(bad)])
    except OSError as exc:
        raise IOFailure(f"failed writing field grid: {exc}") from None
    finally:
        if owned:
            fh.close()


def read_field_grid(source) -> dict:
    text = source.read() if hasattr(source, "read") else open(source, encoding="utf-8").read()
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    rows = list(csv.reader(lines))
    header, body = rows[0], rows[1:]
    dim = (len(header) - 2) // 2
    data = np.array([[float(v) for v in row] for row in body]).reshape(len(body), len(header))
    return {
        "points": data[:, :dim],
        "values": data[:, dim : 2 * dim],
        "inside": data[:, 2 * dim].astype(bool),
        "failed": data[:, 2 * dim + 1].astype(bool),
    }


def _json_number(value: float):
    return value if math.isfinite(value) else None


def summary_dict(result: SimResult, name: str = "") -> dict:
    return {
        "format_version": SUMMARY_FORMAT_VERSION,
        "trajectory_format_version": TRAJECTORY_FORMAT_VERSION,
        "scenario": name,
        "outcome": result.outcome.value,
        "metrics": {k: _json_number(v) for k, v in result.metrics.as_dict().items()},
        "final_time": result.final_time,
        "samples": len(result.samples),
        "message": result.message,
    }


def write_summary(result: SimResult, sink, name: str = "") -> None:
    """Summary JSON; non-finite metrics (no obstacles) are written as null."""
    fh, owned = _open_sink(sink)
    try:
        json.dump(summary_dict(result, name), fh, indent=2)
        fh.write("\n")
    except OSError as exc:
        raise IOFailure(f"failed writing summary: {exc}") from None
    finally:
        if owned:
            fh.close()
