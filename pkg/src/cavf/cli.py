"""
Command-line front end.

    cavf simulate SCENARIO [--out DIR] [--set KEY=VALUE ...] [--quiet]
    cavf field    SCENARIO --time T --resolution R [--slice a,b,c,d] [--out DIR]
    cavf sweep    SCENARIO --sweep KEY=v1,v2,... [--jobs N] [--out DIR]
    cavf validate SCENARIO

``SCENARIO`` is a file path or ``builtin:NAME`` for a shipped scenario.
Exit codes: 0 success (ARRIVED for simulate), 1 error, 2 TIMEOUT, 3 COLLISION.
The default output directory is ``$CAVF_OUT_DIR`` or the working directory.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .errors import CavfError, ParseError, ValidationFailure
from .scenario import (
    NUMERIC_KEYS,
    apply_overrides,
    builtin_path,
    check_override_key,
    scenario_from_dict,
    write_field_grid,
    write_summary,
    write_trajectory,
)
from .sim import Outcome, run, sample_field_grid

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_TIMEOUT = 2
EXIT_COLLISION = 3

OUTCOME_EXIT = {
    Outcome.ARRIVED: EXIT_OK,
    Outcome.TIMEOUT: EXIT_TIMEOUT,
    Outcome.COLLISION: EXIT_COLLISION,
    Outcome.NUMERIC_FAILURE: EXIT_ERROR,
}

OUT_DIR_ENV = "CAVF_OUT_DIR"

SWEEP_COLUMNS = ["value", "outcome", "completion_time", "min_clearance", "path_length", "max_control_norm", "final_error"]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors, which would read as TIMEOUT.
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _read_document(source: str) -> dict:
    if source.startswith("builtin:"):
        path = builtin_path(source[len("builtin:"):])
        if not path.is_file():
            raise ParseError(f"no built-in scenario named '{source[len('builtin:'):]}'")
        text = path.read_text(encoding="utf-8")
    else:
        try:
            text = Path(source).read_text(encoding="utf-8")
        except OSError as exc:
            raise ParseError(f"cannot read scenario file '{source}': {exc.strerror}") from None
        except UnicodeDecodeError as exc:
            raise ParseError(f"scenario file '{source}' is not UTF-8: {exc.reason}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{source}: {exc.msg}", exc.lineno, exc.colno) from None


def _load(args):
    doc = apply_overrides(_read_document(args.scenario), args.set or [])
    return doc, scenario_from_dict(doc)


def _out_dir(args) -> Path:
    out = Path(args.out or os.environ.get(OUT_DIR_ENV) or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _info(args, message: str):
    if not args.quiet:
        print(message, file=sys.stderr)


def _fmt(value: float) -> str:
    return f"{value:.17g}"


def cmd_simulate(args) -> int:
    _, scenario = _load(args)
    result = run(scenario)
    out = _out_dir(args)
    traj = out / f"{scenario.name}_trajectory.csv"
    summary = out / f"{scenario.name}_summary.json"
    write_trajectory(result, traj)
    write_summary(result, summary, scenario.name)
    m = result.metrics
    print(
        f"outcome={result.outcome.value} scenario={scenario.name} "
        f"completion_time={m.completion_time:.6g} min_clearance={m.min_clearance:.6g} "
        f"final_error={m.final_error:.6g}"
    )
    if result.message:
        print(f"{result.outcome.value}: {result.message}", file=sys.stderr)
    _info(args, f"wrote {traj} and {summary}")
    return OUTCOME_EXIT[result.outcome]


def _parse_plane(text: str):
    try:
        parts = [float(v) for v in text.split(",")]
    except ValueError:
        raise UsageError(f"--slice expects four comma-separated numbers, got '{text}'") from None
    if len(parts) != 4 or not any(parts[:3]):
        raise UsageError("--slice expects a,b,c,d with (a, b, c) non-zero")
    return parts


def cmd_field(args) -> int:
    _, scenario = _load(args)
    if not (math.isfinite(args.time) and 0.0 <= args.time <= scenario.sim.t_max):
        raise ValidationFailure("TIME_OUT_OF_RANGE", f"--time must lie in [0, t_max={scenario.sim.t_max:g}]")
    if args.resolution < 2:
        raise UsageError("--resolution must be at least 2")
    plane = None
    if scenario.dimension == 3:
        if args.slice is None:
            raise UsageError("3D scenarios need --slice a,b,c,d")
        plane = _parse_plane(args.slice)
    grid = sample_field_grid(scenario, args.time, args.resolution, plane)
    path = _out_dir(args) / f"{scenario.name}_field.csv"
    write_field_grid(grid, path)
    print(f"field={path} points={len(grid.points)} failed={int(grid.failed.sum())}")
    return EXIT_OK


def _sweep_one(job):
    doc, key, value = job
    try:
        scenario = scenario_from_dict(apply_overrides(doc, [f"{key}={json.dumps(value)}"]))
        result = run(scenario)
    except CavfError as exc:
        return [value, exc.code] + [""] * (len(SWEEP_COLUMNS) - 2)
    m = result.metrics
    return [
        value,
        result.outcome.value,
        m.completion_time,
        m.min_clearance,
        m.path_length,
        m.max_control_norm,
        m.final_error,
    ]


def _parse_sweep(text: str):
    if "=" not in text:
        raise UsageError("--sweep expects KEY=v1,v2,...")
    key, raw = text.split("=", 1)
    key = key.strip()
    check_override_key(key)
    numeric = key in NUMERIC_KEYS or (key.startswith("obstacles.") and key.rsplit(".", 1)[-1] in ("influence_distance", "semi_axes_min"))
    if not numeric:
        raise UsageError(f"sweep key '{key}' is not a numeric scenario parameter")
    try:
        values = [float(v) for v in raw.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"sweep values must be numbers: '{raw}'") from None
    if not values:
        raise UsageError("sweep needs at least one value")
    if key == "sim.record_stride":
        values = [int(v) for v in values]
    return key, sorted(values)


def cmd_sweep(args) -> int:
    key, values = _parse_sweep(args.sweep)
    doc, scenario = _load(args)
    jobs = [(doc, key, v) for v in values]
    workers = args.jobs if args.jobs else (os.cpu_count() or 1)
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
            rows = list(pool.map(_sweep_one, jobs))
    else:
        rows = [_sweep_one(job) for job in jobs]
    path = _out_dir(args) / f"{scenario.name}_sweep.csv"
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([key if c == "value" else c for c in SWEEP_COLUMNS])
        for row in rows:
            writer.writerow([_fmt(v) if isinstance(v, float) else v for v in row])
    print(f"sweep={path} runs={len(rows)}")
    return EXIT_OK


def cmd_validate(args) -> int:
    _, scenario = _load(args)
    print(f"valid scenario={scenario.name} dimension={scenario.dimension} obstacles={len(scenario.obstacle_specs)}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cavf", description="Collision-avoidance vector field simulator.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, outputs=True):
        p.add_argument("scenario", help="scenario file, or builtin:NAME")
        p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a scenario key (repeatable)")
        p.add_argument("--quiet", action="store_true", help="suppress informational messages")
        if outputs:
            p.add_argument("--out", metavar="DIR", help=f"output directory (default ${OUT_DIR_ENV} or .)")

    p = sub.add_parser("simulate", help="run a simulation, write trajectory and summary")
    common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("field", help="sample the field on a grid")
    common(p)
    p.add_argument("--time", type=float, default=0.0, help="frozen time (s)")
    p.add_argument("--resolution", type=int, default=20, help="grid points per axis")
    p.add_argument("--slice", metavar="a,b,c,d", help="plane a x + b y + c z = d (3D only)")
    p.set_defaults(func=cmd_field)

    p = sub.add_parser("sweep", help="run one simulation per parameter value")
    common(p)
    p.add_argument("--sweep", required=True, metavar="KEY=v1,v2,...")
    p.add_argument("--jobs", type=int, default=0, help="parallel runs (default: CPU count)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("validate", help="parse and validate a scenario")
    common(p, outputs=False)
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"cavf: usage error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except CavfError as exc:
        print(f"cavf: {exc.code}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
