"""Sample the avoidance field of a single static ellipse and write it as CSV.

Run: python3 demos/field_slice.py [OUT_DIR]
"""

import sys
from pathlib import Path

import numpy as np

from cavf import builtin_scenario, sample_field_grid, write_field_grid

out = Path(sys.argv[1] if len(sys.argv) > 1 else ".")
out.mkdir(parents=True, exist_ok=True)

scenario = builtin_scenario("fig1")
grid = sample_field_grid(scenario, t=0.0, resolution=40)
write_field_grid(grid, str(out / "fig1_field.csv"))

speed = np.linalg.norm(grid.values, axis=1)
outside = ~grid.inside
print(f"{outside.sum()} of {len(speed)} grid points lie outside the obstacle")
print(f"field magnitude outside: min {speed[outside].min():.3f}, max {speed[outside].max():.3f}")
