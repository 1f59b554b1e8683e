"""Avoid an ellipse that translates and grows, built from an in-memory scenario document.

Run: python3 demos/moving_obstacle.py
"""

import json

from cavf import parse_scenario, run

document = {
    "format_version": 1,
    "name": "drifting",
    "dimension": 2,
    "obstacles": [
        {
            "id": "blob",
            "center": [0.5, 0.1],
            "semi_axes": [0.15, 0.08],
            "velocity": [0.0, 0.05],
            "semi_axes_rate": [0.01, 0.01],
        }
    ],
    "agent": {"position": [0.1, 0.3], "velocity": [0.0, 0.0]},
    "target": [0.9, 0.4],
    "sim": {"dt": 0.01, "t_max": 20.0},
}

result = run(parse_scenario(json.dumps(document)))
m = result.metrics
print(f"outcome {result.outcome.value} after {result.final_time:.2f} s")
print(f"path length {m.path_length:.3f} m, closest approach {m.min_clearance:.4f} m")
