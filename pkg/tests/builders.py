"""Small scenario documents for tests."""

import copy

from cavf.scenario import scenario_from_dict


def doc(obstacles=(), start=(0.0, 0.0), target=(1.0, 0.0), **sections):
    """Scenario document with optional sections, e.g. ``sim={"dt": 0.02}``."""
    d = {
        "format_version": 1,
        "name": sections.pop("name", "test"),
        "agent": {"position": list(start), "velocity": list(sections.pop("velocity", [0.0] * len(start)))},
        "target": list(target),
        "obstacles": [copy.deepcopy(o) for o in obstacles],
    }
    d.update(copy.deepcopy(sections))
    return d


def scenario(*args, **kwargs):
    return scenario_from_dict(doc(*args, **kwargs))
