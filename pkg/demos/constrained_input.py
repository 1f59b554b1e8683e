"""Compare bounded and unbounded control on the three-obstacle crossing.

With a norm bound the controller inflates obstacles it approaches quickly,
so the bounded run keeps more distance while never exceeding u_max.

Run: python3 demos/constrained_input.py
"""

import dataclasses

from cavf import builtin_scenario, run

bounded = builtin_scenario("fig6")
unbounded = dataclasses.replace(bounded, control=dataclasses.replace(bounded.control, u_max=None))

for label, scenario in (("bounded", bounded), ("unbounded", unbounded)):
    m = run(scenario).metrics
    print(f"{label:>9}: |u| max {m.max_control_norm:6.3f}, min clearance {m.min_clearance:.3f} m, "
          f"arrival {m.completion_time:.2f} s")
