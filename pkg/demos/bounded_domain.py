"""Navigate a walled unit square with a central ellipse and report which obstacle was nearest.

Run: python3 demos/bounded_domain.py
"""

from collections import Counter

from cavf import builtin_scenario, run

scenario = builtin_scenario("fig5")
result = run(scenario)
nearest = Counter(s.active_obstacle_id for s in result.samples)

print(f"outcome {result.outcome.value}, min clearance {result.metrics.min_clearance:.4f} m")
for obstacle_id, count in nearest.most_common():
    print(f"  {obstacle_id:>12}: nearest for {count} samples")
