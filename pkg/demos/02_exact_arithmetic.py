"""Solve the same query in float64, float32 and exact rationals.

The rational run is the ground truth, so its distance from each float run
shows how much rounding each precision adds.

Run: python3 demos/02_exact_arithmetic.py
"""

from fractions import Fraction

from rimdp import FiniteTimeReachability, Problem, Specification, three_state_example, value_iteration

prop = FiniteTimeReachability(reach=[2], time_horizon=12)
exact = value_iteration(Problem(three_state_example("rational"), Specification(prop))).values
print("exact values:")
for s, v in enumerate(exact):
    print(f"  {s}: {v}  (~{float(v):.17g}, denominator has {len(str(v.denominator))} digits)")

for dtype in ("f64", "f32"):
    vals = value_iteration(Problem(three_state_example(dtype), Specification(prop))).values
    err = max(abs(Fraction(float(a)) - b) for a, b in zip(vals, exact))
    print(f"{dtype}: max error {float(err):.3e}")
