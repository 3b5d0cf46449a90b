"""Synthesize robust policies and re-check them with a fixed policy.

Run: python3 demos/03_policy_synthesis.py
"""

import numpy as np

from rimdp import (
    FiniteTimeReachability,
    InfiniteTimeReachability,
    Problem,
    Specification,
    control_synthesis,
    random_imdp,
    verify_policy,
)

imdp = random_imdp(40, num_actions=3, support=4, seed=7)
reach = [0, 1]

spec = Specification(FiniteTimeReachability(reach, 6))
policy, vf = control_synthesis(Problem(imdp, spec))
print("time-dependent policy, first 5 states (columns t0..t5):")
for s in range(5):
    print(f"  {s}: {' '.join(policy.actions[s])}")
check = verify_policy(imdp, policy, spec)
print("re-evaluated policy matches the optimum:", np.array_equal(check.values, vf.values))

spec = Specification(InfiniteTimeReachability(reach, eps=1e-8))
policy, vf = control_synthesis(Problem(imdp, spec))
check = verify_policy(imdp, policy, spec)
print(f"\nstationary policy after {vf.iterations} iterations")
print(f"  mean optimal value     {np.mean(vf.values):.8f}")
print(f"  mean value of policy   {np.mean(check.values):.8f}")
print(f"  largest gap            {np.max(np.abs(check.values - vf.values)):.2e}")
