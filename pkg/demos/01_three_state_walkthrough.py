"""Build the three-state example by hand and compare the four mode combinations.

Run: python3 demos/01_three_state_walkthrough.py
"""

from rimdp import (
    FiniteTimeReachability,
    Maximize,
    Minimize,
    Optimistic,
    Pessimistic,
    Problem,
    Specification,
    build_imdp,
    build_interval_probabilities,
    value_iteration,
)

# Columns are actions, rows are destinations.
prob1 = build_interval_probabilities(
    lower=[[0.0, 0.5], [0.1, 0.3], [0.2, 0.1]],
    upper=[[0.5, 0.7], [0.6, 0.5], [0.7, 0.3]],
)
prob2 = build_interval_probabilities(
    lower=[[0.1, 0.2], [0.2, 0.3], [0.3, 0.4]],
    upper=[[0.6, 0.6], [0.5, 0.5], [0.4, 0.4]],
)
prob3 = build_interval_probabilities([0.0, 0.0, 1.0], [0.0, 0.0, 1.0])
imdp = build_imdp([(["a1", "a2"], prob1), (["a1", "a2"], prob2), (["sink"], prob3)])
print(f"{imdp.num_states} states, {imdp.num_cols} columns")

for horizon in (1, 5, 10):
    prop = FiniteTimeReachability(reach=[2], time_horizon=horizon)
    print(f"\nreach state 2 within {horizon} steps")
    for strat in (Maximize, Minimize):
        for sat in (Pessimistic, Optimistic):
            vf = value_iteration(Problem(imdp, Specification(prop, sat, strat)))
            vals = ", ".join(f"{v:.6f}" for v in vf.values)
            print(f"  {strat.name.lower():8s} {sat.name.lower():11s} [{vals}]")

# The adversary can only make things worse, so pessimistic <= optimistic.
