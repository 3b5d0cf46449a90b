"""Time the kernel on growing models and show that thread count never changes results.

Run: python3 demos/05_threads_and_scaling.py
"""

import os
import time

import numpy as np

from rimdp import FiniteTimeReachability, Problem, Specification, random_imdp, value_iteration

print(f"{os.cpu_count()} CPU(s) visible")
for n in (1000, 5000, 20000):
    imdp = random_imdp(n, num_actions=2, support=10, seed=0)
    problem = Problem(imdp, Specification(FiniteTimeReachability(range(0, n, 100), 50)))
    results = {}
    for workers in (1, 4):
        start = time.perf_counter()
        results[workers] = value_iteration(problem, workers=workers).values
        print(f"n={n:6d} workers={workers}  {time.perf_counter() - start:.3f} s")
    print(f"         bit-identical: {np.array_equal(results[1], results[4])}")
