"""Write one problem in all three formats, read each back, and compare values.

Run: python3 demos/04_format_round_trip.py
"""

import tempfile
from pathlib import Path

import numpy as np

from rimdp import FiniteTimeReachability, Problem, Specification, random_imdp, value_iteration
from rimdp.io import FormatProblem, read_problem, write_problem

imdp = random_imdp(2000, num_actions=2, support=8, seed=1)
spec = Specification(FiniteTimeReachability([0, 10, 20], 50))
reference = value_iteration(Problem(imdp, spec)).values

with tempfile.TemporaryDirectory() as tmp:
    tmp = Path(tmp)
    targets = {
        "prism": (tmp / "model", None),
        "bmdp": (tmp / "model.bmdp", None),
        "native": (tmp / "model.imdp", tmp / "spec.json"),
    }
    for fmt, (model, spec_path) in targets.items():
        write_problem(fmt, FormatProblem(imdp, spec, spec.prop.reach), model, spec_path)
        size = sum(p.stat().st_size for p in tmp.glob(model.name + "*"))
        back = read_problem(fmt, model, spec_path)
        back_spec = back.spec or spec  # bmdp files carry no property
        vals = value_iteration(Problem(back.imdp, back_spec)).values
        print(f"{fmt:7s} {size:9d} bytes  max value difference {np.max(np.abs(vals - reference)):.1e}")
