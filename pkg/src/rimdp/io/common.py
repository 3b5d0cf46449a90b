from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from ..errors import MissingFile, ParseError
from ..model import CSCMatrix, IntervalMDP, imdp_from_csc
from ..numeric import field_dtype, parse_scalar, zero
from ..solver import Problem, Specification


@dataclass(eq=False)
class FormatProblem:
    """What a reader returns: the model, plus spec or terminal states when the format has them."""

    imdp: IntervalMDP
    spec: Optional[Specification] = None
    terminal_states: Optional[tuple] = None

    @property
    def problem(self):
        if self.spec is None:
            raise ValueError("this file carries no specification")
        return Problem(self.imdp, self.spec)


def unpack(problem):
    """``(imdp, spec_or_None)`` from a Problem, FormatProblem or bare IMDP."""
    if isinstance(problem, IntervalMDP):
        return problem, None
    return problem.imdp, problem.spec


def require(path):
    path = Path(path)
    if not path.is_file():
        raise MissingFile(path)
    return path


def parse_bound(text, dtype, file, line):
    try:
        return parse_scalar(text, dtype)
    except (ValueError, ZeroDivisionError):
        raise ParseError(file, line, f"not a number: {text!r}") from None


def check_bounds(lo, hi, file, line):
    if not (0 <= lo <= 1 and 0 <= hi <= 1):
        raise ParseError(file, line, f"probability bounds [{lo}, {hi}] outside [0, 1]", kind="EntryOutOfRange")
    if lo > hi:
        raise ParseError(file, line, f"lower bound {lo} exceeds upper bound {hi}", kind="BoundOrderViolation")


def assemble(num_states, columns, dtype, check=True):
    """Build an IMDP from ``columns``: ``(source, label, [(dest, lo, hi), ...])``.

    Columns must be ordered by source state; destinations within a column
    are sorted here. Zero bounds are stored as structural zeros.
    """
    dtype = field_dtype(dtype)
    stateptr = np.zeros(num_states + 1, dtype=np.int64)
    labels = []
    lo_ptr, up_ptr = [0], [0]
    lo_rows, up_rows, lo_vals, up_vals = [], [], [], []
    z = zero(dtype)
    for src, label, entries in columns:
        stateptr[src + 1] += 1
        labels.append(label)
        for dst, lo, hi in sorted(entries, key=lambda e: e[0]):
            if hi != z:
                up_rows.append(dst)
                up_vals.append(hi)
            if lo != z:
                lo_rows.append(dst)
                lo_vals.append(lo)
        lo_ptr.append(len(lo_rows))
        up_ptr.append(len(up_rows))
    np.cumsum(stateptr, out=stateptr)
    shape = (num_states, len(columns))

    def csc(ptr, rows, vals):
        arr = np.empty(len(vals), dtype=dtype)
        arr[:] = vals
        return CSCMatrix(np.asarray(ptr, dtype=np.int64), np.asarray(rows, dtype=np.int64), arr, shape)

    return imdp_from_csc(csc(lo_ptr, lo_rows, lo_vals), csc(up_ptr, up_rows, up_vals), stateptr, labels, check)


def column_entries(imdp, j):
    """``(dest, lower, upper)`` triples of column ``j`` over its upper support."""
    rows, lo, up = imdp.transition.column(j)
    return zip(rows.tolist(), lo, up)
