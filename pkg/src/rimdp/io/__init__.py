"""Readers and writers for the PRISM explicit, bmdp-tool and native formats."""

from __future__ import annotations

import numpy as np

from ..bellman import Maximize, Pessimistic
from ..solver import FiniteTimeReachability, Problem, Specification, value_iteration
from .bmdp import read_bmdp_tool, write_bmdp_tool
from .common import FormatProblem
from .native import (
    read_native,
    read_native_model,
    read_native_spec,
    write_native,
    write_native_model,
    write_native_spec,
)
from .prism import read_prism, write_prism

FORMATS = ("prism", "bmdp", "native")
DEFAULT_HORIZON = 100


def read_problem(fmt, model, spec=None, dtype=None, check=True) -> FormatProblem:
    """Read a model in any format.

    ``model`` is the PRISM stem, the bmdp-tool file or the native container;
    ``spec`` is the native specification JSON (ignored otherwise).
    """
    if fmt == "prism":
        return read_prism(model, dtype or "f64", check)
    if fmt == "bmdp":
        imdp, terminal = read_bmdp_tool(model, dtype or "f64", check)
        return FormatProblem(imdp, None, terminal)
    if fmt == "native":
        return read_native(model, spec, dtype, check)
    raise ValueError(f"unknown format {fmt!r}; expected one of {FORMATS}")


def write_problem(fmt, problem, model, spec=None):
    if fmt == "prism":
        return write_prism(model, problem)
    if fmt == "bmdp":
        return [write_bmdp_tool(model, problem)]
    if fmt == "native":
        return write_native(model, spec, problem)
    raise ValueError(f"unknown format {fmt!r}; expected one of {FORMATS}")


def default_spec(terminal_states, horizon=DEFAULT_HORIZON):
    """Specification used when a bmdp-tool model has to be solved or re-encoded."""
    return Specification(FiniteTimeReachability(terminal_states, horizon), Pessimistic, Maximize)


def with_spec(fp: FormatProblem, horizon=DEFAULT_HORIZON) -> FormatProblem:
    if fp.spec is not None:
        return fp
    return FormatProblem(fp.imdp, default_spec(fp.terminal_states or (), horizon), fp.terminal_states)


def convert(from_format, src, to_format, dst, src_spec=None, dst_spec=None, dtype=None, check=True,
            horizon=DEFAULT_HORIZON, workers=1):
    """Re-encode a model and confirm the values survive.

    ``src``/``dst`` are model paths (PRISM stems for ``prism``); the native
    format also takes ``src_spec``/``dst_spec``. Sources without a
    specification (bmdp-tool) are checked with a ``horizon``-step
    maximize-pessimistic reachability query of their terminal states.
    Returns ``(problem, max_abs_difference)``; the difference is ``None``
    when ``check`` is false.
    """
    fp = with_spec(read_problem(from_format, src, src_spec, dtype), horizon)
    write_problem(to_format, fp, dst, dst_spec)
    if not check:
        return fp, None
    back = read_problem(to_format, dst, dst_spec, fp.imdp.dtype)
    spec = back.spec if back.spec is not None else fp.spec
    before = value_iteration(Problem(fp.imdp, fp.spec), workers=workers).values
    after = value_iteration(Problem(back.imdp, spec), workers=workers).values
    diff = float(np.max(np.abs(np.asarray(before - after, dtype=np.float64)))) if len(before) else 0.0
    return fp, diff


__all__ = [
    "FORMATS",
    "FormatProblem",
    "convert",
    "default_spec",
    "read_bmdp_tool",
    "read_native",
    "read_native_model",
    "read_native_spec",
    "read_prism",
    "read_problem",
    "write_bmdp_tool",
    "write_native",
    "write_native_model",
    "write_native_spec",
    "write_prism",
    "write_problem",
]
