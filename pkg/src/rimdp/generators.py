"""Seeded random IMDPs for tests and benchmarks, and a small worked example.

Random generator: every state gets ``num_actions`` actions (or a uniform
count in ``1..num_actions`` with ``vary_actions``). Each column draws a
support of ``support`` distinct destinations uniformly (``ceil(density*n)``
when ``density`` is given), then ``lower = u*scale`` and
``upper = lower + v*(1 - scale)`` with ``u, v ~ U[0, 1)`` and
``scale = 1/support``; columns violating ``sum(lower) <= 1 <= sum(upper)``
are redrawn. Single-destination columns are point distributions.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from .model import CSCMatrix, IntervalMDP, build_imdp, build_interval_probabilities, imdp_from_csc
from .numeric import field_dtype, is_exact

RATIONAL_DENOMINATOR = 1000


def three_state_example(dtype=None) -> IntervalMDP:
    """Three states, two actions in the first two, an absorbing third state."""
    prob1 = build_interval_probabilities(
        [[0.0, 0.5], [0.1, 0.3], [0.2, 0.1]],
        [[0.5, 0.7], [0.6, 0.5], [0.7, 0.3]],
        dtype=dtype,
    )
    prob2 = build_interval_probabilities(
        [[0.1, 0.2], [0.2, 0.3], [0.3, 0.4]],
        [[0.6, 0.6], [0.5, 0.5], [0.4, 0.4]],
        dtype=dtype,
    )
    prob3 = build_interval_probabilities([0.0, 0.0, 1.0], [0.0, 0.0, 1.0], dtype=dtype)
    return build_imdp([(["a1", "a2"], prob1), (["a1", "a2"], prob2), (["sink"], prob3)])


def _supports(rng, ncols, n, m):
    if m * 4 > n:
        return np.sort(np.argsort(rng.random((ncols, n)), axis=1)[:, :m], axis=1)
    rows = np.sort(rng.integers(0, n, size=(ncols, m)), axis=1)
    while True:
        dup = np.nonzero(np.any(np.diff(rows, axis=1) == 0, axis=1))[0]
        if not len(dup):
            return rows
        rows[dup] = np.sort(rng.integers(0, n, size=(len(dup), m)), axis=1)


def _bounds(rng, ncols, m, degenerate, exact):
    if m == 1:
        ones = np.ones((ncols, 1))
        return ones, ones.copy()
    if degenerate:
        if exact:
            w = rng.integers(1, 100, size=(ncols, m))
            return w, w
        w = rng.random((ncols, m)) + 0.01
        p = w / w.sum(axis=1, keepdims=True)
        return p, p.copy()
    scale = 1.0 / m
    lower = np.empty((ncols, m))
    upper = np.empty((ncols, m))
    todo = np.arange(ncols)
    while len(todo):
        lo = rng.random((len(todo), m)) * scale
        up = lo + rng.random((len(todo), m)) * (1 - scale)
        if exact:
            lo = np.floor(lo * RATIONAL_DENOMINATOR) / RATIONAL_DENOMINATOR
            up = np.ceil(up * RATIONAL_DENOMINATOR) / RATIONAL_DENOMINATOR
        lower[todo], upper[todo] = lo, up
        ok = (lo.sum(axis=1) <= 1 - 1e-6) & (up.sum(axis=1) >= 1 + 1e-6)
        todo = todo[~ok]
    return lower, upper


def random_imdp(
    num_states,
    num_actions=2,
    support=None,
    density=None,
    seed=0,
    dtype="f64",
    degenerate=False,
    vary_actions=False,
) -> IntervalMDP:
    """Random IMDP; ``degenerate=True`` makes ``lower == upper`` (a plain MDP)."""
    dtype = field_dtype(dtype)
    exact = is_exact(dtype)
    rng = np.random.default_rng(seed)
    n = int(num_states)
    if support is None:
        support = math.ceil(density * n) if density is not None else min(n, 3)
    m = max(1, min(int(support), n))
    if vary_actions:
        counts = rng.integers(1, num_actions + 1, size=n)
    else:
        counts = np.full(n, num_actions)
    ncols = int(counts.sum())
    stateptr = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
    labels = [str(a) for c in counts for a in range(c)]

    rows = _supports(rng, ncols, n, m)
    lower, upper = _bounds(rng, ncols, m, degenerate, exact)
    colptr = np.arange(ncols + 1, dtype=np.int64) * m
    if exact:
        if degenerate and m > 1:
            tot = lower.sum(axis=1)
            lo_vals = np.array(
                [Fraction(int(w), int(t)) for w, t in zip(lower.ravel(), np.repeat(tot, m))], dtype=object
            )
            up_vals = lo_vals.copy()
        else:
            lo_vals = np.array(
                [Fraction(int(round(x * RATIONAL_DENOMINATOR)), RATIONAL_DENOMINATOR) for x in lower.ravel()],
                dtype=object,
            )
            up_vals = np.array(
                [Fraction(int(round(x * RATIONAL_DENOMINATOR)), RATIONAL_DENOMINATOR) for x in upper.ravel()],
                dtype=object,
            )
    else:
        lo_vals = lower.ravel().astype(dtype)
        up_vals = upper.ravel().astype(dtype)
    shape = (n, ncols)
    up = CSCMatrix(colptr, rows.ravel().astype(np.int64), up_vals, shape)
    keep = np.asarray(lo_vals != 0, dtype=bool)
    lo_colptr = np.concatenate([[0], np.cumsum(keep.reshape(ncols, m).sum(axis=1))]).astype(np.int64)
    lo = CSCMatrix(lo_colptr, rows.ravel()[keep].astype(np.int64), lo_vals[keep], shape)
    return imdp_from_csc(lo, up, stateptr, labels, check=True)
