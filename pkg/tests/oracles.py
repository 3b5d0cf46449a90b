"""Reference solvers that share no code with the library.

* ``dual_expectation``: the inner LP ``min V.p s.t. l <= p <= u, sum p = 1``
  solved through its Lagrangian dual. The dual function
  ``g(lam) = lam + sum_i (V_i - lam) * (l_i if V_i >= lam else u_i)`` is
  concave and piecewise linear with kinks at the ``V_i``, so its maximum
  is attained at one of them. Works in exact arithmetic on Fractions.
* ``vertex_expectation``: brute force over the vertices of the feasible
  polytope (every coordinate but one at a bound).
* ``linprog_expectation`` / ``dense_value_iteration``: the same recursion
  with HiGHS as the inner solver.
* ``mdp_value_iteration``: textbook value iteration for a point-valued MDP.
"""

from __future__ import annotations

import itertools
from fractions import Fraction

import numpy as np
from scipy.optimize import linprog


def dual_expectation(lower, upper, values, optimistic=False):
    lower, upper, values = list(lower), list(upper), list(values)
    sign = -1 if optimistic else 1
    v = [sign * x for x in values]
    best = None
    for lam in v:
        g = lam + sum(((vi - lam) * (li if vi >= lam else ui) for vi, li, ui in zip(v, lower, upper)), 0 * lam)
        if best is None or g > best:
            best = g
    return sign * best


def vertex_expectation(lower, upper, values, optimistic=False, tol=1e-12):
    lower, upper, values = (np.asarray(a, dtype=np.float64) for a in (lower, upper, values))
    n = len(values)
    if n == 1:
        return float(values[0])
    bits = np.array(list(itertools.product((0, 1), repeat=n - 1)), dtype=bool)
    best = None
    for free in range(n):
        others = [i for i in range(n) if i != free]
        p_others = np.where(bits, upper[others], lower[others])
        p_free = 1.0 - p_others.sum(axis=1)
        ok = (p_free >= lower[free] - tol) & (p_free <= upper[free] + tol)
        if not ok.any():
            continue
        obj = p_others[ok] @ values[others] + p_free[ok] * values[free]
        cand = obj.max() if optimistic else obj.min()
        if best is None or (cand > best if optimistic else cand < best):
            best = cand
    assert best is not None, "infeasible column"
    return float(best)


def linprog_expectation(lower, upper, values, optimistic=False):
    c = -np.asarray(values, dtype=np.float64) if optimistic else np.asarray(values, dtype=np.float64)
    n = len(c)
    res = linprog(
        c,
        A_eq=np.ones((1, n)),
        b_eq=[1.0],
        bounds=list(zip(np.asarray(lower, dtype=float), np.asarray(upper, dtype=float))),
        method="highs",
        options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10},
    )
    assert res.status == 0, res.message
    return -res.fun if optimistic else res.fun


def dense_columns(imdp):
    """Per state, a list of (label, dense lower, dense upper)."""
    lo = np.asarray(imdp.transition.lower.todense(), dtype=np.float64)
    up = np.asarray(imdp.transition.upper.todense(), dtype=np.float64)
    out = []
    for s in range(imdp.num_states):
        a, b = imdp.stateptr[s], imdp.stateptr[s + 1]
        out.append([(imdp.actions[j], lo[:, j], up[:, j]) for j in range(a, b)])
    return out


def dense_value_iteration(imdp, reach, horizon, optimistic=False, maximize=True, inner=linprog_expectation):
    """Finite-horizon reachability with an LP at every (state, action)."""
    cols = dense_columns(imdp)
    n = imdp.num_states
    reach = set(reach)
    v = np.array([1.0 if s in reach else 0.0 for s in range(n)])
    for _ in range(horizon):
        nxt = v.copy()
        for s in range(n):
            if s in reach:
                continue
            q = [inner(lo, up, v, optimistic) for _, lo, up in cols[s]]
            nxt[s] = max(q) if maximize else min(q)
        v = nxt
    return v


def mdp_value_iteration(P, stateptr, reach, horizon, maximize=True):
    """Classical reachability value iteration; ``P`` is dense ``(n, columns)``."""
    n = P.shape[0]
    reach = np.asarray(sorted(reach), dtype=np.int64)
    v = np.zeros(n)
    v[reach] = 1.0
    for _ in range(horizon):
        q = P.T @ v
        opt = np.maximum.reduceat(q, stateptr[:-1]) if maximize else np.minimum.reduceat(q, stateptr[:-1])
        opt[reach] = 1.0
        v = opt
    return v


def random_column(rng, n, exact=False, denominator=40):
    """Feasible interval column of length ``n`` (possibly with zero bounds, ties)."""
    while True:
        if exact:
            lo = [Fraction(int(k), denominator) for k in rng.integers(0, denominator // n + 1, size=n)]
            up = [l + Fraction(int(k), denominator) for l, k in zip(lo, rng.integers(0, denominator, size=n))]
            up = [min(u, Fraction(1)) for u in up]
        else:
            lo = rng.random(n) / n * rng.integers(0, 2, size=n)
            up = np.minimum(lo + rng.random(n) * rng.choice([0.0, 0.5, 1.0], size=n), 1.0)
        if sum(lo) <= 1 <= sum(up):
            if exact:
                a, b = np.empty(n, dtype=object), np.empty(n, dtype=object)
                a[:], b[:] = lo, up
                return a, b
            return np.asarray(lo), np.asarray(up)


def random_values(rng, n, exact=False):
    if exact:
        v = np.empty(n, dtype=object)
        v[:] = [Fraction(int(k), 8) for k in rng.integers(0, 9, size=n)]
        return v
    v = rng.random(n)
    if n > 2 and rng.random() < 0.3:  # force ties
        v[rng.integers(0, n)] = v[0]
    return v
