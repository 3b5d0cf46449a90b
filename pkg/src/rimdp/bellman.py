"""Robust Bellman operator for interval MDPs.

The inner problem ``min/max_{p in Gamma} sum_s' V(s') p(s')`` over an
interval polytope is solved by O-maximization: order the destinations by
value, start from the lower bounds and pour the remaining mass
``1 - sum(lower)`` into the destinations in order, each up to its upper
bound. Ascending order gives the pessimistic (minimizing) adversary,
descending order the optimistic one.

Two single-column reference routines are provided (a sequential greedy
loop and a prefix-sum formulation in which every position is independent),
together with :class:`BellmanKernel`, the vectorized, multi-threaded
operator used by the solver.
"""

from __future__ import annotations

import enum
from fractions import Fraction

import numpy as np

from .errors import InfeasibleColumn
from .numeric import as_field_array, is_exact
from .parallel import bitonic_sort, chunk_bounds, parallel_ranges, resolve_workers, tree_scan


class SatisfactionMode(str, enum.Enum):
    PESSIMISTIC = "pessimistic"
    OPTIMISTIC = "optimistic"


class StrategyMode(str, enum.Enum):
    MINIMIZE = "minimize"
    MAXIMIZE = "maximize"


Pessimistic = SatisfactionMode.PESSIMISTIC
Optimistic = SatisfactionMode.OPTIMISTIC
Minimize = StrategyMode.MINIMIZE
Maximize = StrategyMode.MAXIMIZE


# --- orderings --------------------------------------------------------------


def ordering(values, satisfaction_mode=Pessimistic, backend="numpy"):
    """Global destination ordering for one Bellman step.

    Ascending values for the pessimistic adversary, descending for the
    optimistic one; equal values keep ascending state index.
    """
    mode = SatisfactionMode(satisfaction_mode)
    values = np.asarray(values)
    descending = mode is Optimistic
    if backend == "bitonic":
        return bitonic_sort(values, descending=descending)
    if backend != "numpy":
        raise ValueError(f"unknown ordering backend {backend!r}")
    keys = -values if descending else values
    return np.argsort(keys, kind="stable")


def column_ordering(support, rank):
    """Restrict a global ordering (given as ``rank[state]``) to a column's support.

    Returns positions into ``support``.
    """
    return np.argsort(rank[np.asarray(support)], kind="stable")


# --- single-column reference O-maximization ---------------------------------
#
# Both routines run the greedy in exact rational arithmetic on the (exactly
# representable) inputs and round each output entry once into the input's
# numeric type. Hence they agree bit for bit although one walks the ordering
# sequentially and the other evaluates every position independently from a
# tree-reduction prefix sum.


def _exact(values):
    return [v if isinstance(v, Fraction) else Fraction(v) for v in values.tolist()]


def _from_exact(values, dtype):
    if is_exact(dtype):
        out = np.empty(len(values), dtype=object)
        out[:] = values
        return out
    return np.array([float(v) for v in values], dtype=np.float64).astype(dtype)


def _prepare(ordering, lower, upper):
    lower = np.asarray(lower)
    upper = np.asarray(upper)
    if lower.shape != upper.shape or lower.ndim != 1:
        raise ValueError("lower and upper must be 1-d arrays of equal length")
    dtype = np.result_type(lower, upper) if lower.dtype != object and upper.dtype != object else object
    lo, up = _exact(lower), _exact(upper)
    order = [int(o) for o in np.asarray(ordering).ravel()]
    if len(set(order)) != len(order) or any(o < 0 or o >= len(lo) for o in order):
        raise ValueError("ordering must list distinct positions of the column")
    missing = {i for i in range(len(lo)) if up[i] > lo[i]} - set(order)
    if missing:
        raise ValueError(f"ordering misses support positions {sorted(missing)}")
    gap = [u - l for l, u in zip(lo, up)]
    total_gap = sum(gap, Fraction(0))
    rem = 1 - sum(lo, Fraction(0))
    if rem < 0 or rem > total_gap:
        if is_exact(dtype):
            raise InfeasibleColumn(None, f"sum(lower) = {1 - rem}, sum(upper) = {1 - rem + total_gap}")
        # Floats: absorb rounding noise from parsed probabilities.
        rem = min(max(rem, Fraction(0)), total_gap)
    return order, lo, gap, rem, dtype


def omaximize_sequential(ordering, lower, upper):
    """Feasible distribution giving maximal mass to the earliest positions.

    ``ordering`` lists positions of the column (0-based), most favoured
    first. Walks the ordering and stops at the first position whose gap
    exceeds the remaining mass.
    """
    order, lo, gap, rem, dtype = _prepare(ordering, lower, upper)
    p = list(lo)
    for o in order:
        if gap[o] < rem:
            p[o] += gap[o]
            rem -= gap[o]
        else:
            p[o] += rem
            break
    return _from_exact(p, dtype)


def omaximize_prefix(ordering, lower, upper):
    """Same result as :func:`omaximize_sequential`, one independent update per position.

    The remaining mass seen by position ``i`` is ``rem - cumgap[i] + gap[o_i]``
    where ``cumgap`` is the inclusive prefix sum of the ordered gaps.
    """
    order, lo, gap, rem, dtype = _prepare(ordering, lower, upper)
    p = list(lo)
    if not order:
        return _from_exact(p, dtype)
    ordered = np.empty(len(order), dtype=object)
    ordered[:] = [gap[o] for o in order]
    cumgap = tree_scan(ordered)
    for i, o in enumerate(order):
        rem_state = max(rem - cumgap[i] + gap[o], Fraction(0))
        p[o] += gap[o] if gap[o] < rem_state else rem_state
    return _from_exact(p, dtype)


def robust_expectation(lower, upper, values, satisfaction_mode=Pessimistic):
    """Worst-case (pessimistic) or best-case (optimistic) expectation of ``values``.

    ``lower``, ``upper`` and ``values`` are dense vectors over destinations.
    """
    values = np.asarray(values)
    upper = np.asarray(upper)
    support = np.nonzero(np.asarray(upper != 0, dtype=bool))[0]
    rank = np.empty(len(values), dtype=np.int64)
    rank[ordering(values, satisfaction_mode)] = np.arange(len(values))
    order = support[column_ordering(support, rank)]
    p = omaximize_sequential(order, lower, upper)
    total = sum((Fraction(v) * Fraction(q) for v, q in zip(values.tolist(), p.tolist())), Fraction(0))
    if values.dtype == object or p.dtype == object:
        return total
    return np.result_type(values, p).type(float(total))


# --- vectorized kernel ------------------------------------------------------


class _Bucket:
    """Columns of one chunk sharing the same support size, as dense 2-d blocks."""

    __slots__ = ("cols", "rows", "lower", "gap", "rem")

    def __init__(self, cols, rows, lower, gap, rem):
        self.cols, self.rows, self.lower, self.gap, self.rem = cols, rows, lower, gap, rem


def _zero_of(dtype):
    return Fraction(0) if is_exact(dtype) else np.dtype(dtype).type(0)


class BellmanKernel:
    """Vectorized robust Bellman operator for one IMDP.

    States are split into ``workers`` contiguous chunks processed in parallel
    threads. Within a chunk, columns are grouped by support size so that the
    per-column sort and prefix sum become row-wise operations on small dense
    blocks. Every state's result depends only on its own columns, so the
    output is independent of the worker count.

    ``scan="tree"`` uses :func:`tree_scan` for the ordered gap sums,
    ``scan="sequential"`` uses ``np.cumsum``.
    """

    def __init__(self, imdp, workers=1, ordering_backend="numpy", scan="tree"):
        self.imdp = imdp
        self.dtype = imdp.dtype
        self.workers = resolve_workers(workers)
        self.ordering_backend = ordering_backend
        if scan not in ("tree", "sequential"):
            raise ValueError(f"unknown scan {scan!r}")
        self.scan = scan
        self.bounds = chunk_bounds(imdp.num_states, self.workers)
        self.chunks = [self._layout(a, b) for a, b in self.bounds]

    def _layout(self, s0, s1):
        imdp = self.imdp
        trans = imdp.transition
        sp = imdp.stateptr
        c0, c1 = int(sp[s0]), int(sp[s1])
        colptr = trans.upper.colptr
        widths = np.diff(colptr[c0 : c1 + 1])
        exact = is_exact(self.dtype)
        buckets = []
        for w in np.unique(widths):
            cols = c0 + np.nonzero(widths == w)[0]
            if w == 0:
                raise InfeasibleColumn(int(cols[0]), f"column {int(cols[0])} has empty support")
            take = colptr[cols][:, None] + np.arange(w)[None, :]
            rows = trans.upper.rowval[take]
            lower = trans.lower_aligned[take]
            gap = trans.gap_aligned[take]
            lsum, gsum = lower[:, 0].copy(), gap[:, 0].copy()
            for j in range(1, w):
                lsum = lsum + lower[:, j]
                gsum = gsum + gap[:, j]
            rem = 1 - lsum
            if exact:
                bad = np.nonzero(np.asarray((rem < 0) | (rem > gsum), dtype=bool))[0]
                if len(bad):
                    raise InfeasibleColumn(int(cols[bad[0]]))
            else:
                rem = np.minimum(np.maximum(rem, 0), gsum).astype(self.dtype)
            buckets.append(_Bucket(cols - c0, rows, lower, gap, rem))
        return s0, s1, c0, c1, buckets

    def rank(self, values, satisfaction_mode):
        order = ordering(values, satisfaction_mode, self.ordering_backend)
        rank = np.empty(len(values), dtype=np.int64)
        rank[order] = np.arange(len(values))
        return rank

    def column_values(self, values, satisfaction_mode, rank=None):
        """Robust expectation of ``values`` for every column."""
        values = self._coerce(values)
        if rank is None:
            rank = self.rank(values, satisfaction_mode)
        out = np.empty(self.imdp.num_cols, dtype=self.dtype)

        def run(k, _):
            s0, s1, c0, c1, buckets = self.chunks[k]
            out[c0:c1] = self._chunk_values(buckets, values, rank, c1 - c0)

        parallel_ranges(len(self.chunks), run, self.workers, bounds=[(k, k + 1) for k in range(len(self.chunks))])
        return out

    def _chunk_values(self, buckets, values, rank, ncols):
        out = np.empty(ncols, dtype=self.dtype)
        zero = _zero_of(self.dtype)
        for b in buckets:
            w = b.rows.shape[1]
            if w == 1:
                rows, lower, gap = b.rows, b.lower, b.gap
            else:
                perm = np.argsort(rank[b.rows], axis=1)
                rows = np.take_along_axis(b.rows, perm, axis=1)
                lower = np.take_along_axis(b.lower, perm, axis=1)
                gap = np.take_along_axis(b.gap, perm, axis=1)
            if self.scan == "tree":
                before = tree_scan(gap, axis=1, exclusive=True)
            else:
                before = np.zeros_like(gap)
                if is_exact(self.dtype):
                    before[:, 0] = zero
                np.cumsum(gap[:, :-1], axis=1, out=before[:, 1:])
            rem_state = np.maximum(b.rem[:, None] - before, zero)
            p = lower + np.minimum(gap, rem_state)
            v = values[rows]
            acc = v[:, 0] * p[:, 0]
            for j in range(1, w):
                acc = acc + v[:, j] * p[:, j]
            out[b.cols] = acc
        return out

    def _coerce(self, values):
        values = np.asarray(values)
        if values.shape != (self.imdp.num_states,):
            raise ValueError(f"value vector has shape {values.shape}, expected ({self.imdp.num_states},)")
        if values.dtype != self.dtype:
            values = as_field_array(values, self.dtype)
        return values

    def step(self, values, satisfaction_mode=Pessimistic, strategy_mode=Maximize, forced_columns=None):
        """One robust Bellman backup ``opt_a E_adversary[V]`` for every state.

        Returns ``(backup, columns)``: the optimal value per state and the
        column achieving it (lowest column index on ties). With
        ``forced_columns`` (one column per state) the action is fixed instead
        of optimized.
        """
        colval = self.column_values(values, satisfaction_mode)
        imdp = self.imdp
        if forced_columns is not None:
            forced_columns = np.asarray(forced_columns, dtype=np.int64)
            return colval[forced_columns], forced_columns
        starts = imdp.stateptr[:-1]
        if StrategyMode(strategy_mode) is Maximize:
            best = np.maximum.reduceat(colval, starts)
        else:
            best = np.minimum.reduceat(colval, starts)
        hit = np.asarray(colval == best[imdp.column_state], dtype=bool)
        idx = np.where(hit, np.arange(imdp.num_cols), imdp.num_cols)
        cols = np.minimum.reduceat(idx, starts)
        return best, cols


def bellman_step(
    imdp,
    values,
    satisfaction_mode=Pessimistic,
    strategy_mode=Maximize,
    frozen=(),
    workers=1,
):
    """One robust value-iteration step.

    States in ``frozen`` keep their value and record no action (``None``);
    every other state takes the optimal action value, with ties going to the
    lowest column. Returns ``(next_values, action_labels)``.
    """
    kernel = BellmanKernel(imdp, workers)
    values = kernel._coerce(values)
    best, cols = kernel.step(values, satisfaction_mode, strategy_mode)
    frozen = np.asarray(sorted(set(int(s) for s in frozen)), dtype=np.int64)
    best = best.copy()
    best[frozen] = values[frozen]
    actions = [imdp.actions[c] for c in cols]
    for s in frozen:
        actions[s] = None
    return best, actions
