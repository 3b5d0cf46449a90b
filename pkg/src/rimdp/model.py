"""Interval MDP data model with sparse CSC interval transition matrices.

Columns of the transition matrices are source-action pairs, rows are
destination states. State ``s`` owns columns ``stateptr[s]:stateptr[s+1]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import NamedTuple, Optional, Sequence

import numpy as np

from . import errors
from .numeric import FEASIBILITY_TOL, as_field_array, field_dtype, infer_dtype, is_exact


@dataclass(frozen=True, eq=False)
class CSCMatrix:
    """Minimal compressed sparse column matrix (0-based, sorted rows).

    Unlike ``scipy.sparse`` it also carries exact rationals (``object``
    dtype), which is why the model does not store scipy matrices directly.
    """

    colptr: np.ndarray
    rowval: np.ndarray
    nzval: np.ndarray
    shape: tuple

    @classmethod
    def from_dense(cls, dense, dtype=None):
        dense = np.asarray(dense, dtype=object if dtype is not None and is_exact(dtype) else None)
        if dense.ndim == 1:
            dense = dense.reshape(-1, 1)
        if dense.ndim != 2:
            raise errors.ShapeMismatch(f"expected a matrix, got {dense.ndim} dimensions")
        dtype = field_dtype(dtype) if dtype is not None else infer_dtype(dense)
        values = as_field_array(dense, dtype)
        cols, rows = np.nonzero(values.T)
        colptr = np.zeros(dense.shape[1] + 1, dtype=np.int64)
        np.cumsum(np.bincount(cols, minlength=dense.shape[1]), out=colptr[1:])
        return cls(colptr, rows.astype(np.int64), values[rows, cols], tuple(dense.shape))

    @classmethod
    def from_sparse(cls, mat, dtype=None):
        """From any scipy.sparse matrix or array."""
        m = mat.tocsc(copy=True)
        m.sum_duplicates()
        m.eliminate_zeros()
        m.sort_indices()
        dtype = field_dtype(dtype) if dtype is not None else np.dtype(np.float64)
        return cls(
            m.indptr.astype(np.int64),
            m.indices.astype(np.int64),
            as_field_array(m.data, dtype),
            tuple(m.shape),
        )

    @classmethod
    def from_any(cls, mat, dtype=None):
        if hasattr(mat, "tocsc"):
            return cls.from_sparse(mat, dtype)
        if isinstance(mat, CSCMatrix):
            return mat if dtype is None else mat.astype(dtype)
        return cls.from_dense(mat, dtype)

    @property
    def nnz(self):
        return len(self.rowval)

    @property
    def dtype(self):
        return self.nzval.dtype

    @cached_property
    def colidx(self):
        """Column index of every stored entry."""
        return np.repeat(np.arange(self.shape[1], dtype=np.int64), np.diff(self.colptr))

    def astype(self, dtype):
        dtype = field_dtype(dtype)
        if dtype == self.dtype:
            return self
        return CSCMatrix(self.colptr, self.rowval, as_field_array(self.nzval, dtype), self.shape)

    def todense(self):
        out = np.zeros(self.shape, dtype=self.dtype)
        if is_exact(self.dtype):
            out[...] = Fraction(0)
        out[self.rowval, self.colidx] = self.nzval
        return out

    def to_scipy(self):
        import scipy.sparse as sp

        return sp.csc_matrix((self.nzval.astype(np.float64), self.rowval, self.colptr), shape=self.shape)

    def column(self, j):
        a, b = self.colptr[j], self.colptr[j + 1]
        return self.rowval[a:b], self.nzval[a:b]

    def column_slice(self, start, stop):
        a, b = self.colptr[start], self.colptr[stop]
        return CSCMatrix(
            self.colptr[start : stop + 1] - a,
            self.rowval[a:b],
            self.nzval[a:b],
            (self.shape[0], stop - start),
        )

    def column_sums(self):
        if is_exact(self.dtype):
            sums = np.empty(self.shape[1], dtype=object)
            for j in range(self.shape[1]):
                sums[j] = sum(self.nzval[self.colptr[j] : self.colptr[j + 1]], Fraction(0))
            return sums
        return np.bincount(self.colidx, weights=self.nzval, minlength=self.shape[1])

    def __eq__(self, other):
        if not isinstance(other, CSCMatrix):
            return NotImplemented
        return (
            self.shape == other.shape
            and self.dtype == other.dtype
            and np.array_equal(self.colptr, other.colptr)
            and np.array_equal(self.rowval, other.rowval)
            and np.array_equal(self.nzval, other.nzval)
        )

    __hash__ = None


def hstack(mats: Sequence[CSCMatrix]) -> CSCMatrix:
    nrows = mats[0].shape[0]
    offsets = np.cumsum([0] + [m.nnz for m in mats])
    colptr = [np.zeros(1, dtype=np.int64)]
    for m, off in zip(mats, offsets[:-1]):
        colptr.append(m.colptr[1:] + off)
    return CSCMatrix(
        np.concatenate(colptr),
        np.concatenate([m.rowval for m in mats]),
        np.concatenate([m.nzval for m in mats]),
        (nrows, sum(m.shape[1] for m in mats)),
    )


class Violation(NamedTuple):
    """One entry of a validation report."""

    kind: str
    message: str
    state: Optional[int] = None
    column: Optional[int] = None
    row: Optional[int] = None


_ERROR_CLASSES = {
    "ShapeMismatch": errors.ShapeMismatch,
    "EntryOutOfRange": errors.EntryOutOfRange,
    "BoundOrderViolation": errors.BoundOrderViolation,
    "DestinationCountMismatch": errors.DestinationCountMismatch,
    "DuplicateActionLabel": errors.DuplicateActionLabel,
    "EmptyActionSet": errors.EmptyActionSet,
    "StructureError": errors.StructureError,
}


def raise_for(violations):
    """Raise the exception matching the first violation, if any."""
    if not violations:
        return
    v = violations[0]
    if v.kind == "InfeasibleColumn":
        raise errors.InfeasibleColumn(v.column, v.message)
    raise _ERROR_CLASSES[v.kind](v.message)


@dataclass(frozen=True, eq=False)
class IntervalProbabilities:
    """Paired lower/upper bounds on transition probabilities.

    An entry stored only in ``upper`` means the interval ``[0, upper]``; an
    entry in neither means ``[0, 0]``.
    """

    lower: CSCMatrix
    upper: CSCMatrix

    @property
    def num_dest(self):
        return self.upper.shape[0]

    @property
    def num_cols(self):
        return self.upper.shape[1]

    @property
    def shape(self):
        return self.upper.shape

    @property
    def dtype(self):
        return self.upper.dtype

    @cached_property
    def lower_aligned(self):
        """Lower bounds laid out on the sparsity pattern of ``upper``.

        Lower entries outside the upper pattern are dropped here and
        reported by :func:`check_interval_probabilities`.
        """
        nrows = self.num_dest
        ukey = self.upper.colidx * nrows + self.upper.rowval
        lkey = self.lower.colidx * nrows + self.lower.rowval
        out = np.zeros(len(ukey), dtype=self.dtype)
        if is_exact(self.dtype):
            out[:] = Fraction(0)
        pos = np.searchsorted(ukey, lkey)
        pos_c = np.minimum(pos, max(len(ukey) - 1, 0))
        hit = (pos < len(ukey)) & (ukey[pos_c] == lkey) if len(ukey) else np.zeros(len(lkey), bool)
        out[pos[hit]] = self.lower.nzval[hit]
        return out

    @cached_property
    def gap_aligned(self):
        return self.upper.nzval - self.lower_aligned

    def column(self, j):
        """``(rows, lower, upper)`` over the support of column ``j``."""
        a, b = self.upper.colptr[j], self.upper.colptr[j + 1]
        return self.upper.rowval[a:b], self.lower_aligned[a:b], self.upper.nzval[a:b]

    def column_slice(self, start, stop):
        return IntervalProbabilities(
            self.lower.column_slice(start, stop), self.upper.column_slice(start, stop)
        )

    def astype(self, dtype):
        return IntervalProbabilities(self.lower.astype(dtype), self.upper.astype(dtype))

    def __eq__(self, other):
        if not isinstance(other, IntervalProbabilities):
            return NotImplemented
        return self.lower == other.lower and self.upper == other.upper

    __hash__ = None


def check_interval_probabilities(prob: IntervalProbabilities, col_offset=0, column_state=None):
    """All invariant violations of ``prob`` as :class:`Violation` entries."""
    out = []
    lo, up = prob.lower, prob.upper
    if lo.shape != up.shape:
        return [Violation("ShapeMismatch", f"lower shape {lo.shape} != upper shape {up.shape}")]

    def where(j):
        j = int(j)
        s = None if column_state is None else int(column_state[j])
        return dict(column=j + col_offset, state=s)

    for name, m in (("lower", lo), ("upper", up)):
        vals = m.nzval
        bad = np.nonzero(~np.asarray((vals >= 0) & (vals <= 1), dtype=bool))[0]
        for k in bad:
            out.append(
                Violation(
                    "EntryOutOfRange",
                    f"{name}[{m.rowval[k]}, {m.colidx[k] + col_offset}] = {vals[k]} not in [0, 1]",
                    row=int(m.rowval[k]),
                    **where(m.colidx[k]),
                )
            )

    nrows = prob.num_dest
    ukey = up.colidx * nrows + up.rowval
    lkey = lo.colidx * nrows + lo.rowval
    outside = ~np.isin(lkey, ukey)
    for k in np.nonzero(outside)[0]:
        out.append(
            Violation(
                "BoundOrderViolation",
                f"lower[{lo.rowval[k]}, {lo.colidx[k] + col_offset}] = {lo.nzval[k]} "
                "where upper is structurally zero",
                row=int(lo.rowval[k]),
                **where(lo.colidx[k]),
            )
        )
    gap = prob.gap_aligned
    for k in np.nonzero(np.asarray(gap < 0, dtype=bool))[0]:
        out.append(
            Violation(
                "BoundOrderViolation",
                f"lower > upper at [{up.rowval[k]}, {up.colidx[k] + col_offset}]",
                row=int(up.rowval[k]),
                **where(up.colidx[k]),
            )
        )

    tol = 0 if is_exact(prob.dtype) else FEASIBILITY_TOL
    lsum, usum = lo.column_sums(), up.column_sums()
    infeasible = np.asarray((lsum > 1 + tol) | (usum < 1 - tol), dtype=bool)
    for j in np.nonzero(infeasible)[0]:
        out.append(
                Violation(
                    "InfeasibleColumn",
                    f"column {j + col_offset}: sum(lower) = {lsum[j]}, sum(upper) = {usum[j]}",
                    **where(j),
                )
            )
    return out


def build_interval_probabilities(lower, upper, dtype=None) -> IntervalProbabilities:
    """Validated interval probabilities from dense or sparse bounds.

    Dense inputs (nested lists or arrays) are converted to CSC; a 1-d input
    is a single column. ``dtype`` selects the numeric field (``"f64"``,
    ``"f32"`` or ``"rational"``); by default it is inferred.
    """
    if dtype is None:
        dtype = infer_dtype(lower, upper)
    lo = CSCMatrix.from_any(lower, dtype)
    up = CSCMatrix.from_any(upper, dtype)
    if lo.shape != up.shape:
        raise errors.ShapeMismatch(f"lower shape {lo.shape} != upper shape {up.shape}")
    prob = IntervalProbabilities(lo, up)
    raise_for(check_interval_probabilities(prob))
    return prob


@dataclass(frozen=True, eq=False)
class IntervalMDP:
    """An interval MDP: interval transitions plus the state/action layout.

    Constructing one directly performs no checks; use :func:`build_imdp` or
    :func:`validate`.
    """

    transition: IntervalProbabilities
    stateptr: np.ndarray
    actions: tuple = field()

    @property
    def num_states(self):
        return len(self.stateptr) - 1

    @property
    def num_cols(self):
        return self.transition.num_cols

    @property
    def dtype(self):
        return self.transition.dtype

    @cached_property
    def column_state(self):
        """Owning state of every column."""
        return np.repeat(np.arange(self.num_states, dtype=np.int64), np.diff(self.stateptr))

    def columns(self, s):
        return range(int(self.stateptr[s]), int(self.stateptr[s + 1]))

    def actions_of(self, s):
        return self.actions[self.stateptr[s] : self.stateptr[s + 1]]

    def column_of(self, s, action):
        """Column index of ``action`` at state ``s``."""
        labels = self.actions_of(s)
        try:
            return int(self.stateptr[s]) + labels.index(str(action))
        except ValueError:
            raise errors.InvalidPolicyAction(
                f"action {action!r} is not available in state {s} (has {list(labels)})"
            ) from None

    def block(self, s):
        """``(labels, IntervalProbabilities)`` for state ``s``."""
        a, b = int(self.stateptr[s]), int(self.stateptr[s + 1])
        return list(self.actions[a:b]), self.transition.column_slice(a, b)

    def blocks(self):
        return [self.block(s) for s in range(self.num_states)]

    @property
    def num_transitions(self):
        return self.transition.upper.nnz

    def astype(self, dtype):
        return IntervalMDP(self.transition.astype(dtype), self.stateptr, self.actions)

    def __eq__(self, other):
        if not isinstance(other, IntervalMDP):
            return NotImplemented
        return (
            self.transition == other.transition
            and np.array_equal(self.stateptr, other.stateptr)
            and tuple(self.actions) == tuple(other.actions)
        )

    __hash__ = None


def build_imdp(transition_blocks, dtype=None) -> IntervalMDP:
    """Assemble an IMDP from one ``(action_labels, probabilities)`` block per state.

    Each block's probabilities have one column per label and one row per
    state of the whole model. Blocks may be :class:`IntervalProbabilities`
    or ``(lower, upper)`` pairs of dense/sparse matrices.
    """
    labels_all, probs = [], []
    n = len(transition_blocks)
    for s, (labels, prob) in enumerate(transition_blocks):
        if not isinstance(prob, IntervalProbabilities):
            prob = build_interval_probabilities(*prob, dtype=dtype)
        elif dtype is not None:
            prob = prob.astype(dtype)
        labels = [str(a) for a in labels]
        if prob.num_cols == 0 or not labels:
            raise errors.EmptyActionSet(f"state {s} has no actions")
        if prob.num_dest != n:
            raise errors.DestinationCountMismatch(
                f"state {s}: block has {prob.num_dest} destinations, model has {n} states"
            )
        if len(labels) != prob.num_cols:
            raise errors.ShapeMismatch(
                f"state {s}: {len(labels)} labels for {prob.num_cols} columns"
            )
        labels_all.extend(labels)
        probs.append(prob)
    if not probs:
        raise errors.EmptyActionSet("model has no states")
    dtypes = {p.dtype for p in probs}
    if len(dtypes) > 1:
        target = np.dtype(object) if np.dtype(object) in dtypes else np.dtype(np.float64)
        probs = [p.astype(target) for p in probs]
    stateptr = np.concatenate([[0], np.cumsum([p.num_cols for p in probs])]).astype(np.int64)
    transition = IntervalProbabilities(
        hstack([p.lower for p in probs]), hstack([p.upper for p in probs])
    )
    imdp = IntervalMDP(transition, stateptr, tuple(labels_all))
    raise_for(validate(imdp))
    return imdp


def imdp_from_csc(lower: CSCMatrix, upper: CSCMatrix, stateptr, actions, check=True) -> IntervalMDP:
    """IMDP straight from global CSC matrices (used by readers)."""
    imdp = IntervalMDP(
        IntervalProbabilities(lower, upper),
        np.asarray(stateptr, dtype=np.int64),
        tuple(str(a) for a in actions),
    )
    if check:
        raise_for(validate(imdp))
    return imdp


def validate(imdp: IntervalMDP) -> list:
    """Re-check every model invariant; returns a list of :class:`Violation`.

    An empty list means the model is valid.
    """
    out = []
    sp = np.asarray(imdp.stateptr)
    ncols = imdp.transition.num_cols
    n = len(sp) - 1
    if len(sp) == 0 or n < 1:
        return [Violation("StructureError", "stateptr must have at least two entries")]
    if sp[0] != 0:
        out.append(Violation("StructureError", f"stateptr[0] = {sp[0]}, expected 0"))
    if sp[-1] != ncols:
        out.append(
            Violation("StructureError", f"stateptr[{n}] = {sp[-1]}, expected num_cols = {ncols}")
        )
    for s in np.nonzero(np.diff(sp) <= 0)[0]:
        out.append(Violation("EmptyActionSet", f"state {s} has no actions", state=int(s)))
    if len(imdp.actions) != ncols:
        out.append(
            Violation("StructureError", f"{len(imdp.actions)} action labels for {ncols} columns")
        )
    if imdp.transition.num_dest != n:
        out.append(
            Violation(
                "DestinationCountMismatch",
                f"{imdp.transition.num_dest} destination rows for {n} states",
            )
        )
    if out:
        return out
    for s in range(n):
        labels = imdp.actions_of(s)
        if len(set(labels)) != len(labels):
            dup = sorted({a for a in labels if labels.count(a) > 1})
            out.append(
                Violation("DuplicateActionLabel", f"state {s}: duplicate actions {dup}", state=s)
            )
    out.extend(check_interval_probabilities(imdp.transition, column_state=imdp.column_state))
    return out
