"""PRISM explicit format for interval MDPs.

A model is four files sharing a stem: ``.sta`` (states), ``.lab`` (labels),
``.tra`` (interval transitions, one ``src choice dst [lo,hi] action`` line
each) and ``.pctl`` (a single ``P{min|max}{min|max}=? [ F<=K "label" ]``
query; the first min/max is the strategy, the second the adversary).
Infinite-horizon queries carry their tolerance as a ``// eps=...`` comment.
"""

from __future__ import annotations

import re
from pathlib import Path

from ..errors import (
    DanglingStateIndex,
    DuplicateTransition,
    InconsistentStateCount,
    ParseError,
    UnsupportedQuery,
)
from ..numeric import field_dtype, format_scalar
from ..solver import (
    FiniteTimeReachability,
    InfiniteTimeReachability,
    Specification,
)
from .common import FormatProblem, assemble, check_bounds, column_entries, parse_bound, require, unpack

GOAL_LABEL = "goal"
DEFAULT_EPS = 1e-6

_QUERY = re.compile(
    r'^P(?P<opta>min|max)(?P<opte>min|max)\s*=\s*\?\s*\[\s*F\s*(?:<=\s*(?P<k>\d+)\s*)?"(?P<label>[^"]+)"\s*\]$'
)
_EPS = re.compile(r"^//\s*eps\s*=\s*(\S+)\s*$")
_LABEL_DEF = re.compile(r'(\d+)="([^"]*)"')
_TRA = re.compile(r"^(\d+)\s+(\d+)\s+(\d+)\s+\[\s*([^,\]]+?)\s*,\s*([^\]]+?)\s*\](?:\s+(\S+))?$")


def _paths(stem):
    stem = str(stem)
    return {ext: Path(stem + "." + ext) for ext in ("sta", "lab", "tra", "pctl")}


def read_prism(stem, dtype="f64", check=True) -> FormatProblem:
    """Read ``stem.sta``, ``stem.lab``, ``stem.tra`` and ``stem.pctl``.

    With ``check=False`` model invariants are not enforced (see
    :func:`rimdp.model.validate`).
    """
    dtype = field_dtype(dtype)
    paths = _paths(stem)
    for p in paths.values():
        require(p)
    n = _read_sta(paths["sta"])
    labels = _read_lab(paths["lab"], n)
    imdp = _read_tra(paths["tra"], n, dtype, check)
    spec = _read_pctl(paths["pctl"], labels)
    return FormatProblem(imdp, spec)


def _lines(path):
    with open(path, encoding="utf-8") as fh:
        for i, line in enumerate(fh, start=1):
            line = line.strip()
            if line:
                yield i, line


def _read_sta(path):
    lines = list(_lines(path))
    if not lines:
        raise ParseError(path, None, "empty state file")
    n = 0
    for lineno, line in lines[1:]:
        idx, sep, _ = line.partition(":")
        if not sep or not idx.strip().isdigit():
            raise ParseError(path, lineno, f"expected 'index:(values)', got {line!r}")
        if int(idx) != n:
            raise ParseError(path, lineno, f"state {idx} out of order, expected {n}")
        n += 1
    if n == 0:
        raise ParseError(path, None, "no states")
    return n


def _read_lab(path, n):
    lines = list(_lines(path))
    if not lines:
        raise ParseError(path, None, "empty label file")
    header_line, header = lines[0]
    names = {int(i): name for i, name in _LABEL_DEF.findall(header)}
    if not names:
        raise ParseError(path, header_line, "no label declarations in header")
    states = {name: set() for name in names.values()}
    for lineno, line in lines[1:]:
        idx, sep, rest = line.partition(":")
        try:
            s = int(idx)
            ids = [int(t) for t in rest.split()]
        except ValueError:
            raise ParseError(path, lineno, f"expected 'state: label ids', got {line!r}") from None
        if not sep:
            raise ParseError(path, lineno, f"expected 'state: label ids', got {line!r}")
        if not 0 <= s < n:
            raise DanglingStateIndex(path, lineno, f"state {s} out of range (0..{n - 1})")
        for i in ids:
            if i not in names:
                raise ParseError(path, lineno, f"undeclared label id {i}")
            states[names[i]].add(s)
    return states


def _read_tra(path, n, dtype, check):
    lines = list(_lines(path))
    if not lines:
        raise ParseError(path, None, "empty transition file")
    lineno, header = lines[0]
    try:
        n_hdr, n_choices, n_trans = (int(t) for t in header.split())
    except ValueError:
        raise ParseError(path, lineno, f"expected 'states choices transitions', got {header!r}") from None
    if n_hdr != n:
        raise InconsistentStateCount(path, lineno, f"header declares {n_hdr} states, .sta lists {n}")
    if len(lines) == 1:
        raise ParseError(path, None, "no transitions")

    columns = {}
    seen = set()
    for lineno, line in lines[1:]:
        m = _TRA.match(line)
        if not m:
            raise ParseError(path, lineno, f"expected 'src choice dst [lo,hi] action', got {line!r}")
        src, choice, dst = int(m[1]), int(m[2]), int(m[3])
        for s in (src, dst):
            if s >= n:
                raise DanglingStateIndex(path, lineno, f"state {s} out of range (0..{n - 1})")
        lo = parse_bound(m[4], dtype, path, lineno)
        hi = parse_bound(m[5], dtype, path, lineno)
        check_bounds(lo, hi, path, lineno)
        key = (src, choice, dst)
        if key in seen:
            raise DuplicateTransition(path, lineno, f"duplicate transition {src} {choice} {dst}")
        seen.add(key)
        label = m[6] if m[6] is not None else str(choice)
        col = columns.setdefault((src, choice), [label, []])
        if col[0] != label:
            raise ParseError(path, lineno, f"choice {choice} of state {src} has labels {col[0]!r} and {label!r}")
        col[1].append((dst, lo, hi))

    if len(columns) != n_choices or len(seen) != n_trans:
        raise ParseError(
            path, lines[0][0],
            f"header declares {n_choices} choices / {n_trans} transitions, "
            f"file has {len(columns)} / {len(seen)}",
        )
    ordered = [(src, label, entries) for (src, _), (label, entries) in sorted(columns.items())]
    return assemble(n, ordered, dtype, check)


def _read_pctl(path, labels):
    eps = DEFAULT_EPS
    query = None
    for lineno, line in _lines(path):
        m = _EPS.match(line)
        if m:
            try:
                eps = float(m[1])
            except ValueError:
                raise ParseError(path, lineno, f"bad eps value {m[1]!r}") from None
            continue
        if line.startswith("//"):
            continue
        if query is not None:
            raise UnsupportedQuery(path, lineno, "only a single query is supported")
        query = (lineno, line)
    if query is None:
        raise ParseError(path, None, "no query")
    lineno, text = query
    m = _QUERY.match(text)
    if not m:
        raise UnsupportedQuery(path, lineno, f"unsupported query {text!r}")
    if m["label"] not in labels:
        raise ParseError(path, lineno, f"unknown label {m['label']!r}")
    reach = sorted(labels[m["label"]])
    if m["k"] is not None:
        prop = FiniteTimeReachability(reach, int(m["k"]))
    else:
        prop = InfiniteTimeReachability(reach, eps)
    return Specification(
        prop,
        "pessimistic" if m["opte"] == "min" else "optimistic",
        "maximize" if m["opta"] == "max" else "minimize",
    )


def write_prism(stem, problem):
    """Write ``problem`` (a Problem or FormatProblem with a spec) as four PRISM files."""
    imdp, spec = unpack(problem)
    if spec is None:
        raise ValueError("PRISM output needs a specification")
    prop = spec.prop
    if not isinstance(prop, (FiniteTimeReachability, InfiniteTimeReachability)):
        raise UnsupportedQuery(str(stem) + ".pctl", None, f"{type(prop).__name__} has no PRISM query form")
    bad = [a for a in imdp.actions if not a or any(c.isspace() for c in a)]
    if bad:
        raise ValueError(f"action labels must be non-empty and free of whitespace: {bad[0]!r}")
    paths = _paths(stem)
    n = imdp.num_states

    with open(paths["sta"], "w", encoding="utf-8") as fh:
        fh.write("(s)\n")
        fh.writelines(f"{s}:({s})\n" for s in range(n))

    goal = set(prop.reach)
    with open(paths["lab"], "w", encoding="utf-8") as fh:
        fh.write(f'0="init" 1="{GOAL_LABEL}"\n')
        for s in range(n):
            ids = ([0] if s == 0 else []) + ([1] if s in goal else [])
            if ids:
                fh.write(f"{s}: {' '.join(map(str, ids))}\n")

    with open(paths["tra"], "w", encoding="utf-8") as fh:
        fh.write(f"{n} {imdp.num_cols} {imdp.num_transitions}\n")
        for s in range(n):
            for choice, j in enumerate(imdp.columns(s)):
                label = imdp.actions[j]
                for dst, lo, hi in column_entries(imdp, j):
                    fh.write(f"{s} {choice} {dst} [{format_scalar(lo)},{format_scalar(hi)}] {label}\n")

    opta = "max" if spec.strategy_mode.value == "maximize" else "min"
    opte = "min" if spec.satisfaction_mode.value == "pessimistic" else "max"
    with open(paths["pctl"], "w", encoding="utf-8") as fh:
        if isinstance(prop, FiniteTimeReachability):
            fh.write(f'P{opta}{opte}=? [ F<={prop.time_horizon} "{GOAL_LABEL}" ]\n')
        else:
            fh.write(f"// eps={prop.eps!r}\n")
            fh.write(f'P{opta}{opte}=? [ F "{GOAL_LABEL}" ]\n')
    return list(paths.values())
