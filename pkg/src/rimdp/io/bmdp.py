"""bmdp-tool ASCII format.

Layout (whitespace separated, states and actions 0-based)::

    <number of states>
    <number of actions>
    <number of terminal states>
    <terminal state>          one line per terminal state
    ...
    <src> <action> <dst> <lower> <upper>
    ...

Action labels are not stored: an action is its index in the model-wide
action alphabet. Labels that are all non-negative integers are used as the
indices directly; otherwise indices follow first appearance.
"""

from __future__ import annotations

from ..errors import DanglingStateIndex, DuplicateTransition, ParseError
from ..model import IntervalMDP
from ..numeric import field_dtype, format_scalar, one
from ..solver import REACH_AVOID, REWARD
from .common import assemble, check_bounds, column_entries, parse_bound, require


def action_alphabet(imdp):
    """Map each distinct action label to its bmdp-tool action index."""
    labels = list(dict.fromkeys(imdp.actions))
    if all(a.isdigit() and a == str(int(a)) for a in labels):
        return {a: int(a) for a in labels}
    return {a: i for i, a in enumerate(labels)}


def write_bmdp_tool(path, problem, terminal_states=None):
    """Write the model; terminal states default to the problem's reach set."""
    if isinstance(problem, IntervalMDP):
        imdp, spec = problem, None
    else:
        imdp, spec = problem.imdp, problem.spec
        if terminal_states is None:
            terminal_states = getattr(problem, "terminal_states", None)
    if terminal_states is None:
        if spec is None:
            raise ValueError("terminal states are required when the problem has no specification")
        if isinstance(spec.prop, REWARD + REACH_AVOID):
            raise ValueError(f"bmdp-tool stores only reachability, not {type(spec.prop).__name__}")
        terminal_states = spec.prop.reach
    terminal = sorted({int(s) for s in terminal_states})
    alphabet = action_alphabet(imdp)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{imdp.num_states}\n{max(alphabet.values()) + 1}\n{len(terminal)}\n")
        fh.writelines(f"{s}\n" for s in terminal)
        for s in range(imdp.num_states):
            for j in imdp.columns(s):
                a = alphabet[imdp.actions[j]]
                for dst, lo, hi in column_entries(imdp, j):
                    fh.write(f"{s} {a} {dst} {format_scalar(lo)} {format_scalar(hi)}\n")
    return path


def read_bmdp_tool(path, dtype="f64", check=True):
    """Returns ``(imdp, terminal_states)``.

    Terminal states without outgoing transitions get an absorbing self-loop
    (action 0); any other state without transitions is an error.
    """
    dtype = field_dtype(dtype)
    require(path)
    with open(path, encoding="utf-8") as fh:
        lines = [(i, line.split()) for i, line in enumerate(fh, start=1) if line.strip()]

    def header_int(k, what):
        if k >= len(lines) or len(lines[k][1]) != 1:
            raise ParseError(path, lines[k][0] if k < len(lines) else None, f"expected {what}")
        try:
            v = int(lines[k][1][0])
        except ValueError:
            raise ParseError(path, lines[k][0], f"expected {what}, got {lines[k][1][0]!r}") from None
        if v < 0:
            raise ParseError(path, lines[k][0], f"{what} must be non-negative")
        return v

    n = header_int(0, "number of states")
    num_actions = header_int(1, "number of actions")
    num_terminal = header_int(2, "number of terminal states")
    if n == 0:
        raise ParseError(path, lines[0][0], "model has no states")
    terminal = []
    for k in range(3, 3 + num_terminal):
        s = header_int(k, "terminal state")
        if s >= n:
            raise DanglingStateIndex(path, lines[k][0], f"terminal state {s} out of range (0..{n - 1})")
        terminal.append(s)

    columns = {}
    for lineno, tok in lines[3 + num_terminal :]:
        if len(tok) != 5:
            raise ParseError(path, lineno, f"expected 'src action dst lower upper', got {' '.join(tok)!r}")
        try:
            src, act, dst = int(tok[0]), int(tok[1]), int(tok[2])
        except ValueError:
            raise ParseError(path, lineno, "state and action indices must be integers") from None
        for s in (src, dst):
            if not 0 <= s < n:
                raise DanglingStateIndex(path, lineno, f"state {s} out of range (0..{n - 1})")
        if not 0 <= act < num_actions:
            raise ParseError(path, lineno, f"action {act} out of range (0..{num_actions - 1})")
        lo = parse_bound(tok[3], dtype, path, lineno)
        hi = parse_bound(tok[4], dtype, path, lineno)
        check_bounds(lo, hi, path, lineno)
        entries = columns.setdefault((src, act), {})
        if dst in entries:
            raise DuplicateTransition(path, lineno, f"duplicate transition {src} {act} {dst}")
        entries[dst] = (dst, lo, hi)

    has_out = {src for src, _ in columns}
    terminal_set = set(terminal)
    for s in range(n):
        if s not in has_out:
            if s not in terminal_set:
                raise ParseError(path, None, f"state {s} has no transitions and is not terminal")
            columns[(s, 0)] = {s: (s, one(dtype), one(dtype))}
    ordered = [(src, str(act), list(e.values())) for (src, act), e in sorted(columns.items())]
    return assemble(n, ordered, dtype, check), tuple(sorted(terminal_set))
