"""Native format: a binary CSC model container plus a JSON specification.

The model container stores the global attributes ``num_states``, ``model``
(``imc`` or ``imdp``), ``format`` (``sparse_csc``), ``rows`` (``to``) and
``cols`` (``from`` or ``from/action``) and the variables ``lower_colptr``,
``lower_rowval``, ``lower_nzval``, ``upper_colptr``, ``upper_rowval``,
``upper_nzval``, ``stateptr`` and ``action_vals`` (the last two only for
``imdp``). Index variables are 1-based.

Binary layout, all integers little-endian::

    b"IMDPCSC1"
    u32 attribute count
        u16 name length, name (utf-8), u8 type (b"i": i64 | b"s": u32 length + utf-8)
    u32 variable count
        u16 name length, name, u8 tag length, tag ("<i4", "<i8", "<f4", "<f8" or "str"),
        u64 element count, payload (raw array, or u32 length + utf-8 per string)

A model path ending in ``.json`` selects a human-readable JSON variant with
the same attributes and variables.

The specification JSON holds ``property`` and ``satisfaction_mode`` /
``strategy_mode``. State indices in ``reach`` and ``avoid`` are 1-based.
"""

from __future__ import annotations

import json
import struct
from fractions import Fraction
from pathlib import Path

import numpy as np

from ..errors import IndexOutOfBounds, SchemaViolation, SpecSchemaError
from ..model import CSCMatrix, imdp_from_csc
from ..numeric import as_field_array, field_dtype, is_exact
from ..solver import (
    FiniteTimeReachability,
    FiniteTimeReachAvoid,
    FiniteTimeReward,
    InfiniteTimeReachability,
    InfiniteTimeReachAvoid,
    InfiniteTimeReward,
    Specification,
)
from .common import FormatProblem, require, unpack

MAGIC = b"IMDPCSC1"
JSON_MAGIC = "IMDPCSC1-json"
_NUMERIC_TAGS = {"<i4", "<i8", "<f4", "<f8"}


# --- container encoding ------------------------------------------------------


def _pack_str(s):
    b = s.encode("utf-8")
    return struct.pack("<I", len(b)) + b


def _encode(attributes, variables):
    out = [MAGIC, struct.pack("<I", len(attributes))]
    for name, value in attributes.items():
        nb = name.encode("utf-8")
        out.append(struct.pack("<H", len(nb)) + nb)
        if isinstance(value, int):
            out.append(b"i" + struct.pack("<q", value))
        else:
            out.append(b"s" + _pack_str(value))
    out.append(struct.pack("<I", len(variables)))
    for name, (tag, data) in variables.items():
        nb = name.encode("utf-8")
        tb = tag.encode("ascii")
        out.append(struct.pack("<H", len(nb)) + nb + struct.pack("<B", len(tb)) + tb)
        out.append(struct.pack("<Q", len(data)))
        if tag == "str":
            out.extend(_pack_str(s) for s in data)
        else:
            out.append(np.ascontiguousarray(data, dtype=np.dtype(tag)).tobytes())
    return b"".join(out)


class _Reader:
    def __init__(self, buf, path):
        self.buf, self.pos, self.path = buf, 0, path

    def take(self, n, what):
        if self.pos + n > len(self.buf):
            raise SchemaViolation(self.path, what, "truncated container")
        b = self.buf[self.pos : self.pos + n]
        self.pos += n
        return b

    def unpack(self, fmt, what):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt), what))[0]

    def string(self, what, fmt="<I"):
        return self.take(self.unpack(fmt, what), what).decode("utf-8")


def _decode(buf, path):
    r = _Reader(buf, path)
    if r.take(len(MAGIC), "magic") != MAGIC:
        raise SchemaViolation(path, "magic", f"not an {MAGIC.decode()} container")
    attributes = {}
    for _ in range(r.unpack("<I", "attribute count")):
        name = r.string("attribute name", "<H")
        kind = r.take(1, name)
        if kind == b"i":
            attributes[name] = r.unpack("<q", name)
        elif kind == b"s":
            attributes[name] = r.string(name)
        else:
            raise SchemaViolation(path, name, f"unknown attribute type {kind!r}")
    variables = {}
    for _ in range(r.unpack("<I", "variable count")):
        name = r.string("variable name", "<H")
        tag = r.take(r.unpack("<B", name), name).decode("ascii")
        count = r.unpack("<Q", name)
        if tag == "str":
            variables[name] = (tag, [r.string(name) for _ in range(count)])
        elif tag in _NUMERIC_TAGS:
            dt = np.dtype(tag)
            variables[name] = (tag, np.frombuffer(r.take(count * dt.itemsize, name), dtype=dt).copy())
        else:
            raise SchemaViolation(path, name, f"unknown variable type {tag!r}")
    return attributes, variables


def _json_encode(attributes, variables):
    def data(tag, arr):
        return list(arr) if tag == "str" else np.asarray(arr).tolist()

    return json.dumps(
        {
            "magic": JSON_MAGIC,
            "attributes": attributes,
            "variables": {k: {"type": t, "data": data(t, d)} for k, (t, d) in variables.items()},
        },
        indent=1,
    )


def _json_decode(text, path):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaViolation(path, "json", str(exc)) from None
    if not isinstance(doc, dict) or doc.get("magic") != JSON_MAGIC:
        raise SchemaViolation(path, "magic", f"not an {JSON_MAGIC} document")
    variables = {}
    for k, v in doc.get("variables", {}).items():
        tag = v.get("type")
        if tag == "str":
            variables[k] = (tag, [str(x) for x in v["data"]])
        elif tag in _NUMERIC_TAGS:
            variables[k] = (tag, np.asarray(v["data"], dtype=np.dtype(tag)))
        else:
            raise SchemaViolation(path, k, f"unknown variable type {tag!r}")
    return doc.get("attributes", {}), variables


# --- model -------------------------------------------------------------------


def _index_tag(*arrays):
    top = max((int(a.max()) + 1 for a in arrays if len(a)), default=0)
    return "<i4" if top < 2**31 - 1 else "<i8"


def _value_var(values):
    if is_exact(values.dtype):
        return "str", [str(v) for v in values]
    return ("<f4" if values.dtype == np.float32 else "<f8"), values


def model_variables(imdp):
    """Attributes and variables of the container for ``imdp``."""
    lo, up = imdp.transition.lower, imdp.transition.upper
    tag = _index_tag(lo.colptr, up.colptr, lo.rowval, up.rowval, imdp.stateptr)
    attributes = {
        "num_states": int(imdp.num_states),
        "model": "imdp",
        "format": "sparse_csc",
        "rows": "to",
        "cols": "from/action",
    }
    variables = {
        "lower_colptr": (tag, lo.colptr + 1),
        "lower_rowval": (tag, lo.rowval + 1),
        "lower_nzval": _value_var(lo.nzval),
        "upper_colptr": (tag, up.colptr + 1),
        "upper_rowval": (tag, up.rowval + 1),
        "upper_nzval": _value_var(up.nzval),
        "stateptr": (tag, imdp.stateptr + 1),
        "action_vals": ("str", list(imdp.actions)),
    }
    return attributes, variables


def write_native_model(model_path, imdp_or_problem):
    imdp, _ = unpack(imdp_or_problem)
    attributes, variables = model_variables(imdp)
    path = Path(model_path)
    if path.suffix == ".json":
        path.write_text(_json_encode(attributes, variables), encoding="utf-8")
    else:
        path.write_bytes(_encode(attributes, variables))
    return path


def read_native_model(model_path, dtype=None, check=True):
    """Read a model container; ``dtype`` defaults to the stored value type."""
    path = require(model_path)
    raw = path.read_bytes()
    if raw.startswith(MAGIC):
        attributes, variables = _decode(raw, str(path))
    else:
        attributes, variables = _json_decode(raw.decode("utf-8", errors="replace"), str(path))
    return _build_model(attributes, variables, str(path), dtype, check)


def _expect(attributes, name, allowed, path):
    if name not in attributes:
        raise SchemaViolation(path, name, "missing attribute")
    if attributes[name] not in allowed:
        raise SchemaViolation(path, name, f"expected one of {sorted(allowed)}, got {attributes[name]!r}")
    return attributes[name]


def _build_model(attributes, variables, path, dtype, check):
    if not isinstance(attributes.get("num_states"), int) or attributes["num_states"] < 1:
        raise SchemaViolation(path, "num_states", "missing or not a positive integer")
    n = attributes["num_states"]
    model = _expect(attributes, "model", {"imc", "imdp"}, path)
    _expect(attributes, "format", {"sparse_csc"}, path)
    _expect(attributes, "rows", {"to"}, path)
    _expect(attributes, "cols", {"from"} if model == "imc" else {"from/action"}, path)

    needed = [f"{b}_{p}" for b in ("lower", "upper") for p in ("colptr", "rowval", "nzval")]
    if model == "imdp":
        needed += ["stateptr", "action_vals"]
    for name in needed:
        if name not in variables:
            raise SchemaViolation(path, name, "missing variable")

    def index(name):
        tag, data = variables[name]
        if tag not in ("<i4", "<i8"):
            raise SchemaViolation(path, name, f"expected an integer variable, got {tag}")
        return np.asarray(data, dtype=np.int64) - 1

    value_tag = variables["upper_nzval"][0]
    if dtype is None:
        dtype = {"str": "rational", "<f4": "f32"}.get(value_tag, "f64")
    dtype = field_dtype(dtype)

    def values(name):
        tag, data = variables[name]
        if tag == "str":
            try:
                return as_field_array([Fraction(x) for x in data], dtype)
            except (ValueError, ZeroDivisionError):
                raise SchemaViolation(path, name, "malformed rational value") from None
        if tag not in ("<f4", "<f8"):
            raise SchemaViolation(path, name, f"expected a floating-point variable, got {tag}")
        return as_field_array(data, dtype)

    if model == "imdp":
        stateptr = index("stateptr")
        labels = variables["action_vals"][1]
        if variables["action_vals"][0] != "str":
            labels = [str(x) for x in np.asarray(labels).tolist()]
        if len(stateptr) != n + 1:
            raise IndexOutOfBounds(path, "stateptr", f"length {len(stateptr)}, expected {n + 1}")
    else:
        stateptr = np.arange(n + 1, dtype=np.int64)
        labels = ["0"] * n
    ncols = int(stateptr[-1])

    mats = []
    for b in ("lower", "upper"):
        colptr, rowval, nzval = index(f"{b}_colptr"), index(f"{b}_rowval"), values(f"{b}_nzval")
        if len(colptr) != ncols + 1 or colptr[0] != 0 or np.any(np.diff(colptr) < 0):
            raise IndexOutOfBounds(path, f"{b}_colptr", f"not a valid pointer array for {ncols} columns")
        if colptr[-1] != len(rowval) or len(rowval) != len(nzval):
            raise IndexOutOfBounds(path, f"{b}_rowval", "length does not match colptr / nzval")
        if len(rowval) and (rowval.min() < 0 or rowval.max() >= n):
            raise IndexOutOfBounds(path, f"{b}_rowval", f"row index outside 1..{n}")
        colidx = np.repeat(np.arange(ncols), np.diff(colptr))
        unsorted = (np.diff(rowval) <= 0) & (colidx[1:] == colidx[:-1])
        if np.any(unsorted):
            j = int(colidx[1:][unsorted][0])
            raise IndexOutOfBounds(path, f"{b}_rowval", f"rows of column {j + 1} not strictly increasing")
        mats.append(CSCMatrix(colptr, rowval, nzval, (n, ncols)))
    if len(labels) != ncols:
        raise IndexOutOfBounds(path, "action_vals", f"{len(labels)} labels for {ncols} columns")
    return imdp_from_csc(mats[0], mats[1], stateptr, labels, check)


# --- specification -------------------------------------------------------------


def spec_to_json(spec):
    prop = spec.prop
    finite = isinstance(prop, (FiniteTimeReachability, FiniteTimeReachAvoid, FiniteTimeReward))
    d = {}
    if isinstance(prop, (FiniteTimeReward, InfiniteTimeReward)):
        d["type"] = "reward"
    elif isinstance(prop, (FiniteTimeReachAvoid, InfiniteTimeReachAvoid)):
        d["type"] = "reach-avoid"
    else:
        d["type"] = "reachability"
    d["infinite_time"] = not finite
    if finite:
        d["time_horizon"] = int(prop.time_horizon)
    else:
        d["eps"] = float(prop.eps)
    if d["type"] == "reward":
        d["reward"] = [float(r) for r in prop.reward.tolist()]
        d["discount"] = float(prop.discount)
    else:
        d["reach"] = [s + 1 for s in prop.reach]
        if d["type"] == "reach-avoid":
            d["avoid"] = [s + 1 for s in prop.avoid]
    return {
        "property": d,
        "satisfaction_mode": spec.satisfaction_mode.value,
        "strategy_mode": spec.strategy_mode.value,
    }


def write_native_spec(spec_path, spec_or_problem):
    spec = spec_or_problem if isinstance(spec_or_problem, Specification) else spec_or_problem.spec
    Path(spec_path).write_text(json.dumps(spec_to_json(spec), indent=4) + "\n", encoding="utf-8")
    return Path(spec_path)


def _is_pos_int(x):
    return isinstance(x, int) and not isinstance(x, bool) and x > 0


def spec_from_json(doc, path="<spec>"):
    """Map a specification document to a :class:`Specification`."""

    def fail(field, reason):
        raise SpecSchemaError(path, field, reason)

    if not isinstance(doc, dict):
        fail("<root>", "expected an object")
    for key in ("property", "satisfaction_mode", "strategy_mode"):
        if key not in doc:
            fail(key, "missing")
    if doc["satisfaction_mode"] not in ("pessimistic", "optimistic"):
        fail("satisfaction_mode", f"got {doc['satisfaction_mode']!r}")
    if doc["strategy_mode"] not in ("minimize", "maximize"):
        fail("strategy_mode", f"got {doc['strategy_mode']!r}")
    p = doc["property"]
    if not isinstance(p, dict):
        fail("property", "expected an object")
    kind = p.get("type")
    if kind not in ("reachability", "reach-avoid", "reward"):
        fail("property.type", f"got {kind!r}")
    infinite = p.get("infinite_time")
    if not isinstance(infinite, bool):
        fail("property.infinite_time", "missing or not a boolean")
    if "eps" in p and "time_horizon" in p:
        fail("property", "eps and time_horizon are mutually exclusive")
    if infinite:
        if "time_horizon" in p:
            fail("property.time_horizon", "not allowed for an infinite-time property")
        eps = p.get("eps")
        if isinstance(eps, bool) or not isinstance(eps, (int, float)) or not eps > 0:
            fail("property.eps", "missing or not a positive number")
    else:
        if "eps" in p:
            fail("property.eps", "not allowed for a finite-time property")
        horizon = p.get("time_horizon")
        if not _is_pos_int(horizon):
            fail("property.time_horizon", "missing or not a positive integer")

    def states(field):
        v = p.get(field)
        if not isinstance(v, list) or not all(_is_pos_int(s) for s in v):
            fail(f"property.{field}", "missing or not a list of positive integers")
        return [s - 1 for s in v]

    try:
        if kind == "reward":
            for field in ("reach", "avoid"):
                if field in p:
                    fail(f"property.{field}", "not allowed for a reward property")
            reward = p.get("reward")
            if not isinstance(reward, list) or not reward:
                fail("property.reward", "missing or not a list")
            try:
                reward = np.asarray([float(r) for r in reward])
            except (TypeError, ValueError):
                fail("property.reward", "entries must be numbers")
            discount = p.get("discount")
            if isinstance(discount, bool) or not isinstance(discount, (int, float)):
                fail("property.discount", "missing or not a number")
            prop = (
                InfiniteTimeReward(reward, discount, p["eps"])
                if infinite
                else FiniteTimeReward(reward, discount, p["time_horizon"])
            )
        elif kind == "reachability":
            for field in ("avoid", "reward", "discount"):
                if field in p:
                    fail(f"property.{field}", "not allowed for a reachability property")
            reach = states("reach")
            prop = (
                InfiniteTimeReachability(reach, p["eps"])
                if infinite
                else FiniteTimeReachability(reach, p["time_horizon"])
            )
        else:
            for field in ("reward", "discount"):
                if field in p:
                    fail(f"property.{field}", "not allowed for a reach-avoid property")
            reach, avoid = states("reach"), states("avoid")
            prop = (
                InfiniteTimeReachAvoid(reach, avoid, p["eps"])
                if infinite
                else FiniteTimeReachAvoid(reach, avoid, p["time_horizon"])
            )
    except SpecSchemaError:
        raise
    except ValueError as exc:
        fail("property", str(exc))
    return Specification(prop, doc["satisfaction_mode"], doc["strategy_mode"])


def read_native_spec(spec_path):
    path = require(spec_path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SpecSchemaError(str(path), "json", f"line {exc.lineno}: {exc.msg}") from None
    return spec_from_json(doc, str(path))


def read_native(model_path, spec_path=None, dtype=None, check=True) -> FormatProblem:
    imdp = read_native_model(model_path, dtype, check)
    spec = read_native_spec(spec_path) if spec_path is not None else None
    return FormatProblem(imdp, spec)


def write_native(model_path, spec_path, problem):
    """Write the model container and, when ``spec_path`` is given, the spec JSON."""
    paths = [write_native_model(model_path, problem)]
    if spec_path is not None:
        _, spec = unpack(problem)
        if spec is None:
            raise ValueError("problem carries no specification to write")
        paths.append(write_native_spec(spec_path, spec))
    return paths
