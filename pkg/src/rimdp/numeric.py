"""Scalar field handling: float64, float32 and exact rationals.

Rationals are carried in numpy ``object`` arrays of :class:`fractions.Fraction`.
"""

from fractions import Fraction

import numpy as np

FIELDS = {
    "f64": np.dtype(np.float64),
    "f32": np.dtype(np.float32),
    "rational": np.dtype(object),
}

# Absolute tolerance for float column-sum feasibility checks.
FEASIBILITY_TOL = 1e-9


def field_dtype(field):
    """Resolve a field name (``"f64"``, ``"f32"``, ``"rational"``) or dtype."""
    if isinstance(field, str) and field in FIELDS:
        return FIELDS[field]
    dt = np.dtype(field)
    if dt not in FIELDS.values():
        raise ValueError(f"unsupported numeric field {field!r}")
    return dt


def field_name(dtype):
    dtype = field_dtype(dtype)
    for name, dt in FIELDS.items():
        if dt == dtype:
            return name
    raise ValueError(f"unsupported numeric field {dtype!r}")


def is_exact(dtype):
    return field_dtype(dtype) == object


def to_fraction(x):
    """Exact rational for ``x``.

    Floats go through their shortest round-trip decimal, so ``0.1`` becomes
    ``1/10`` rather than the nearest dyadic rational.
    """
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    if isinstance(x, (float, np.floating)):
        if not np.isfinite(x):
            raise ValueError(f"cannot represent {x!r} as a rational")
        return Fraction(repr(float(x)))
    return Fraction(str(x))


def as_field_array(values, dtype):
    """Convert a sequence or array into an array of the given field."""
    dtype = np.dtype(dtype)
    if dtype == object:
        flat = np.asarray(values, dtype=object)
        out = np.empty(flat.shape, dtype=object)
        out.ravel()[:] = [to_fraction(v) for v in flat.ravel()]
        return out
    arr = np.asarray(values)
    if arr.dtype == object:
        arr = np.array([float(v) for v in arr.ravel()], dtype=np.float64).reshape(arr.shape)
    return arr.astype(dtype)


def infer_dtype(*arrays):
    """object if any input holds Fractions, else float64."""
    for a in arrays:
        if isinstance(a, np.ndarray) and a.dtype == object:
            return np.dtype(object)
        if not isinstance(a, np.ndarray) and not hasattr(a, "tocsc"):
            flat = np.asarray(a, dtype=object).ravel()
            if any(isinstance(v, Fraction) for v in flat):
                return np.dtype(object)
        if isinstance(a, np.ndarray) and a.dtype == np.float32:
            return np.dtype(np.float32)
    return np.dtype(np.float64)


def zero(dtype):
    return Fraction(0) if is_exact(dtype) else np.dtype(dtype).type(0)


def one(dtype):
    return Fraction(1) if is_exact(dtype) else np.dtype(dtype).type(1)


def format_scalar(x):
    """Shortest text that parses back to the same value."""
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, np.float32):
        return str(x)
    return repr(float(x))


def parse_scalar(text, dtype):
    dtype = np.dtype(dtype)
    if dtype == object:
        return Fraction(text)
    if "/" in text:
        return dtype.type(float(Fraction(text)))
    return dtype.type(float(text))
