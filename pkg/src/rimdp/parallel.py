"""Deterministic data-parallel building blocks.

The bitonic sorting network and the tree-reduction scan follow the round
structure of their GPU counterparts: every round is one vectorized
operation over all comparators (or tree nodes), optionally split across
threads, with a barrier between rounds. Outputs never depend on the worker
count.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction

import numpy as np

THREADS_ENV = "RIMDP_THREADS"


def resolve_workers(workers=None):
    """Worker count: explicit value, else ``$RIMDP_THREADS``, else CPU count.

    ``0`` also means automatic.
    """
    if workers is None or workers == 0:
        env = os.environ.get(THREADS_ENV, "").strip()
        workers = int(env) if env else 0
        if workers <= 0:
            workers = os.cpu_count() or 1
    if workers < 1:
        raise ValueError(f"worker count must be positive, got {workers}")
    return int(workers)


def chunk_bounds(n, parts):
    """Split ``range(n)`` into ``parts`` contiguous, near-equal chunks."""
    parts = max(1, min(parts, n)) if n else 1
    edges = np.linspace(0, n, parts + 1).round().astype(np.int64)
    return list(zip(edges[:-1].tolist(), edges[1:].tolist()))


_POOLS = {}


def _pool(workers):
    pool = _POOLS.get(workers)
    if pool is None:
        pool = _POOLS[workers] = ThreadPoolExecutor(max_workers=workers, thread_name_prefix="rimdp")
    return pool


def parallel_ranges(n, fn, workers=1, bounds=None):
    """Run ``fn(start, stop)`` over contiguous chunks of ``range(n)``.

    Returns the per-chunk results in chunk order. If several chunks fail, the
    error of the lowest chunk is raised, so failures are reproducible.
    """
    bounds = bounds if bounds is not None else chunk_bounds(n, workers)
    if workers == 1 or len(bounds) == 1:
        return [fn(a, b) for a, b in bounds]
    futures = [_pool(workers).submit(fn, a, b) for a, b in bounds]
    results, first_error = [], None
    for fut in futures:
        try:
            results.append(fut.result())
        except BaseException as exc:  # noqa: BLE001 - re-raised below
            results.append(None)
            if first_error is None:
                first_error = exc
    if first_error is not None:
        raise first_error
    return results


def parallel_map_states(state_count, worker_fn, workers=None):
    """Apply ``worker_fn(s)`` to every state, possibly across threads.

    The result list is identical to ``[worker_fn(s) for s in range(state_count)]``
    for any worker count. When workers fail, the exception raised is the one
    from the lowest state index.
    """
    workers = resolve_workers(workers)

    def run(a, b):
        out = []
        for s in range(a, b):
            try:
                out.append(worker_fn(s))
            except Exception as exc:
                return out, (s, exc)
        return out, None

    chunks = parallel_ranges(state_count, run, workers)
    results = []
    for out, err in chunks:
        if err is not None:
            raise err[1]
        results.extend(out)
    return results


# --- bitonic sort -----------------------------------------------------------


def bitonic_schedule(n):
    """Comparator schedule for a power-of-two ``n``.

    Returns a list of major rounds; major round ``k`` (1-based) merges
    bitonic blocks of size ``2**k`` and is a list of ``k`` minor rounds,
    each given as ``(block, stride)``. A minor round compares ``i`` with
    ``i + stride`` for every ``i`` with ``i & stride == 0``; the pair is put
    in ascending order when ``i & block == 0`` and descending otherwise.
    """
    if n < 1 or n & (n - 1):
        raise ValueError(f"bitonic network size must be a power of two, got {n}")
    rounds = []
    block = 2
    while block <= n:
        minors = []
        stride = block // 2
        while stride >= 1:
            minors.append((block, stride))
            stride //= 2
        rounds.append(minors)
        block *= 2
    return rounds


def _sentinel(dtype):
    return float("inf") if dtype == object else np.inf


def bitonic_sort(keys, payload=None, descending=False, workers=1):
    """Stable sort by a bitonic network.

    Returns ``payload`` (default: the 0-based positions) reordered so that
    ``keys`` are non-decreasing (non-increasing when ``descending``). Equal
    keys keep ascending original position, i.e. the network sorts the
    composite key ``(key, position)``. Non-power-of-two inputs are padded
    with ``+inf`` sentinels that sort last and are dropped.
    """
    keys = np.asarray(keys)
    n = len(keys)
    payload = np.arange(n) if payload is None else np.asarray(payload)
    if n <= 1:
        return payload.copy()
    if keys.dtype == object:
        k = np.array([-x if descending else x for x in keys], dtype=object)
    else:
        k = -keys.astype(np.float64) if descending else keys.astype(np.float64)
    m = 1 << (n - 1).bit_length()
    if m > n:
        pad = np.empty(m - n, dtype=k.dtype)
        pad[:] = _sentinel(k.dtype)
        k = np.concatenate([k, pad])
    idx = np.arange(m)

    lanes = np.arange(m)
    for major in bitonic_schedule(m):
        for block, stride in major:
            lo = lanes[(lanes & stride) == 0]
            _compare_exchange(k, idx, lo, lo + stride, (lo & block) == 0, workers)
    return payload[idx[:n]]


def _compare_exchange(k, idx, lo, hi, ascending, workers):
    def run(a, b):
        i, j, asc = lo[a:b], hi[a:b], ascending[a:b]
        ki, kj = k[i], k[j]
        greater = np.asarray((ki > kj) | ((ki == kj) & (idx[i] > idx[j])), dtype=bool)
        swap = np.where(asc, greater, ~greater)
        si, sj = i[swap], j[swap]
        k[si], k[sj] = k[sj], k[si].copy()
        idx[si], idx[sj] = idx[sj], idx[si].copy()

    # Disjoint comparator slices touch disjoint lanes, so chunks never race.
    parallel_ranges(len(lo), run, workers)


# --- tree-reduction scan ----------------------------------------------------


def _zeros_like(x, shape):
    out = np.zeros(shape, dtype=x.dtype)
    if x.dtype == object:
        out[...] = Fraction(0)
    return out


def tree_scan(values, axis=-1, exclusive=False, workers=1):
    """Prefix sums by an up-sweep/down-sweep reduction tree.

    ``out[i] = values[0] + ... + values[i]`` (``... + values[i-1]`` when
    ``exclusive``), computed along ``axis`` with ``2*log2(n)`` vectorized
    rounds. Float results differ from left-to-right summation only by
    reduction order; rationals are exact. Independent rows of a 2-d input
    may be split across ``workers``.
    """
    x = np.asarray(values)
    if x.ndim == 0:
        raise ValueError("tree_scan needs at least one dimension")
    x = np.moveaxis(x, axis, -1)
    n = x.shape[-1]
    if n == 0:
        return np.moveaxis(x.copy(), -1, axis)
    m = 1 << (n - 1).bit_length()
    lead = x.shape[:-1]
    flat = x.reshape(-1, n)
    out = _zeros_like(x, flat.shape)

    def run(a, b):
        buf = _zeros_like(x, (b - a, m))
        buf[:, :n] = flat[a:b]
        d = 1
        while d < m:  # up-sweep: node sums
            buf[:, 2 * d - 1 :: 2 * d] += buf[:, d - 1 :: 2 * d]
            d *= 2
        total = buf[:, m - 1].copy()
        buf[:, m - 1] = 0 if x.dtype != object else Fraction(0)
        d = m // 2
        while d >= 1:  # down-sweep: exclusive prefixes
            left = buf[:, d - 1 :: 2 * d].copy()
            buf[:, d - 1 :: 2 * d] = buf[:, 2 * d - 1 :: 2 * d]
            buf[:, 2 * d - 1 :: 2 * d] += left
            d //= 2
        if exclusive:
            out[a:b] = buf[:, :n]
        else:
            out[a:b, : n - 1] = buf[:, 1:n]
            out[a:b, n - 1] = buf[:, n] if n < m else total

    parallel_ranges(flat.shape[0], run, workers)
    return np.moveaxis(out.reshape(lead + (n,)), -1, axis)


def sequential_scan(values):
    """Left-to-right inclusive prefix sums (reference)."""
    out = list(values)
    for i in range(1, len(out)):
        out[i] = out[i - 1] + out[i]
    return np.asarray(out, dtype=np.asarray(values).dtype) if len(out) else np.asarray(values).copy()
