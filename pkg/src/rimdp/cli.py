"""Command-line front end: ``rimdp {verify,synthesize,convert,validate,bench}``.

Exit codes: 0 success, 1 other failure, 2 parse error, 3 infeasible or
invalid model, 4 no convergence.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import resource
import sys
import time

import numpy as np

from . import errors
from .io import FORMATS, default_spec, read_problem, write_problem
from .io.common import FormatProblem
from .io.native import spec_to_json
from .model import validate
from .numeric import format_scalar
from .parallel import resolve_workers
from .solver import (
    DEFAULT_MAX_ITERATIONS,
    FiniteTimeReachability,
    InfiniteTimeReachability,
    Problem,
    Specification,
    TimeDependentPolicy,
    control_synthesis,
    value_iteration,
)

EXIT_OK, EXIT_FAIL, EXIT_PARSE, EXIT_MODEL, EXIT_CONVERGENCE = 0, 1, 2, 3, 4
PRECISIONS = {"f64": "f64", "f32": "f32", "rational": "rational"}


def _add_model_args(p, spec=True):
    p.add_argument("--format", choices=FORMATS, required=True)
    p.add_argument("--model", required=True, help="model file (PRISM: path without extension)")
    if spec:
        p.add_argument("--spec", help="specification JSON (native format)")
    p.add_argument("--precision", choices=sorted(PRECISIONS), default="f64")


def _add_solve_args(p):
    _add_model_args(p)
    p.add_argument("--threads", type=int, default=None, help="worker threads, 0 = auto (env RIMDP_THREADS)")
    p.add_argument("--output", choices=("text", "json", "csv"), default="text")
    p.add_argument("--max-iter", type=int, default=DEFAULT_MAX_ITERATIONS)
    p.add_argument("--summary", action="store_true", help="print min/mean/max instead of every state")
    p.add_argument("--no-timing", action="store_true", help="omit wall time (reproducible output)")
    g = p.add_argument_group("property override (required for bmdp-tool models)")
    g.add_argument("--horizon", type=int, help="finite-time reachability horizon")
    g.add_argument("--eps", type=float, help="infinite-time reachability tolerance")
    g.add_argument("--satisfaction", choices=("pessimistic", "optimistic"))
    g.add_argument("--strategy", choices=("minimize", "maximize"))


def _thread_list(text):
    try:
        counts = [int(t) for t in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if any(c < 1 for c in counts):
        raise argparse.ArgumentTypeError("worker counts must be positive")
    return counts


def build_parser():
    parser = argparse.ArgumentParser(prog="rimdp", description="Robust value iteration for interval MDPs.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", help="compute optimal values")
    _add_solve_args(p)

    p = sub.add_parser("synthesize", help="compute an optimal policy")
    _add_solve_args(p)
    p.add_argument("--policy", required=True, help="output CSV for the policy")

    p = sub.add_parser("convert", help="convert between formats")
    p.add_argument("--from", dest="src_format", choices=FORMATS, required=True)
    p.add_argument("--to", dest="dst_format", choices=FORMATS, required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--spec")
    p.add_argument("--out-model", required=True)
    p.add_argument("--out-spec")
    p.add_argument("--precision", choices=sorted(PRECISIONS), default="f64")
    p.add_argument("--horizon", type=int, default=100, help="horizon for the check of spec-less sources")
    p.add_argument("--no-check", action="store_true", help="skip the value-preservation check")
    p.add_argument("--tolerance", type=float, default=1e-9)

    p = sub.add_parser("validate", help="check model invariants")
    _add_model_args(p)

    p = sub.add_parser("bench", help="time a 200-step maximize-pessimistic reachability query")
    p.add_argument("--states", type=int, default=10000)
    p.add_argument("--actions", type=int, default=2)
    p.add_argument("--density", type=float, help="support fraction per column")
    p.add_argument("--support", type=int, default=10, help="destinations per column (if no --density)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--horizon", type=int, default=200)
    p.add_argument("--threads", type=_thread_list, default=[1], help="comma-separated worker counts, e.g. 1,2,4")
    p.add_argument("--format", choices=FORMATS, help="benchmark a model file instead")
    p.add_argument("--model")
    p.add_argument("--spec")
    p.add_argument("--output", choices=("text", "csv"), default="text")
    return parser


# --- helpers ------------------------------------------------------------------


class UsageError(Exception):
    """Flags that parse but do not describe a runnable query."""


def _usage(msg):
    raise UsageError(msg)


def _load(args):
    fp = read_problem(args.format, args.model, getattr(args, "spec", None), PRECISIONS[args.precision])
    return _apply_overrides(fp, args)


def _apply_overrides(fp: FormatProblem, args):
    spec = fp.spec
    reach = spec.prop.reach if spec is not None and hasattr(spec.prop, "reach") else fp.terminal_states
    prop = spec.prop if spec is not None else None
    if args.horizon is not None and args.eps is not None:
        _usage("--horizon and --eps are mutually exclusive")
    if args.horizon is not None or args.eps is not None:
        if reach is None:
            _usage("no reach/terminal set to build a property from")
        prop = (
            FiniteTimeReachability(reach, args.horizon)
            if args.horizon is not None
            else InfiniteTimeReachability(reach, args.eps)
        )
    if prop is None:
        _usage("model has no specification; pass --horizon or --eps")
    sat = args.satisfaction or (spec.satisfaction_mode if spec else "pessimistic")
    strat = args.strategy or (spec.strategy_mode if spec else "maximize")
    return Problem(fp.imdp, Specification(prop, sat, strat))


def _report(args, problem, vf, elapsed, workers):
    values = vf.values
    as_float = np.asarray(values, dtype=np.float64)
    doc = {
        "format": args.format,
        "model": args.model,
        "precision": args.precision,
        "num_states": problem.imdp.num_states,
        "num_columns": problem.imdp.num_cols,
        "num_transitions": problem.imdp.num_transitions,
        "threads": workers,
        "specification": spec_to_json(problem.spec),
        "iterations": int(vf.iterations),
        "max_residual": format_scalar(max(vf.residual) if len(vf.residual) else 0.0),
        "summary": {
            "min": format_scalar(as_float.min()),
            "mean": format_scalar(as_float.mean()),
            "max": format_scalar(as_float.max()),
        },
    }
    if not args.summary:
        doc["values"] = [format_scalar(v) for v in values]
    if not args.no_timing:
        doc["wall_time_s"] = round(elapsed, 6)
    if args.output == "json":
        return json.dumps(doc, indent=2) + "\n"
    if args.output == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        if args.summary:
            w.writerow(["statistic", "value"])
            w.writerows(doc["summary"].items())
        else:
            w.writerow(["state", "value", "residual"])
            for s, (v, r) in enumerate(zip(values, vf.residual)):
                w.writerow([s, format_scalar(v), format_scalar(r)])
        return buf.getvalue()
    lines = [
        f"model: {args.model} ({args.format}, {args.precision})",
        f"states: {doc['num_states']}  columns: {doc['num_columns']}  transitions: {doc['num_transitions']}",
        f"iterations: {doc['iterations']}",
        f"max residual: {doc['max_residual']}",
    ]
    if not args.no_timing:
        lines.append(f"wall time: {doc['wall_time_s']} s (threads: {workers})")
    if args.summary:
        lines += [f"{k}: {v}" for k, v in doc["summary"].items()]
    else:
        lines.append("values:")
        lines += [f"{s} {v}" for s, v in enumerate(doc["values"])]
    return "\n".join(lines) + "\n"


def write_policy_csv(path, policy):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if isinstance(policy, TimeDependentPolicy):
            w.writerow(["state"] + [f"t{t}" for t in range(policy.time_horizon)])
            for s, row in enumerate(policy.actions):
                w.writerow([s, *row])
        else:
            w.writerow(["state", "action"])
            for s, a in enumerate(policy.actions):
                w.writerow([s, a])


# --- commands -----------------------------------------------------------------


def cmd_verify(args):
    problem = _load(args)
    workers = resolve_workers(args.threads)
    t0 = time.perf_counter()
    vf = value_iteration(problem, workers=workers, max_iterations=args.max_iter)
    sys.stdout.write(_report(args, problem, vf, time.perf_counter() - t0, workers))
    return EXIT_OK


def cmd_synthesize(args):
    problem = _load(args)
    workers = resolve_workers(args.threads)
    t0 = time.perf_counter()
    policy, vf = control_synthesis(problem, workers=workers, max_iterations=args.max_iter)
    elapsed = time.perf_counter() - t0
    write_policy_csv(args.policy, policy)
    sys.stdout.write(_report(args, problem, vf, elapsed, workers))
    return EXIT_OK


def cmd_convert(args):
    from .io import convert

    _, diff = convert(
        args.src_format,
        args.model,
        args.dst_format,
        args.out_model,
        src_spec=args.spec,
        dst_spec=args.out_spec,
        dtype=PRECISIONS[args.precision],
        check=not args.no_check,
        horizon=args.horizon,
    )
    if diff is None:
        print(f"converted {args.src_format} -> {args.dst_format} (unchecked)")
        return EXIT_OK
    print(f"converted {args.src_format} -> {args.dst_format}; max value difference {diff:.3e}")
    if diff > args.tolerance:
        print(f"value check failed: {diff:.3e} > {args.tolerance:.1e}", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def cmd_validate(args):
    fp = read_problem(args.format, args.model, args.spec, PRECISIONS[args.precision], check=False)
    report = validate(fp.imdp)
    if not report:
        print(f"ok: {fp.imdp.num_states} states, {fp.imdp.num_cols} columns, {fp.imdp.num_transitions} transitions")
        return EXIT_OK
    for v in report:
        where = ", ".join(f"{k}={getattr(v, k)}" for k in ("state", "column", "row") if getattr(v, k) is not None)
        print(f"{v.kind}: {v.message}" + (f" ({where})" if where else ""))
    return EXIT_MODEL


def _peak_rss_mb():
    return resource.getrusage(resource.RUSAGE_SELF).ru_maxrss / 1024.0


def cmd_bench(args):
    from .generators import random_imdp

    if args.model:
        if not args.format:
            _usage("--model needs --format")
        fp = read_problem(args.format, args.model, args.spec)
        reach = fp.spec.prop.reach if fp.spec is not None and hasattr(fp.spec.prop, "reach") else fp.terminal_states
        imdp = fp.imdp
        source = args.model
    else:
        imdp = random_imdp(args.states, args.actions, args.support, args.density, seed=args.seed)
        reach = tuple(range(0, imdp.num_states, 100)) or (0,)
        source = f"random(states={args.states}, actions={args.actions}, seed={args.seed})"
    problem = Problem(imdp, default_spec(reach, args.horizon))
    rows = []
    base = None
    for workers in args.threads:
        t0 = time.perf_counter()
        value_iteration(problem, workers=workers)
        elapsed = time.perf_counter() - t0
        base = base or elapsed
        rows.append((workers, imdp.num_states, imdp.num_cols, imdp.num_transitions, elapsed, base / elapsed, _peak_rss_mb()))
    header = ("threads", "states", "columns", "transitions", "seconds", "speedup", "peak_rss_mb")
    if args.output == "csv":
        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([r[0], r[1], r[2], r[3], f"{r[4]:.4f}", f"{r[5]:.3f}", f"{r[6]:.1f}"])
    else:
        print(f"{source}: {args.horizon}-step maximize-pessimistic reachability (load time excluded)")
        print("  ".join(f"{h:>11}" for h in header))
        for r in rows:
            print(f"{r[0]:>11}  {r[1]:>11}  {r[2]:>11}  {r[3]:>11}  {r[4]:>11.3f}  {r[5]:>11.2f}  {r[6]:>11.1f}")
    return EXIT_OK


COMMANDS = {
    "verify": cmd_verify,
    "synthesize": cmd_synthesize,
    "convert": cmd_convert,
    "validate": cmd_validate,
    "bench": cmd_bench,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"rimdp: error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except errors.FormatError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except errors.NonConvergence as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except errors.ModelError as exc:
        print(f"invalid model: {exc}", file=sys.stderr)
        return EXIT_MODEL


if __name__ == "__main__":
    sys.exit(main())
