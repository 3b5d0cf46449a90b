import json
import shutil
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from rimdp import errors
from rimdp.bellman import Maximize, Minimize, Optimistic, Pessimistic
from rimdp.generators import random_imdp, three_state_example
from rimdp.io import convert, read_problem, write_problem
from rimdp.io.bmdp import read_bmdp_tool, write_bmdp_tool
from rimdp.io.native import read_native, read_native_model, read_native_spec, spec_from_json, write_native
from rimdp.io.prism import read_prism, write_prism
from rimdp.solver import (
    FiniteTimeReachAvoid,
    FiniteTimeReachability,
    FiniteTimeReward,
    InfiniteTimeReachability,
    InfiniteTimeReward,
    Problem,
    Specification,
    value_iteration,
)

FIXTURES = Path(__file__).parent / "fixtures"


def example_problem():
    return Problem(three_state_example(), Specification(FiniteTimeReachability([2], 100), Pessimistic, Maximize))


# --- golden fixtures ------------------------------------------------------------


def test_prism_fixture_matches_model():
    fp = read_prism(FIXTURES / "paper_model")
    ref = example_problem()
    assert fp.imdp == ref.imdp
    assert fp.spec == ref.spec


def test_bmdp_fixture_matches_model():
    imdp, terminal = read_bmdp_tool(FIXTURES / "paper_model.bmdp")
    ref = three_state_example()
    assert terminal == (2,)
    assert imdp.transition == ref.transition
    assert imdp.stateptr.tolist() == ref.stateptr.tolist()
    assert imdp.actions == ("0", "1", "0", "1", "2")


@pytest.mark.parametrize("model", ["paper_model.imdp", "paper_model.imdp.json"])
def test_native_fixture_matches_model(model):
    fp = read_native(FIXTURES / model, FIXTURES / "paper_model.spec.json")
    assert fp.imdp == three_state_example()
    assert fp.spec == example_problem().spec


def test_writers_reproduce_fixtures_byte_for_byte(tmp_path):
    p = example_problem()
    write_prism(tmp_path / "m", p)
    for ext in ("sta", "lab", "tra", "pctl"):
        assert (tmp_path / f"m.{ext}").read_bytes() == (FIXTURES / f"paper_model.{ext}").read_bytes()
    write_bmdp_tool(tmp_path / "m.bmdp", p)
    assert (tmp_path / "m.bmdp").read_bytes() == (FIXTURES / "paper_model.bmdp").read_bytes()
    write_native(tmp_path / "m.imdp", tmp_path / "s.json", p)
    assert (tmp_path / "m.imdp").read_bytes() == (FIXTURES / "paper_model.imdp").read_bytes()
    assert (tmp_path / "s.json").read_bytes() == (FIXTURES / "paper_model.spec.json").read_bytes()


def test_native_reachability_spec_example():
    doc = {
        "property": {"type": "reachability", "infinite_time": False, "time_horizon": 100, "reach": [3]},
        "satisfaction_mode": "pessimistic",
        "strategy_mode": "maximize",
    }
    assert spec_from_json(doc) == Specification(FiniteTimeReachability([2], 100), Pessimistic, Maximize)


def test_native_reward_spec_fixture():
    spec = read_native_spec(FIXTURES / "paper_model_reward.spec.json")
    assert spec.prop == FiniteTimeReward([1.0, 2.0, 3.0], 0.95, 100)


# --- parse errors -----------------------------------------------------------------


def _copy_prism(tmp_path):
    for ext in ("sta", "lab", "tra", "pctl"):
        shutil.copy(FIXTURES / f"paper_model.{ext}", tmp_path / f"m.{ext}")
    return tmp_path / "m"


def _edit(path, old, new):
    text = path.read_text()
    assert old in text
    path.write_text(text.replace(old, new, 1))


@pytest.mark.parametrize("ext", ["sta", "lab", "tra", "pctl"])
def test_prism_missing_file_named(tmp_path, ext):
    stem = _copy_prism(tmp_path)
    (tmp_path / f"m.{ext}").unlink()
    with pytest.raises(errors.MissingFile) as ei:
        read_prism(stem)
    assert ei.value.path.endswith(f"m.{ext}")


def test_prism_empty_tra(tmp_path):
    stem = _copy_prism(tmp_path)
    (tmp_path / "m.tra").write_text("")
    with pytest.raises(errors.ParseError):
        read_prism(stem)


def test_prism_bad_bound_reports_line(tmp_path):
    stem = _copy_prism(tmp_path)
    _edit(tmp_path / "m.tra", "0 0 1 [0.1,0.6] a1", "0 0 1 [0.1,1.6] a1")
    with pytest.raises(errors.ParseError) as ei:
        read_prism(stem)
    assert ei.value.line == 3 and ei.value.kind == "EntryOutOfRange"
    assert ei.value.file.endswith("m.tra")


def test_prism_inconsistent_state_count(tmp_path):
    stem = _copy_prism(tmp_path)
    _edit(tmp_path / "m.tra", "3 5 13", "4 5 13")
    with pytest.raises(errors.InconsistentStateCount):
        read_prism(stem)


def test_prism_duplicate_and_dangling(tmp_path):
    stem = _copy_prism(tmp_path)
    _edit(tmp_path / "m.tra", "0 0 2 [0.2,0.7] a1", "0 0 1 [0.2,0.7] a1")
    with pytest.raises(errors.DuplicateTransition):
        read_prism(stem)
    stem = _copy_prism(tmp_path)
    _edit(tmp_path / "m.tra", "0 0 2 [0.2,0.7] a1", "0 0 7 [0.2,0.7] a1")
    with pytest.raises(errors.DanglingStateIndex):
        read_prism(stem)


@pytest.mark.parametrize(
    "query, strat, sat, horizon",
    [
        ('Pmaxmin=? [ F<=100 "goal" ]', Maximize, Pessimistic, 100),
        ('Pmaxmax=? [ F<=7 "goal" ]', Maximize, Optimistic, 7),
        ('Pminmin=? [ F "goal" ]', Minimize, Pessimistic, None),
        ('Pminmax=?[F<=3"goal"]', Minimize, Optimistic, 3),
    ],
)
def test_prism_query_forms(tmp_path, query, strat, sat, horizon):
    stem = _copy_prism(tmp_path)
    (tmp_path / "m.pctl").write_text(query + "\n")
    spec = read_prism(stem).spec
    assert spec.strategy_mode is strat and spec.satisfaction_mode is sat
    if horizon is None:
        assert spec.prop == InfiniteTimeReachability([2], 1e-6)
    else:
        assert spec.prop == FiniteTimeReachability([2], horizon)


@pytest.mark.parametrize("query", ['P=? [ F<=10 "goal" ]', 'Pmaxmin=? [ G "goal" ]', 'Rmax=? [ F "goal" ]'])
def test_prism_unsupported_query(tmp_path, query):
    stem = _copy_prism(tmp_path)
    (tmp_path / "m.pctl").write_text(query + "\n")
    with pytest.raises(errors.UnsupportedQuery) as ei:
        read_prism(stem)
    assert ei.value.line == 1


def test_prism_writer_rejects_reward(tmp_path):
    p = Problem(three_state_example(), Specification(FiniteTimeReward([1.0, 1.0, 1.0], 0.9, 5)))
    with pytest.raises(errors.UnsupportedQuery):
        write_prism(tmp_path / "m", p)


def _bmdp(tmp_path, body):
    path = tmp_path / "m.bmdp"
    path.write_text(body)
    return path


def test_bmdp_out_of_range_probability(tmp_path):
    path = _bmdp(tmp_path, "2\n1\n1\n1\n0 0 1 1.5 1.5\n")
    with pytest.raises(errors.ParseError) as ei:
        read_bmdp_tool(path)
    assert ei.value.kind == "EntryOutOfRange" and ei.value.line == 5


def test_bmdp_duplicate_transition(tmp_path):
    path = _bmdp(tmp_path, "2\n1\n1\n1\n0 0 1 0.5 1.0\n0 0 1 0.5 1.0\n")
    with pytest.raises(errors.DuplicateTransition) as ei:
        read_bmdp_tool(path)
    assert ei.value.line == 6


def test_bmdp_dangling_index(tmp_path):
    with pytest.raises(errors.DanglingStateIndex):
        read_bmdp_tool(_bmdp(tmp_path, "2\n1\n1\n1\n0 0 5 1.0 1.0\n"))
    with pytest.raises(errors.DanglingStateIndex):
        read_bmdp_tool(_bmdp(tmp_path, "2\n1\n1\n4\n0 0 1 1.0 1.0\n"))


def test_bmdp_tabs_and_terminal_self_loop(tmp_path):
    imdp, terminal = read_bmdp_tool(_bmdp(tmp_path, "2\n1\n1\n1\n0\t0\t1\t1.0\t1.0\n"))
    assert terminal == (1,)
    rows, lo, up = imdp.transition.column(1)
    assert rows.tolist() == [1] and lo.tolist() == [1.0] and up.tolist() == [1.0]


def test_bmdp_infeasible_column_is_model_error(tmp_path):
    with pytest.raises(errors.InfeasibleColumn):
        read_bmdp_tool(_bmdp(tmp_path, "2\n1\n1\n1\n0 0 1 0.2 0.3\n"))
    imdp, _ = read_bmdp_tool(_bmdp(tmp_path, "2\n1\n1\n1\n0 0 1 0.2 0.3\n"), check=False)
    assert imdp.num_cols == 2


def test_native_spec_exclusion_rules():
    base = {"satisfaction_mode": "pessimistic", "strategy_mode": "maximize"}
    bad = [
        {"type": "reachability", "infinite_time": False, "time_horizon": 10, "eps": 1e-6, "reach": [1]},
        {"type": "reachability", "infinite_time": True, "time_horizon": 10, "reach": [1]},
        {"type": "reachability", "infinite_time": False, "reach": [1]},
        {"type": "reachability", "infinite_time": False, "time_horizon": 10, "reach": [0]},
        {"type": "reward", "infinite_time": False, "time_horizon": 10, "reward": [1.0], "discount": 0.9, "reach": [1]},
        {"type": "reward", "infinite_time": True, "eps": 1e-6, "reward": [1.0], "discount": 1.0},
        {"type": "avoid", "infinite_time": False, "time_horizon": 10, "reach": [1]},
    ]
    for prop in bad:
        with pytest.raises(errors.SpecSchemaError):
            spec_from_json({"property": prop, **base})
    with pytest.raises(errors.SpecSchemaError):
        spec_from_json({"property": bad[0] | {"eps": None}, "strategy_mode": "maximize"})
    ok = {"type": "reach-avoid", "infinite_time": True, "eps": 1e-7, "reach": [1], "avoid": [2, 3]}
    spec = spec_from_json({"property": ok, "satisfaction_mode": "optimistic", "strategy_mode": "minimize"})
    assert spec.prop.avoid == (1, 2) and spec.prop.eps == 1e-7


def _native_doc():
    return json.loads((FIXTURES / "paper_model.imdp.json").read_text())


def test_native_schema_violations(tmp_path):
    cases = [
        (lambda d: d["attributes"].pop("format"), errors.SchemaViolation),
        (lambda d: d["attributes"].update(format="dense"), errors.SchemaViolation),
        (lambda d: d["variables"].pop("upper_nzval"), errors.SchemaViolation),
        (lambda d: d["variables"]["upper_rowval"]["data"].__setitem__(0, 9), errors.IndexOutOfBounds),
        (lambda d: d["variables"]["stateptr"]["data"].append(7), errors.IndexOutOfBounds),
        (lambda d: d["variables"]["lower_colptr"]["data"].__setitem__(1, 99), errors.IndexOutOfBounds),
    ]
    for mutate, exc in cases:
        doc = _native_doc()
        mutate(doc)
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(doc))
        with pytest.raises(exc):
            read_native_model(path)


def test_native_truncated_binary(tmp_path):
    raw = (FIXTURES / "paper_model.imdp").read_bytes()
    path = tmp_path / "cut.imdp"
    path.write_bytes(raw[: len(raw) // 2])
    with pytest.raises(errors.SchemaViolation):
        read_native_model(path)


# --- round trips ------------------------------------------------------------------


def _random_problems():
    out = [example_problem()]
    for seed in range(20):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(2, 40))
        dtype = "rational" if seed % 5 == 0 else "f64"
        imdp = random_imdp(n, int(rng.integers(1, 4)), support=int(rng.integers(1, n + 1)), seed=seed,
                           dtype=dtype, vary_actions=seed % 2 == 1)
        reach = sorted({int(x) for x in rng.choice(n, size=max(1, n // 4), replace=False)})
        prop = FiniteTimeReachability(reach, 10) if seed % 3 else InfiniteTimeReachability(reach, 1e-7)
        sat = Pessimistic if seed % 2 else Optimistic
        strat = Maximize if seed % 4 < 2 else Minimize
        out.append(Problem(imdp, Specification(prop, sat, strat)))
    return out


@pytest.mark.parametrize("problem", _random_problems())
def test_round_trip_all_formats(tmp_path, problem):
    dtype = "rational" if problem.imdp.dtype == object else "f64"
    write_prism(tmp_path / "m", problem)
    fp = read_prism(tmp_path / "m", dtype)
    assert fp.imdp == problem.imdp and fp.spec == problem.spec

    write_native(tmp_path / "m.imdp", tmp_path / "m.json", problem)
    fp = read_native(tmp_path / "m.imdp", tmp_path / "m.json")
    assert fp.imdp == problem.imdp and fp.spec == problem.spec

    write_bmdp_tool(tmp_path / "m.bmdp", problem)
    imdp, terminal = read_bmdp_tool(tmp_path / "m.bmdp", dtype)
    assert terminal == problem.spec.prop.reach
    assert imdp.transition == problem.imdp.transition
    assert np.array_equal(imdp.stateptr, problem.imdp.stateptr)
    # values survive every encoding
    ref = value_iteration(problem).values
    for other in (read_prism(tmp_path / "m", dtype).problem, Problem(imdp, problem.spec)):
        diff = np.asarray(value_iteration(other).values - ref, dtype=float)
        assert np.max(np.abs(diff)) <= 1e-9


def test_bmdp_round_trip_is_identity_on_its_own_output(tmp_path):
    write_bmdp_tool(tmp_path / "a.bmdp", example_problem())
    imdp, terminal = read_bmdp_tool(tmp_path / "a.bmdp")
    write_bmdp_tool(tmp_path / "b.bmdp", imdp, terminal_states=terminal)
    assert read_bmdp_tool(tmp_path / "b.bmdp") == (imdp, terminal)
    assert (tmp_path / "a.bmdp").read_bytes() == (tmp_path / "b.bmdp").read_bytes()


def test_reward_and_reach_avoid_round_trip_native(tmp_path):
    imdp = three_state_example()
    for prop in (
        FiniteTimeReward([1.0, 2.0, 3.0], 0.95, 100),
        InfiniteTimeReward([0.5, 0.0, 1.0], 0.9, 1e-8),
        FiniteTimeReachAvoid([2], [1], 7),
    ):
        p = Problem(imdp, Specification(prop, Optimistic, Minimize))
        write_native(tmp_path / "m.imdp.json", tmp_path / "s.json", p)
        fp = read_native(tmp_path / "m.imdp.json", tmp_path / "s.json")
        assert fp.imdp == imdp and fp.spec == p.spec


def test_float_text_is_shortest_round_trip(tmp_path):
    imdp = random_imdp(30, 2, support=5, seed=1)
    write_bmdp_tool(tmp_path / "m.bmdp", imdp, terminal_states=[0])
    back, _ = read_bmdp_tool(tmp_path / "m.bmdp")
    assert back.transition.upper.nzval.tobytes() == imdp.transition.upper.nzval.tobytes()
    line = (tmp_path / "m.bmdp").read_text().splitlines()[5]
    lo, hi = line.split()[3:]
    assert repr(float(lo)) == lo and repr(float(hi)) == hi


def test_rational_values_stay_exact(tmp_path):
    p = Problem(three_state_example("rational"), example_problem().spec)
    write_native(tmp_path / "m.imdp", tmp_path / "s.json", p)
    back = read_native(tmp_path / "m.imdp", tmp_path / "s.json")
    assert back.imdp.dtype == object
    assert back.imdp.transition.upper.nzval[0] == Fraction(1, 2)


def test_native_container_is_compact(tmp_path):
    imdp = random_imdp(10_000, 2, support=5, seed=0)
    assert imdp.num_transitions == 100_000
    write_native(tmp_path / "m.imdp", None, imdp)
    write_bmdp_tool(tmp_path / "m.bmdp", imdp, terminal_states=[0])
    ratio = (tmp_path / "m.imdp").stat().st_size / (tmp_path / "m.bmdp").stat().st_size
    assert ratio <= 0.55


@pytest.mark.parametrize("src, dst", [("prism", "native"), ("native", "bmdp"), ("bmdp", "prism"), ("prism", "bmdp")])
def test_convert_preserves_values(tmp_path, src, dst):
    paths = {
        "prism": (FIXTURES / "paper_model", None),
        "native": (FIXTURES / "paper_model.imdp", FIXTURES / "paper_model.spec.json"),
        "bmdp": (FIXTURES / "paper_model.bmdp", None),
    }
    out = {"prism": (tmp_path / "out", None), "native": (tmp_path / "o.imdp", tmp_path / "o.json"),
           "bmdp": (tmp_path / "o.bmdp", None)}
    fp, diff = convert(src, paths[src][0], dst, out[dst][0], paths[src][1], out[dst][1])
    assert diff == 0.0
    back = read_problem(dst, out[dst][0], out[dst][1])
    assert back.imdp.num_transitions == 13


def test_write_problem_unknown_format(tmp_path):
    with pytest.raises(ValueError):
        write_problem("netcdf", example_problem(), tmp_path / "x")
