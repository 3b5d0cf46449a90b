import csv
import json
import subprocess
import sys
from pathlib import Path

import pytest

from rimdp.cli import main
from rimdp.generators import random_imdp

FIXTURES = Path(__file__).parent / "fixtures"
PRISM = ["--format", "prism", "--model", str(FIXTURES / "paper_model")]
NATIVE = ["--format", "native", "--model", str(FIXTURES / "paper_model.imdp"),
          "--spec", str(FIXTURES / "paper_model.spec.json")]
BMDP = ["--format", "bmdp", "--model", str(FIXTURES / "paper_model.bmdp")]


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_verify_text_and_json_carry_same_numbers(capsys):
    code, text, _ = run(capsys, "verify", *PRISM, "--no-timing")
    assert code == 0
    code, js, _ = run(capsys, "verify", *PRISM, "--no-timing", "--output", "json")
    doc = json.loads(js)
    lines = text.splitlines()
    values = lines[lines.index("values:") + 1 :]
    assert [v.split()[1] for v in values] == doc["values"]
    assert doc["iterations"] == 100 and f"max residual: {doc['max_residual']}" in lines
    assert doc["values"][2] == "1.0"
    assert set(doc) >= {"num_states", "specification", "iterations", "max_residual", "summary", "values"}


def test_verify_summary_csv(capsys):
    code, out, _ = run(capsys, "verify", *NATIVE, "--summary", "--output", "csv", "--no-timing")
    rows = list(csv.reader(out.splitlines()))
    assert code == 0 and rows[0] == ["statistic", "value"]
    assert [r[0] for r in rows[1:]] == ["min", "mean", "max"]


def test_threads_byte_identical(capsys, tmp_path):
    from rimdp.io.bmdp import write_bmdp_tool

    path = tmp_path / "r.bmdp"
    write_bmdp_tool(path, random_imdp(3000, 2, support=6, seed=3), terminal_states=[0, 5, 9])
    argv = ["verify", "--format", "bmdp", "--model", str(path), "--horizon", "30", "--no-timing"]
    a = run(capsys, *argv, "--threads", "1")
    b = run(capsys, *argv, "--threads", "8")
    assert a[0] == 0 and a[1] == b[1]


def test_bmdp_needs_property(capsys):
    code, _, err = run(capsys, "verify", *BMDP)
    assert code == 2 and "--horizon" in err
    code, out, _ = run(capsys, "verify", *BMDP, "--eps", "1e-6", "--strategy", "minimize", "--no-timing")
    assert code == 0 and "iterations:" in out


def test_exit_codes(capsys, tmp_path):
    code, _, err = run(capsys, "verify", "--format", "prism", "--model", str(tmp_path / "nope"))
    assert code == 2 and "nope.sta" in err
    bad = tmp_path / "bad.bmdp"
    bad.write_text("2\n1\n1\n1\n0 0 1 0.2 0.3\n")
    code, _, err = run(capsys, "verify", "--format", "bmdp", "--model", str(bad), "--horizon", "5")
    assert code == 3
    code, _, _ = run(capsys, "verify", *PRISM, "--eps", "1e-14", "--max-iter", "3")
    assert code == 4


def test_synthesize_writes_policy_csv(capsys, tmp_path):
    pol = tmp_path / "p.csv"
    code, _, _ = run(capsys, "synthesize", *PRISM, "--horizon", "4", "--policy", str(pol), "--no-timing")
    rows = list(csv.reader(pol.read_text().splitlines()))
    assert code == 0
    assert rows[0] == ["state", "t0", "t1", "t2", "t3"]
    assert rows[1][0] == "0" and rows[3] == ["2", "sink", "sink", "sink", "sink"]
    assert rows[1][4] == "a1" and rows[2][4] == "a2"
    code, _, _ = run(capsys, "synthesize", *PRISM, "--eps", "1e-6", "--policy", str(pol))
    rows = list(csv.reader(pol.read_text().splitlines()))
    assert rows[0] == ["state", "action"] and len(rows) == 4


def test_convert_and_validate(capsys, tmp_path):
    code, out, _ = run(capsys, "convert", "--from", "prism", "--to", "native", "--model", str(FIXTURES / "paper_model"),
                       "--out-model", str(tmp_path / "m.imdp"), "--out-spec", str(tmp_path / "m.json"))
    assert code == 0 and "difference 0.000e+00" in out
    code, out, _ = run(capsys, "validate", "--format", "native", "--model", str(tmp_path / "m.imdp"))
    assert code == 0 and out.startswith("ok: 3 states")
    bad = tmp_path / "bad.bmdp"
    bad.write_text("2\n1\n1\n1\n0 0 1 0.2 0.3\n")
    code, out, _ = run(capsys, "validate", "--format", "bmdp", "--model", str(bad))
    assert code == 3 and out.startswith("InfeasibleColumn")


def test_bench_csv_is_reproducible(capsys):
    argv = ["bench", "--states", "500", "--threads", "1,2", "--horizon", "20", "--output", "csv"]
    _, a, _ = run(capsys, *argv)
    _, b, _ = run(capsys, *argv)
    rows_a = list(csv.DictReader(a.splitlines()))
    rows_b = list(csv.DictReader(b.splitlines()))
    assert [r["threads"] for r in rows_a] == ["1", "2"]
    assert all(ra["transitions"] == rb["transitions"] == "10000" for ra, rb in zip(rows_a, rows_b))
    assert float(rows_a[0]["speedup"]) == 1.0


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "rimdp", "verify", *PRISM, "--summary", "--no-timing"],
                         capture_output=True, text=True, check=False)
    assert res.returncode == 0
    assert "max: 1.0" in res.stdout


@pytest.mark.parametrize("argv", [["verify"], ["bench", "--threads", "x"], ["bench", "--threads", "0"]])
def test_usage_errors(argv, capsys):
    with pytest.raises(SystemExit) as ei:
        main(argv)
    assert ei.value.code == 2
