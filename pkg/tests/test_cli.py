import csv
import io
import json
import os
import subprocess
import sys

import pytest

from torsorcount.cli import main, parse_bound, run

BASE = ["--n", "2", "--boundary", "wz", "--l1", "1", "--l2", "1"]


def call(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_count_spot_values(capsys):
    code, out, _ = call(["count", *BASE, "--B", "1"], capsys)
    assert code == 0 and json.loads(out)["count"] == 20
    code, out, _ = call(["count", "--n", "2", "--boundary", "w", "--l1", "1", "--l2", "1",
                         "--B", "1", "--oracle"], capsys)
    d = json.loads(out)
    assert (d["count"], d["raw_tuple_count"], d["naive_count"]) == (32, 64, 32)
    assert "elapsed" not in d


def test_timing_flag(capsys):
    _, out, _ = call(["count", *BASE, "--B", "10", "--timing"], capsys)
    assert "elapsed" in json.loads(out)


@pytest.mark.parametrize("argv", [
    ["count", *BASE],
    ["count", "--n", "2", "--boundary", "w", "--l1", "0.5", "--l2", "1", "--B", "3"],
    ["count", *BASE, "--B", "1.5"],
    ["count", *BASE, "--B", "10", "--frobnicate"],
    ["count", "--n", "1", "--boundary", "w", "--l1", "1", "--l2", "1", "--B", "3"],
    ["compare", *BASE, "--B-list", "100,10"],
    ["fiber", "--n", "2", "--boundary", "w", "--l1", "3", "--l2", "1", "--fiber", "2:4:6", "--B", "9"],
    ["fiber", "--n", "2", "--boundary", "w", "--l1", "3", "--l2", "1", "--B", "9"],
    ["constants", "--n", "2"],
    ["fp-check", "--n", "2", "--p-max", "1000"],
    ["count", *BASE, "--B", "1000", "--oracle", "--work-budget", "5"],
])
def test_usage_errors_exit_2(argv, capsys):
    try:
        code = main(argv)
    except SystemExit as exc:
        code = exc.code
    err = capsys.readouterr().err
    assert code == 2 and err


def test_consistency_failure_exits_1(capsys, monkeypatch):
    import torsorcount.cli as cli
    from torsorcount.counting import CountResult
    monkeypatch.setattr(cli, "naive_count", lambda *a, **k: CountResult(1, 19, 19, 0.0))
    code, out, err = call(["count", *BASE, "--B", "1", "--oracle"], capsys)
    assert code == 1 and out == "" and "consistency" in err


def test_constants(capsys):
    _, out, _ = call(["constants", *BASE], capsys)
    d = json.loads(out)
    assert (d["a"], d["b"], d["alpha"], d["omega_inf"]) == ("1", 2, "1/3", 16.0)
    assert d["c"] == pytest.approx(3.2423, abs=1e-4)
    assert list(d)[:4] == ["n", "boundary", "l1", "l2"]
    _, out, _ = call(["constants", "--n", "2", "--boundary", "w", "--l1", "2", "--l2", "1"], capsys)
    assert json.loads(out)["supported"] is False
    _, out, _ = call(["constants", "--n", "3", "--boundary", "wz", "--l1", "3", "--l2", "1"], capsys)
    assert json.loads(out)["adjoint_type"] == "MOVING"


def test_constants_monte_carlo_and_crosscheck(capsys):
    _, out, _ = call(["constants", "--n", "2", "--boundary", "wz", "--l1", "1", "--l2", "2",
                      "--method", "monte_carlo", "--samples", "200000", "--seed", "5",
                      "--crosscheck"], capsys)
    d = json.loads(out)
    assert d["omega_inf_mc"]["seed"] == 5
    assert abs(d["omega_inf_mc"]["value"] - 96) < 5 * d["omega_inf_mc"]["est_error"]
    assert d["crosscheck"]["passed"]


def test_fp_check(capsys):
    _, out, _ = call(["fp-check", "--n", "2", "--p-max", "7", "--output", "csv"], capsys)
    rows = list(csv.DictReader(io.StringIO(out)))
    assert out.splitlines()[0] == "p,boundary,x_count,x_closed_form,u_count,lambda,omega_p"
    assert sorted({int(r["x_count"]) for r in rows}) == [21, 52, 186, 456]
    assert [int(r["p"]) for r in rows] == sorted(int(r["p"]) for r in rows)


def test_compare_and_fiber(capsys):
    _, out, _ = call(["compare", *BASE, "--B-list", "1e2,1e3,1e4"], capsys)
    rows = json.loads(out)["rows"]
    assert [r["B"] for r in rows] == [100, 1000, 10000]
    _, out, _ = call(["fiber", "--n", "2", "--boundary", "w", "--l1", "3", "--l2", "1",
                      "--fiber", "1:0:1", "--B", "1000", "--output", "csv"], capsys)
    assert out == "fiber,B,exact,predicted,ratio,supported\n1:0:1,1000,2001,2000.0,1.0005,True\n"


def test_parse_bound():
    assert parse_bound("1e6") == 10**6
    assert parse_bound("250") == 250
    for bad in ("1.5", "0", "-3", "abc", "inf"):
        with pytest.raises(Exception):
            parse_bound(bad)


def test_output_identical_across_threads():
    argv = ["compare", *BASE, "--B-list", "1e3,1e4"]
    outs = {run(argv + ["--threads", str(t)])[1] for t in (1, 2, 3)}
    assert len(outs) == 1


def test_module_entry_and_env_threads(tmp_path):
    env = dict(os.environ, TORSORCOUNT_THREADS="2")
    res = subprocess.run([sys.executable, "-m", "torsorcount", "count", *BASE, "--B", "100"],
                         capture_output=True, text=True, env=env, cwd=tmp_path)
    assert res.returncode == 0
    ref = run(["count", *BASE, "--B", "100", "--threads", "1"])[1]
    assert res.stdout == ref
