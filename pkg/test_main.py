#!/usr/bin/env python3
"""
CLI 테스트 (simulate / exact / verify / compare, 종료 코드)
"""

import csv
import json

import pytest

from exact_engine import m_of_c
from main import EXIT_FAILURE, EXIT_OK, EXIT_USAGE, main


def _rows(path):
    with open(path, encoding="utf-8") as f:
        return [row for row in csv.reader(f) if row and not row[0].startswith("#")]


# === simulate ===

def test_simulate_single_record_from_optimum(tmp_path, capsys):
    output = tmp_path / "one.csv"
    code = main(["simulate", "--n", "1", "--mutation", "oneflip", "--initial", "1",
                 "--replicates", "1", "--output", str(output)])
    assert code == EXIT_OK
    rows = _rows(output)
    assert rows[0] == ["replicate", "hitting_time", "initial_level", "capped"]
    assert rows[1] == ["0", "0", "1", "0"]
    sidecar = json.loads((tmp_path / "one.plan.json").read_text(encoding="utf-8"))
    assert sidecar["R"] == 1 and sidecar["initial"] == "1"
    assert "T = 0" in capsys.readouterr().out


def test_simulate_is_deterministic(tmp_path):
    args = ["simulate", "--n", "20", "--mutation", "bernoulli", "--c", "1", "--rule", "nonstrict",
            "--replicates", "300", "--seed", "42", "--workers", "1"]
    first, second = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(args + ["--output", str(first)]) == EXIT_OK
    assert main(args + ["--output", str(second), "--workers", "2"]) == EXIT_OK
    assert first.read_bytes() == second.read_bytes()


def test_simulate_json_format(tmp_path):
    output = tmp_path / "s.json"
    assert main(["simulate", "--n", "5", "--replicates", "10", "--format", "json",
                 "--output", str(output)]) == EXIT_OK
    data = json.loads(output.read_text(encoding="utf-8"))
    assert data["plan"]["n"] == 5
    assert len(data["records"]) == 10


def test_simulate_csv_to_json_named_path_keeps_replicates(tmp_path, capsys):
    output = tmp_path / "run.json"
    assert main(["simulate", "--n", "4", "--replicates", "3", "--output", str(output)]) == EXIT_OK
    rows = _rows(output)
    assert rows[0] == ["replicate", "hitting_time", "initial_level", "capped"]
    assert len(rows) == 4
    assert json.loads((tmp_path / "run.plan.json").read_text(encoding="utf-8"))["n"] == 4
    saved = [line for line in capsys.readouterr().out.splitlines() if "저장" in line]
    assert len(set(saved)) == 2


def test_simulate_bernoulli_requires_c():
    with pytest.raises(SystemExit) as excinfo:
        main(["simulate", "--n", "10", "--mutation", "bernoulli"])
    assert excinfo.value.code == EXIT_USAGE


def test_simulate_c_not_allowed_for_oneflip():
    with pytest.raises(SystemExit) as excinfo:
        main(["simulate", "--n", "10", "--c", "1"])
    assert excinfo.value.code == EXIT_USAGE


def test_simulate_c_above_n():
    with pytest.raises(SystemExit) as excinfo:
        main(["exact", "--n", "3", "--mutation", "bernoulli", "--c", "5"])
    assert excinfo.value.code == EXIT_USAGE


def test_simulate_bad_initial_is_usage_error(tmp_path):
    code = main(["simulate", "--n", "3", "--initial", "10x", "--replicates", "1",
                 "--output", str(tmp_path / "x.csv")])
    assert code == EXIT_USAGE


# === exact ===

def test_exact_oneflip_mean(tmp_path, capsys):
    output = tmp_path / "pmf.csv"
    assert main(["exact", "--n", "10", "--mutation", "oneflip", "--output", str(output)]) == EXIT_OK
    out = capsys.readouterr().out
    assert "평균 E(T): 50 " in out
    lines = output.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "t,mass"
    assert lines[-1].startswith("# tail=")


def test_exact_bernoulli_mean(tmp_path, capsys):
    output = tmp_path / "pmf.json"
    assert main(["exact", "--n", "2", "--mutation", "bernoulli", "--c", "1",
                 "--format", "json", "--output", str(output)]) == EXIT_OK
    assert "평균 E(T): 3 " in capsys.readouterr().out
    data = json.loads(output.read_text(encoding="utf-8"))
    assert data["t_max"] == len(data["mass"]) - 1


def test_exact_beyond_engine_limit():
    assert main(["exact", "--n", "10000", "--mutation", "oneflip"]) == EXIT_USAGE


# === verify ===

def test_verify_oracle(tmp_path):
    output = tmp_path / "oracle.json"
    assert main(["verify", "--suite", "oracle", "--n", "5", "--output", str(output)]) == EXIT_OK
    bundle = json.loads(output.read_text(encoding="utf-8"))
    assert bundle["suite"] == "oracle"
    assert bundle["pass"] is True
    assert "runtime_ms" in bundle
    assert all(report["pass"] for report in bundle["reports"])


@pytest.mark.parametrize("args", [
    ["--suite", "lemmas", "--replicates", "20"],
    ["--suite", "clt", "--n", "1", "--replicates", "50"],
])
def test_verify_writes_bundle_on_small_inputs(tmp_path, args):
    output = tmp_path / "bundle.json"
    code = main(["verify", *args, "--workers", "1", "--output", str(output)])
    assert code in (EXIT_OK, EXIT_FAILURE)
    bundle = json.loads(output.read_text(encoding="utf-8"))
    assert bundle["reports"]
    assert bundle["pass"] is (code == EXIT_OK)


# === compare ===

def test_compare_ordering(tmp_path):
    output = tmp_path / "cmp.csv"
    assert main(["compare", "--n", "100", "--output", str(output)]) == EXIT_OK
    rows = _rows(output)
    header, body = rows[0], rows[1:]
    assert len(body) == 5
    table = [dict(zip(header, row)) for row in body]
    for row in table:
        assert float(row["bernoulli_mean"]) > 5000
        assert float(row["oneflip_ratio"]) == 1.0
        assert float(row["m_c"]) == pytest.approx(m_of_c(float(row["c"])), rel=1e-12)


def test_compare_fails_when_ordering_breaks(tmp_path):
    # n=1, c=1: 두 평균 모두 1/2
    args = ["compare", "--n", "1", "--c-grid", "1", "--output", str(tmp_path / "c.csv")]
    assert main(args + ["--n0", "1"]) == EXIT_FAILURE
    assert main(args) == EXIT_OK
