from __future__ import annotations

import json
import shutil
import subprocess
import sys

import pytest

from branchalg.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def report(capsys, *argv):
    code, out, err = run(capsys, *argv)
    return code, json.loads(out) if out.strip().startswith("{") else None, err


def test_group_order_oracle(capsys):
    code, rep, err = report(capsys, "group", "order", "--group", "grigorchuk", "--level", "3", "--expect-oracle")
    assert code == 0
    assert rep["result"]["value"] == 128 and rep["status"] == "ok"
    assert rep["config"]["seed"] == 0
    assert "status ok" in err


def test_unknown_group_is_usage_error(capsys):
    code, out, err = run(capsys, "group", "order", "--group", "nosuch", "--level", "3")
    assert code == 2 and out == "" and "nosuch" in err


def test_missing_flag_is_usage_error(capsys):
    assert run(capsys, "group", "order", "--group", "grigorchuk")[0] == 2
    assert run(capsys, "alg", "frobnicate")[0] == 2


def test_group_hausdorff_sequence(capsys):
    code, rep, _ = report(capsys, "group", "hausdorff", "--group", "grigorchuk", "--p", "2", "--levels", "8")
    assert code == 0 and rep["result"]["values"][-1] == "54/85"  # 162/255 in lowest terms


def test_group_hausdorff_csv(capsys):
    code, out, _ = run(capsys, "group", "hausdorff", "--group", "grigorchuk", "--levels", "4", "--format", "csv", "--quiet")
    assert code == 0
    assert out.splitlines() == ["index,value", "1,1", "2,1", "3,1", "4,4/5"]


def test_csv_refused_for_scalar_commands(capsys):
    assert run(capsys, "group", "order", "--group", "grigorchuk", "--level", "2", "--format", "csv")[0] == 2


def test_expect_mismatch_exit_one(capsys):
    code, rep, _ = report(capsys, "group", "order", "--group", "grigorchuk", "--level", "3", "--expect", "64")
    assert code == 1 and rep["status"] == "mismatch"


def test_big_orders_are_strings(capsys):
    _, rep, _ = report(capsys, "group", "order", "--group", "grigorchuk", "--level", "7", "--quiet")
    assert rep["result"]["value"] == str(2**82)


def test_element_order_and_transitive(capsys):
    _, rep, _ = report(capsys, "group", "element-order", "--group", "grigorchuk", "--word", "ab", "--level", "5")
    assert rep["result"]["value"] == 16
    _, rep, _ = report(capsys, "group", "transitive", "--group", "odometer", "--level", "6")
    assert rep["result"]["value"] is True


def test_group_from_file(capsys, tmp_path):
    path = tmp_path / "odo.txt"
    path.write_text("alphabet 2\nt plain (1,2) 1 t\n")
    code, rep, _ = report(capsys, "group", "order", "--group", str(path), "--level", "5")
    assert code == 0 and rep["result"]["value"] == 32


def test_alg_dim_oracle(capsys):
    code, rep, _ = report(capsys, "alg", "dim", "--group", "grigorchuk", "--field", "gf2", "--level", "4", "--expect-oracle")
    assert code == 0 and rep["result"]["value"] == 78


def test_alg_dim_level2_oracle_mismatch(capsys):
    code, rep, _ = report(capsys, "alg", "dim", "--field", "gf2", "--level", "2", "--expect-oracle")
    assert code == 1 and rep["comparisons"][0] == {"expected": 8, "actual": 6, "match": False}


def test_alg_resource_limit_exit_three(capsys):
    code, rep, _ = report(capsys, "alg", "filtration", "--field", "gf3", "--gens", "group", "--dmax", "16", "--level-cap", "4")
    assert code == 3 and rep["status"] == "resource_limit" and rep["partial"]["stable"] is False


def test_alg_dim_over_cap_exit_three(capsys):
    code, rep, _ = report(capsys, "alg", "dim", "--field", "gf2", "--level", "9")
    assert code == 3 and "partial" in rep


def test_alg_ideal_preset(capsys):
    code, rep, _ = report(capsys, "alg", "ideal", "--preset", "branching-char2", "--report", "codim,k2,m2k", "--expect", "6,12,8")
    assert code == 0 and rep["result"]["stable"] is True


def test_alg_ideal_preset_field_mismatch(capsys):
    assert run(capsys, "alg", "ideal", "--preset", "branching-charne2", "--field", "gf2")[0] == 2
    assert run(capsys, "alg", "ideal", "--preset", "nope")[0] == 2


def test_alg_nil_monomial(capsys):
    code, rep, _ = report(capsys, "alg", "nil", "--element", "A*B", "--max-power", "16", "--field", "gf2", "--levels", "7")
    assert code == 0 and rep["result"]["value"] <= 8


def test_alg_filtration_oracle(capsys):
    code, rep, _ = report(capsys, "alg", "filtration", "--field", "gf2", "--dmax", "12", "--expect-oracle", "--quiet")
    assert code == 0 and rep["result"]["values"][:6] == [1, 3, 4, 5, 6, 8]


def test_alg_check_product(capsys):
    code, rep, _ = report(capsys, "alg", "check-product", "--lhs", "(1+A+B+A*D)*(1+B)*(1+A*C)*(1+A*C*A*C)*(1+A)", "--rhs", "1", "--levels", "8")
    assert code == 0 and rep["result"]["holds"]
    code, rep, _ = report(capsys, "alg", "check-product", "--lhs", "AB", "--rhs", "BA", "--levels", "4")
    assert code == 1 and rep["result"]["first_mismatch"] == 2


def test_alg_distinct_powers(capsys):
    code, rep, _ = report(capsys, "alg", "distinct-powers", "--element", "1+A+B+A*D", "--k-max", "16")
    assert code == 0 and rep["result"]["found"] and rep["result"]["last_power_nonzero"]


def test_alg_hausdorff(capsys):
    code, rep, _ = report(capsys, "alg", "hausdorff", "--field", "gf3", "--levels", "3", "--expect-oracle")
    assert code == 0 and rep["result"]["values"] == [1, 1, 1] and rep["limit"] == 1


def test_present_presets(capsys):
    code, rep, _ = report(capsys, "present", "check", "--preset", "grigorchuk-alg-char2", "--depth", "4", "--level-max", "8")
    assert code == 0 and rep["result"]["passed"]
    code, rep, _ = report(capsys, "present", "check", "--preset", "grigorchuk-group", "--depth", "3", "--level-max", "9", "--jobs", "3")
    assert code == 0 and rep["result"]["checked"] == 13


def test_present_relator_failure(capsys):
    code, rep, _ = report(capsys, "present", "check", "--relator", "A*B", "--field", "gf2")
    assert code == 1 and rep["result"]["violations"][0]["relator"] == "AB"


def test_present_relator_needs_field(capsys):
    assert run(capsys, "present", "check", "--relator", "A*B")[0] == 2


def test_bad_jobs(capsys):
    assert run(capsys, "group", "order", "--group", "grigorchuk", "--level", "2", "--jobs", "0")[0] == 2


def test_output_file_and_byte_stability(capsys, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    args = ["alg", "filtration", "--field", "gf2", "--dmax", "8", "--seed", "7", "--quiet"]
    assert main(args + ["--output", str(a)]) == 0
    assert main(args + ["--output", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert json.loads(a.read_text())["config"]["seed"] == 7
    assert capsys.readouterr().out == ""


@pytest.mark.skipif(shutil.which("branchalg") is None, reason="console script not installed")
def test_console_script():
    p = subprocess.run(["branchalg", "group", "order", "--group", "odometer", "--level", "4", "--quiet"],
                       capture_output=True, text=True, check=False)
    assert p.returncode == 0 and json.loads(p.stdout)["result"]["value"] == 16


def test_module_entry_point():
    p = subprocess.run([sys.executable, "-m", "branchalg", "--version"], capture_output=True, text=True, check=False)
    assert p.returncode == 0 and "branchalg" in p.stdout
