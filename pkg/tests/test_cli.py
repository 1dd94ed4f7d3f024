from __future__ import annotations

import json
import subprocess
import sys

import pytest

from bsverify import cli
from bsverify import kernel_calculus as kc
from bsverify.report import Case, VerificationReport


def run(capsys, *argv):
    code = cli.main(list(argv))
    return code, capsys.readouterr().out


def test_verify_kernel_passes(capsys):
    code, out = run(capsys, "verify", "--suite", "kernel")
    assert code == 0
    assert out.splitlines()[-1].startswith("OK")


def test_verify_json_schema(capsys):
    code, out = run(capsys, "verify", "--suite", "shift", "--format", "json", "--seed", "5")
    doc = json.loads(out)
    assert code == 0
    assert set(doc) == {"schema", "tool", "version", "seed", "flags", "ok", "counts", "cases"}
    assert doc["seed"] == 5 and doc["ok"] is True
    assert {c["case"].split("/")[0] for c in doc["cases"]} == {"scalar", "spinor", "form"}
    for c in doc["cases"]:
        assert set(c) == {"suite", "case", "status", "error", "detail", "anchor"}
    assert [(c["suite"], c["case"]) for c in doc["cases"]] == sorted((c["suite"], c["case"]) for c in doc["cases"])


def test_verify_json_is_byte_stable(tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for path in (a, b):
        assert cli.main(["verify", "--suite", "symbol", "--json", str(path)]) == 0
    capsys.readouterr()
    assert a.read_bytes() == b.read_bytes()


def test_timings_are_opt_in(capsys):
    _, out = run(capsys, "verify", "--suite", "casimir", "--format", "json", "--timings")
    assert all("elapsed" in c for c in json.loads(out)["cases"])
    _, out = run(capsys, "verify", "--suite", "casimir", "--format", "json")
    assert not any("elapsed" in c for c in json.loads(out)["cases"])


def test_failing_suite_exits_one(capsys, monkeypatch):
    def broken(family):
        rep = VerificationReport()
        rep.add(Case("shift", family, "forced failure", "fail", detail="forced"))
        return rep

    monkeypatch.setattr(kc, "verify_shift_theorem", broken)
    code, out = run(capsys, "verify", "--suite", "shift", "--variant", "scalar")
    assert code == 1
    assert "forced" in out and out.splitlines()[-1].startswith("FAILED")


@pytest.mark.parametrize("argv", [
    ["verify", "--suite", "form", "--order", "9"],
    ["verify", "--suite", "scalar", "--variant", "spinor"],
    ["verify", "--suite", "numeric", "--dim", "7"],
    ["verify", "--suite", "nonsense"],
    ["emit", "--variant", "scalar", "--order", "13"],
    ["rules"],
    ["residue", "--k", "3"],
    ["residue", "--quad-order", "10"],
])
def test_usage_errors_exit_two(argv, capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(argv)
    assert exc.value.code == 2
    capsys.readouterr()


def test_hyperbolic_suite_is_diagnostic_only(capsys):
    code, out = run(capsys, "verify", "--suite", "hyperbolic", "--format", "json")
    doc = json.loads(out)
    assert code == 0 and doc["cases"]
    assert {c["status"] for c in doc["cases"]} == {"diagnostic"}


def test_emit_scalar_order_two(capsys):
    code, out = run(capsys, "emit", "--variant", "scalar", "--order", "2")
    doc = json.loads(out)
    assert code == 0 and doc["variant"] == "scalar" and doc["order"] == 2
    assert doc["terms"] == [
        {"tangential": "1", "normal": "1", "dn": 2, "coeff_num": "2*λ - n + 3", "coeff_den": "1"},
        {"tangential": "Δ'^1", "normal": "1", "dn": 0, "coeff_num": "1", "coeff_den": "1"},
    ]


def test_emit_order_zero_is_identity(capsys):
    _, out = run(capsys, "emit", "--variant", "form", "--order", "0")
    assert len(json.loads(out)["terms"]) == 1


def test_emit_latex_and_text(capsys):
    _, tex = run(capsys, "emit", "--variant", "spinor", "--order", "1", "--format", "latex")
    assert r"\slashed{D}'" in tex and r"\lambda" in tex
    _, text = run(capsys, "emit", "--variant", "scalar", "--order", "2", "--format", "text")
    assert "dn^2" in text


def test_rules_dump(tmp_path, capsys):
    code, out = run(capsys, "rules", "--dump")
    assert code == 0 and len(out.strip().splitlines()) == 60
    path = tmp_path / "rules.txt"
    assert cli.main(["rules", "--dump", "--out", str(path)]) == 0
    assert path.read_text() == out


def test_verify_rules_dump_side_file(tmp_path, capsys):
    path = tmp_path / "rules.txt"
    assert cli.main(["verify", "--suite", "ansatz", "--rules-dump", str(path)]) == 0
    capsys.readouterr()
    assert path.read_text() == kc.rule_table_dump()


def test_residue_standard(capsys):
    code, out = run(capsys, "residue", "--k", "1", "--format", "json")
    doc = json.loads(out)
    assert code == 0 and doc["ok"] and doc["rel_error"] < 1e-5


def test_residue_vanishing(capsys):
    code, out = run(capsys, "residue", "--function", "vanishing")
    assert code == 0 and out.splitlines()[-1] == "OK"


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "bsverify.cli", "rules", "--dump"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0 and len(proc.stdout.splitlines()) == 60
