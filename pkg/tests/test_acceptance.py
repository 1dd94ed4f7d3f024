"""Acceptance criteria, one check per criterion.

Run under pytest, or directly with ``python tests/test_acceptance.py`` for a
plain PASS/FAIL listing.
"""
from __future__ import annotations

import json
import sys
import time

import pytest

from bsverify import cli
from bsverify import kernel_calculus as kc
from bsverify import numeric_oracle as no
from bsverify import riesz
from bsverify import symbol_fourier as sf
from bsverify import weyl_algebra as wa
from bsverify.kernel_calculus import FORM, SCALAR, SPINOR
from bsverify.ratfunc import rf_eq
from bsverify.report import VerificationReport

FAMILIES = (SCALAR, SPINOR, FORM)
RESULTS: dict[int, tuple[bool, str]] = {}


def _merge(reports) -> VerificationReport:
    out = VerificationReport()
    for r in reports:
        out.extend(r)
    return out


def _summary(rep: VerificationReport) -> str:
    bad = [f"{c.suite}/{c.case_id}" for c in rep.cases if not c.passed]
    return f"{len(rep.cases)} cases" + (f", failing: {bad[:5]}" if bad else "")


def shift_theorems():
    t0 = time.perf_counter()
    rep = _merge(kc.verify_shift_theorem(f) for f in FAMILIES)
    dt = time.perf_counter() - t0
    return rep.ok and dt < 5, f"{_summary(rep)} in {dt:.2f}s"


def family_comparison():
    t0 = time.perf_counter()
    rep = _merge(wa.compare_families(v, o) for v in FAMILIES for o in range(1, wa.CAPS[v] + 1))
    dt = time.perf_counter() - t0
    orders = {v: wa.CAPS[v] for v in FAMILIES}
    return rep.ok and dt < 60 and orders == {SCALAR: 12, SPINOR: 9, FORM: 7}, f"{_summary(rep)} in {dt:.1f}s"


def recurrences_and_factorizations():
    rec = _merge(wa.recurrence_check(v, o) for v in (SCALAR, FORM) for o in range(0, 5))
    fac = _merge(wa.factorization_check(v, N_) for v in FAMILIES
                 for N_ in range(1 if v == FORM else 0, 4))
    return rec.ok and fac.ok, f"recurrences {_summary(rec)}; factorizations {_summary(fac)}"


def ansatz_systems():
    ok = True
    notes = []
    for family in (SCALAR, SPINOR):
        res = kc.ansatz_solve(family)
        same = res.solution.unique and all(rf_eq(a, b) for a, b in zip(res.solution.particular, res.expected))
        ok &= same
        notes.append(f"{family} {'unique' if res.solution.unique else 'not unique'}")
    res = kc.ansatz_solve(FORM)
    ok &= res.nullity == 1 and kc.in_solution_space(res.solution, res.expected)
    notes.append(f"form nullity {res.nullity}")
    return ok, ", ".join(notes)


def residue_ladders():
    rep = _merge(riesz.residue_ladder_check(f, 10) for f in FAMILIES)
    exact = [c for c in rep.cases if c.status != "diagnostic"]
    printed = riesz.spinor_printed_ladder_holds(10)
    return rep.ok and len(exact) >= 30 and not printed, (
        f"{_summary(rep)}; spinor constant as printed is "
        f"{'consistent' if printed else 'inconsistent'} with the recurrence")


def casimir():
    rep = _merge([kc.casimir_eigen_check(), wa.casimir_operator_identity()])
    return rep.ok, _summary(rep)


def symbol_proofs():
    rep = _merge([sf.clerc_check(v) for v in FAMILIES]
                 + [sf.dn_power_expansion_check(N_) for N_ in range(0, 5)]
                 + [sf.form_ks_composition_check()])
    return rep.ok, _summary(rep)


def numeric_oracle():
    cfg = no.FDConfig()
    t0 = time.perf_counter()
    rep = _merge([no.representation_defects(), no.validate_rules(FAMILIES, cfg), no.bs_identity_numeric(FAMILIES, cfg)])
    dt = time.perf_counter() - t0
    sized = cfg.draws >= 20 and cfg.points >= 5 and cfg.dims == (3, 4, 5) and cfg.rel_tol <= 1e-6
    worst = max(c.error or 0.0 for c in rep.cases if c.status != "diagnostic")
    return rep.ok and sized and dt < 120, f"{_summary(rep)}, worst {worst:.1e}, {dt:.1f}s"


def continuation():
    rep = no.continuation_check(ks=(0, 1), quad_order=80, tol=1e-5)
    errs = [c.error for c in rep.cases if c.error is not None]
    return rep.ok, f"{_summary(rep)}, rel errors {', '.join(f'{e:.1e}' for e in errs)}"


def fourier_constants():
    rep = riesz.fourier_constants_check(samples=100, seed=0, tol=1e-10)
    return rep.ok, _summary(rep)


def hyperbolic_diagnostics():
    matches = wa.hyperbolic_matches()
    rep = wa.hyperbolic_diagnostic()
    only_diag = bool(rep.cases) and all(c.status == "diagnostic" for c in rep.cases)
    return bool(matches) and only_diag, f"{len(matches)} matching convention(s): {matches}"


def reproducibility(tmp_dir=None):
    import tempfile
    from pathlib import Path

    with tempfile.TemporaryDirectory(dir=tmp_dir) as d:
        paths = [Path(d) / "a.json", Path(d) / "b.json"]
        codes = []
        for p in paths:
            argv = ["verify", "--suite", "numeric", "--dim", "3", "--seed", "42", "--format", "json", "--out", str(p)]
            codes.append(cli.main(argv))
        a, b = (p.read_bytes() for p in paths)
    return codes == [0, 0] and a == b and bool(json.loads(a)["cases"]), f"{len(a)} bytes, identical={a == b}"


CRITERIA = {
    1: ("spectral-shift theorems", shift_theorems),
    2: ("family comparison", family_comparison),
    3: ("recurrences and factorizations", recurrences_and_factorizations),
    4: ("ansatz systems", ansatz_systems),
    5: ("residue ladders", residue_ladders),
    6: ("Casimir identity and eigen-equation", casimir),
    7: ("symbol proofs", symbol_proofs),
    8: ("numeric oracle", numeric_oracle),
    9: ("continuation residues", continuation),
    10: ("Fourier constants", fourier_constants),
    11: ("hyperbolic diagnostics", hyperbolic_diagnostics),
    12: ("reproducibility", reproducibility),
}


def _line(num: int) -> str:
    ok, detail = RESULTS[num]
    return f"criterion {num:2d} {CRITERIA[num][0]:<38s} {'PASS' if ok else 'FAIL'}  {detail}"


@pytest.mark.parametrize("num", sorted(CRITERIA), ids=lambda k: f"criterion{k:02d}")
def test_criterion(num):
    RESULTS[num] = CRITERIA[num][1]()
    print(_line(num))
    assert RESULTS[num][0], RESULTS[num][1]


if __name__ == "__main__":
    for num in sorted(CRITERIA):
        RESULTS[num] = CRITERIA[num][1]()
        print(_line(num), flush=True)
    sys.exit(0 if all(ok for ok, _ in RESULTS.values()) else 1)
