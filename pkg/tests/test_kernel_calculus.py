from __future__ import annotations

import pytest

from bsverify import kernel_calculus as kc
from bsverify.kernel_calculus import FORM, SCALAR, SPINOR, KernelError, KernelExpr
from bsverify.ratfunc import LAM, N, NU, ZERO, pochhammer, substitute


def atom(family, sign, dl2, dn2, word, coeff=1):
    return KernelExpr.atom(family, sign, dl2, dn2, word, coeff)


def test_generic_kernels():
    assert kc.generic_kernel(SCALAR) == atom(SCALAR, 1, 0, 0, "1")
    # K-slash is stored at (λ-1/2, ν+1/2) with the word x·
    assert kc.generic_kernel(SPINOR, -1) == atom(SPINOR, -1, -1, 1, "X")
    assert kc.generic_kernel(FORM) == atom(FORM, 1, 0, 0, "W1") + atom(FORM, 1, -2, 2, "W2", -2)


def test_scalar_lemma_rules():
    k = kc.generic_kernel(SCALAR)
    assert kc.apply_gen("MulXn", k) == atom(SCALAR, -1, 2, 0, "1")
    assert kc.apply_gen("Dn", k) == atom(SCALAR, -1, -2, 0, "1", LAM + NU - N) + atom(SCALAR, -1, 0, 2, "1", -2 * NU)
    lap = atom(SCALAR, 1, -4, 0, "1", pochhammer(LAM + NU - N - 1, 2))
    lap = lap + atom(SCALAR, 1, -2, 2, "1", -2 * NU * (2 * LAM - N - 2))
    assert kc.apply_gen("Lap", k) == lap


def test_rule_table_shape():
    table = kc.rule_table()
    assert len(table) == 60
    assert {r.provenance for r in table.values()} <= {kc.LEMMA, kc.PROOF_IDENTITY, kc.DERIVED}
    assert all(r.engine_agrees for r in table.values())


def test_rule_dump_is_stable():
    a, b = kc.rule_table_dump(), kc.rule_table_dump()
    assert a == b
    assert len(a.strip().splitlines()) == 60


def test_chain_is_right_to_left():
    k = kc.generic_kernel(SCALAR)
    assert kc.apply_chain(("Dn", "MulXn"), k) == kc.apply_gen("Dn", kc.apply_gen("MulXn", k))


def test_unknown_generator():
    with pytest.raises(KernelError):
        kc.apply_gen("Dirac", kc.generic_kernel(SCALAR))
    with pytest.raises(KernelError):
        kc.generic_kernel("tensor")


def test_scalar_shift_examples():
    lhs, rhs = kc.shift_theorem_sides(SCALAR)
    assert lhs == rhs == atom(SCALAR, -1, -2, 0, "1", (LAM + NU - N) * (NU - LAM + 1))
    lhs, rhs = kc.shift_theorem_sides(SCALAR, second=True)
    assert lhs == atom(SCALAR, -1, 0, 2, "1", 2 * NU * (NU - LAM + 1))
    # on ν = λ-1 the operator annihilates the kernel
    assert lhs == rhs
    assert all(substitute(c, {"nu": LAM - 1}).is_zero() for c in kc.shift_theorem_sides(SCALAR)[0].terms.values())


@pytest.mark.parametrize("family", [SCALAR, SPINOR, FORM])
def test_shift_theorems(family):
    assert kc.verify_shift_theorem(family).ok


@pytest.mark.parametrize("family", [SCALAR, SPINOR, FORM])
def test_ansatz(family):
    rep = kc.ansatz_check(family)
    assert rep.ok
    res = kc.ansatz_solve(family)
    assert res.nullity == (1 if family == FORM else 0)


def test_casimir():
    assert kc.casimir_eigen_check().ok
    ev = kc.casimir_eigenvalue()
    assert substitute(ev, {"nu": ZERO}).is_zero()
    assert substitute(ev, {"nu": N - 1}).is_zero()


@pytest.mark.parametrize("family", [SCALAR, SPINOR])
def test_riesz_specialisation(family):
    assert kc.specialize_to_riesz(family).ok


def test_word_closure():
    assert kc.word_closure(SPINOR) == {"1", "X", "N", "XN"}
    assert kc.word_closure(FORM, kc.riesz_form_kernel()) == set(kc.WORDS[FORM])
