from __future__ import annotations

import pytest

from bsverify import weyl_algebra as wa
from bsverify.ratfunc import LAM, N, P, substitute
from bsverify.weyl_algebra import FORM, SCALAR, SPINOR, AlgebraError


def test_heisenberg_relation():
    x, d = wa.xn(SCALAR), wa.dn(SCALAR)
    assert d * x == x * d + 1
    assert wa.commutator(d, x) == wa.OpPoly.scalar(SCALAR, 1)


def test_p_commutes_with_dn_up_to_laplacian():
    p = wa.build_bs_operator(SCALAR, LAM)
    assert p * wa.dn(SCALAR) - wa.dn(SCALAR) * p == -wa.lap_t(SCALAR) - wa.dn(SCALAR) ** 2


def test_spinor_relations():
    dt, e = wa.dirac_t(), wa.en()
    assert dt * dt == -wa.lap_t(SPINOR)
    assert e * e == wa.OpPoly.scalar(SPINOR, -1)
    assert e * dt == -1 * (dt * e)
    # N D' = -D' N, D'^2 = -Δ' and N^2 = -1 give (D'N)^2 = -Δ'
    assert (dt * e) * (dt * e) == -wa.lap_t(SPINOR)


def test_form_relations():
    d, de = wa.d_full(), wa.delta_full()
    assert (d * d).is_zero() and (de * de).is_zero()
    # -Δ = dδ + δd
    assert d * de + de * d == -1 * wa.laplacian(FORM)


def test_scalar_bs_operator():
    x, d = wa.xn(SCALAR), wa.dn(SCALAR)
    expected = x * wa.lap_t(SCALAR) + x * d * d - (2 * LAM - N - 2) * d
    assert wa.build_bs_operator(SCALAR, LAM) == expected


def test_low_order_bs_families():
    d = wa.dn(SCALAR)
    one = wa.RestrictedOp.identity(SCALAR)
    assert wa.compose_bs_family(SCALAR, 1) == one * ((N - 2 * LAM + 2) * d)
    two = (N - 2 * LAM + 4) * ((N - 2 * LAM + 3) * d * d + wa.lap_t(SCALAR))
    assert wa.compose_bs_family(SCALAR, 2) == one * two


def test_closed_families_low_order():
    d = wa.dn(SCALAR)
    one = wa.RestrictedOp.identity(SCALAR)
    assert wa.closed_family(SCALAR, 2, LAM) == one * (wa.lap_t(SCALAR) + (2 * LAM - N + 3) * d * d)
    s_one = wa.RestrictedOp.identity(SPINOR)
    expected = s_one * ((2 * LAM - N + 2) * wa.dn(SPINOR) * wa.en() + wa.dirac_t())
    assert wa.closed_family(SPINOR, 1, LAM) == expected
    f_one = wa.RestrictedOp.identity(FORM)
    expected = f_one * ((P - LAM - 1) * wa.dn(FORM) + wa.d_t() * wa.i_n())
    assert wa.closed_family(FORM, 1, LAM) == expected


def test_prefactors():
    assert wa.family_prefactor(SCALAR, 2) == N - 2 * LAM + 4
    assert wa.family_prefactor(SPINOR, 2) == N - 2 * LAM + 3


@pytest.mark.parametrize("variant,order", [(SCALAR, o) for o in range(1, 7)]
                         + [(SPINOR, o) for o in range(1, 6)] + [(FORM, o) for o in range(1, 5)])
def test_compare_families(variant, order):
    assert wa.compare_families(variant, order).ok


def test_restricted_and_full_routes_agree():
    for variant in wa.VARIANTS:
        assert wa.compose_bs_family(variant, 3) == wa.compose_bs_family(variant, 3, route="full")


def test_order_caps():
    with pytest.raises(AlgebraError):
        wa.compose_bs_family(SCALAR, 13)
    with pytest.raises(AlgebraError):
        wa.compose_bs_family(FORM, 8)


@pytest.mark.parametrize("variant", [SCALAR, FORM])
@pytest.mark.parametrize("order", [0, 1, 2, 3])
def test_recurrences(variant, order):
    assert wa.recurrence_check(variant, order).ok


def test_scalar_recurrence_from_zero():
    lhs, rhs = wa.recurrence_sides(SCALAR, 0)
    assert lhs == wa.closed_family(SCALAR, 1, N - LAM) * (-(2 * LAM - N - 2))
    assert lhs == rhs


@pytest.mark.parametrize("variant,N_", [(SCALAR, 0), (SCALAR, 1), (SCALAR, 2), (SPINOR, 0), (SPINOR, 1),
                                         (SPINOR, 2), (FORM, 1), (FORM, 2)])
def test_factorizations(variant, N_):
    assert wa.factorization_check(variant, N_).ok


def test_scalar_factorization_examples():
    lhs, _ = wa.factorization_sides(SCALAR, "tangential", 1)
    assert lhs == wa.restrict(wa.lap_t(SCALAR))
    lhs, _ = wa.factorization_sides(SCALAR, "ambient", 1)
    assert lhs == wa.restrict(wa.laplacian(SCALAR))


def test_form_factorization_refuses_zero():
    with pytest.raises(AlgebraError):
        wa.factorization_check(FORM, 0)


def test_casimir_and_commutators():
    assert wa.casimir_operator_identity().ok
    assert wa.commutator_check().ok
    assert wa.restricted_p_check().ok


def test_hyperbolic_search():
    matches = wa.hyperbolic_matches()
    assert matches
    rep = wa.hyperbolic_diagnostic()
    assert all(c.status == "diagnostic" for c in rep.cases)
    assert wa.spinor_hyperbolic_holds(full_dirac=False)


def test_records_are_canonical():
    recs = wa.closed_family(SCALAR, 2, LAM).records()
    assert recs == [
        {"tangential": "1", "normal": "1", "dn": 2, "coeff_num": "2*λ - n + 3", "coeff_den": "1"},
        {"tangential": "Δ'^1", "normal": "1", "dn": 0, "coeff_num": "1", "coeff_den": "1"},
    ]


def test_substitution_on_restricted_ops():
    op = wa.closed_family(SCALAR, 2, LAM)
    at = op.substitute({"lam": (N - 1) / 2 - 1})
    assert at == wa.restrict(wa.lap_t(SCALAR))
    assert substitute(2 * LAM - N + 3, {"lam": (N - 1) / 2 - 1}).is_zero()


def test_latex():
    tex = wa.closed_family(SPINOR, 1, LAM).latex()
    assert r"\slashed{D}'" in tex and r"\partial_n" in tex
