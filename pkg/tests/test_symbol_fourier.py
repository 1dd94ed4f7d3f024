from __future__ import annotations

import pytest

from bsverify import symbol_fourier as sf
from bsverify.ratfunc import LAM, N, ONE, P
from bsverify.symbol_fourier import SymbolExpr, SymbolError


def r_pow(coeff=ONE, xn=0, exp=(0, 0, 0), word=()):
    return SymbolExpr.mono(coeff, xn=xn, exp=exp, word=word)


def test_dn_of_radial_power():
    # ∂_n r^(n-2λ) = (n-2λ) ξ_n r^(n-2λ-2)
    assert sf.symbol_dn(r_pow(exp=(0, -2, 1))) == r_pow(N - 2 * LAM, xn=1, exp=(-2, -2, 1))


def test_dn_of_xi_n():
    assert sf.symbol_dn(r_pow(xn=1)) == r_pow()


def test_dn_of_spinor_radial_power():
    # r-slash^(n-2λ) = r^(n-2λ-1) ξ·; the derivative hits both factors
    got = sf.symbol_dn(r_pow(exp=(-1, -2, 1), word=("X",)))
    expected = r_pow(N - 2 * LAM - 1, xn=1, exp=(-3, -2, 1), word=("X",)) + r_pow(exp=(-1, -2, 1), word=("N",))
    assert got == expected


def test_exterior_word_relations():
    ie = r_pow(word=("iX", "eX"))
    ei = r_pow(word=("eX", "iX"))
    assert ie * ie == r_pow(exp=(2, 0, 0), word=("iX", "eX"))
    assert (ie * ei) == SymbolExpr()
    # i_ξε_ξ + ε_ξi_ξ = |ξ|²
    assert ie + ei == r_pow(exp=(2, 0, 0))


def test_clifford_square():
    x = r_pow(word=("X",))
    assert x * x == r_pow(-1, exp=(2, 0, 0))


def test_confluence():
    assert sf.check_confluence()


@pytest.mark.parametrize("variant", ["scalar", "spinor", "form"])
def test_clerc(variant):
    assert sf.clerc_check(variant).ok


def test_clerc_rejects_unknown_variant():
    with pytest.raises(SymbolError):
        sf.clerc_sides("tensor")


@pytest.mark.parametrize("N_", [0, 1, 2, 3])
def test_dn_power_expansion(N_):
    rep = sf.dn_power_expansion_check(N_)
    assert rep.ok


def test_dn_power_printed_prefactor_is_diagnostic():
    rep = sf.dn_power_expansion_check(2)
    diag = [c for c in rep.cases if c.status == "diagnostic"]
    assert diag and diag[0].detail == "does not hold"


def test_dn_power_base_case():
    assert sf.dn_power(1) == r_pow(N - 2 * LAM, xn=1, exp=(-2, -2, 1))


def test_form_ks_composition():
    assert sf.form_ks_composition() == r_pow((LAM - P) * (N - P - LAM))
    assert sf.form_ks_composition_check().ok


def test_cap():
    with pytest.raises(SymbolError):
        sf.dn_power_expansion_check(6)
