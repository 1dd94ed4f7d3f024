from __future__ import annotations

import math

import pytest

from bsverify import riesz
from bsverify.kernel_calculus import FORM, SCALAR, SPINOR
from bsverify.ratfunc import N, P, pochhammer
from bsverify.riesz import UNIT, GammaConstant, RieszError


@pytest.mark.parametrize("family", [SCALAR, SPINOR, FORM])
def test_riesz_bs_identities(family):
    assert riesz.riesz_bs_check(family).ok


def test_scalar_ladder_ratio():
    ladder = riesz.build_ladder(SCALAR, 4)
    for k, step in enumerate(ladder.step_factors):
        assert step == 1 / (4 * (k + 1) * (N / 2 + k))
        assert step == ladder.closed_form_ratio[k]


def test_scalar_base_matches_sphere_volume():
    assert riesz.geometric_base(SCALAR) == {("lap", 0): 2 * UNIT}
    assert riesz.closed_form_residue(SCALAR, 0) == {("lap", 0): 2 * UNIT}


@pytest.mark.parametrize("family", [SCALAR, SPINOR, FORM])
def test_ladders(family):
    assert riesz.residue_ladder_check(family, 6).ok


def test_spinor_corrected_constant_starts_at_sphere_average():
    base = riesz.closed_form_residue(SPINOR, 0)[("dirac", 1)]
    assert base == -2 * UNIT / N
    assert not riesz.spinor_printed_ladder_holds(4)


def test_form_weights():
    res = riesz.closed_form_residue(FORM, 2)
    c = 2 * UNIT / (16 * 2 * pochhammer(N / 2, 3))
    assert res[("dd", 2)] == c * (N / 2 - P + 2)
    assert res[("Dd", 2)] == c * (N / 2 - P - 2)
    assert riesz.form_ansatz_reproduces(1)


def test_ladder_bounds():
    with pytest.raises(RieszError):
        riesz.residue_ladder_check(SCALAR, 13)
    with pytest.raises(RieszError):
        riesz.residue_ladder_check(SCALAR, 0)


def test_fourier_reflection_at_point():
    g = GammaConstant(3)
    target = (2 * math.pi) ** 3
    assert abs(g.c(-1.3) * g.c(-1.7) - target) / target < 1e-10


def test_fourier_symmetric_point():
    g = GammaConstant(4)
    lam = -2.0
    assert g.c(lam) == g.c(-lam - 4)
    assert abs(g.c(-2.0) ** 2 - (2 * math.pi) ** 4) / (2 * math.pi) ** 4 < 1e-12


def test_form_constant():
    g = GammaConstant(5)
    assert g.c_form(0.3) == pytest.approx((0.3 - 1) * (0.3 - 2) * g.c(0.3), rel=1e-15)


def test_fourier_constants_check():
    rep = riesz.fourier_constants_check(samples=30, seed=3)
    assert rep.ok and len(rep.cases) == 3
