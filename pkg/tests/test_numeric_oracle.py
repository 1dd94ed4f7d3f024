from __future__ import annotations

import itertools
import math

import numpy as np
import pytest

from bsverify import kernel_calculus as kc
from bsverify import numeric_oracle as no
from bsverify.kernel_calculus import FORM, SCALAR, SPINOR
from bsverify.numeric_oracle import CliffordRep, DiffOp, ExteriorRep, FDConfig, OracleError, TestFunction

QUICK = FDConfig(draws=3, points=3)


@pytest.mark.parametrize("n", [3, 4, 5])
def test_clifford_relations(n):
    rep = CliffordRep(n)
    assert rep.defect() <= 1e-13
    assert rep.matrices.shape == (n, rep.dim, rep.dim)


@pytest.mark.parametrize("n", [3, 4, 5, 6])
def test_exterior_relations(n):
    rep = ExteriorRep(n)
    assert rep.defect() <= 1e-13
    assert rep.dim == 2 ** n
    assert [len(rep.grade_columns(p)) for p in range(n + 1)] == [math.comb(n, p) for p in range(n + 1)]


def test_representation_bounds():
    with pytest.raises(OracleError):
        CliffordRep(6)
    with pytest.raises(OracleError):
        ExteriorRep(7)


def test_spinor_derived_rule_is_algebraic():
    # N X = -X N - 2 x_n
    rep = CliffordRep(4)
    x = np.random.default_rng(0).normal(size=(5, 4))
    X, Nm = rep.letters(x)["X"], rep.letters(x)["N"]
    defect = np.abs(Nm @ X + X @ Nm + 2 * x[:, -1, None, None] * rep.identity).max()
    assert defect <= 1e-13


def test_kernel_values():
    assert no.eval_kernel(SCALAR, 1, 2.0, 1.0, 3, None, [1.0, 1.0, 1.0]) == pytest.approx(1 / 3, rel=1e-15)
    assert no.eval_kernel(SCALAR, 1, 2.0, 1.0, 3, None, [0.4, -1.2, 0.7]) != 1.0
    # λ+ν = n and ν = 0 give the constant 1
    assert no.eval_kernel(SCALAR, 1, 3.0, 0.0, 3, None, [0.2, 0.5, -0.9]) == pytest.approx(1.0)
    mu = 0.7
    x = np.array([0.3, -0.4, 1.1])
    val = no.eval_kernel(SCALAR, 1, mu / 2 + 3, -mu / 2, 3, None, x)
    assert val == pytest.approx(np.linalg.norm(x) ** mu, rel=1e-14)
    with pytest.raises(OracleError):
        no.eval_kernel(SCALAR, 1, 1.0, 1.0, 3, None, [1.0, 1.0, 0.01])


def test_fd_polynomial_examples():
    n = 3
    f = lambda x: (x[:, 0] ** 2)[:, None, None] + 0j
    d1 = DiffOp.partial(n, 1, 0)
    assert abs(no.fd_apply(d1, f, [[1.0, 0.5, 0.5]])[0, 0, 0] - 2) < 1e-10
    g = lambda x: np.einsum("bj,bj->b", x, x)[:, None, None] + 0j
    assert abs(no.fd_apply(no.op_lap(n, None), g, [[0.3, -0.2, 0.9]])[0, 0, 0] - 6) < 1e-9


def test_fd_exact_on_low_degree_monomials():
    cfg = FDConfig()
    n = 3
    rng = np.random.default_rng(1)
    x = no.draw_points(rng, n, 4, cfg)
    for a in itertools.product(range(3), repeat=n):
        if sum(a) > 4:
            continue
        f = lambda y, a=a: np.prod(y ** np.array(a), axis=1)[:, None, None] + 0j
        for k in range(n):
            exact = a[k] * np.prod(x ** np.array([e - (j == k) for j, e in enumerate(a)]), axis=1)
            got = no.fd_apply(DiffOp.partial(n, 1, k), f, x, cfg)[:, 0, 0]
            assert np.abs(got - exact).max() <= 1e-9


def test_diffop_composition_leibniz():
    n = 3
    x, d = no.op_xn(n, None), no.op_dn(n, None)
    comm = d @ x - x @ d
    assert set(comm.terms) == {(0, (0, 0, 0))}
    assert comm.terms[(0, (0, 0, 0))][0, 0] == 1


def test_dirac_on_spinor_riesz():
    n, mu = 3, 2.5
    rep = CliffordRep(n)
    rng = np.random.default_rng(7)
    x = no.draw_points(rng, n, 5, FDConfig())
    lhs = no.fd_apply(no.op_dirac(n, rep), no.riesz_function(SPINOR, mu, n, rep), x)
    rhs = no.riesz_function(SCALAR, mu - 1, n, None)(x) * rep.identity * -(mu + n - 1)
    assert np.abs(lhs - rhs).max() / np.abs(rhs).max() < 1e-6


@pytest.mark.parametrize("family", [SCALAR, SPINOR, FORM])
def test_validate_rules_quick(family):
    rep = no.validate_rules((family,), QUICK)
    assert rep.ok
    assert len(rep.cases) == sum(1 for key in kc.rule_table() if key[0] == family)


def test_validate_rules_names_worst_rule():
    rep = no.validate_rules((SCALAR,), QUICK)
    assert all("λ=" in c.detail and "x=" in c.detail for c in rep.cases)
    assert {c.case_id for c in rep.cases} == {"scalar/1/Dn", "scalar/1/Lap", "scalar/1/MulAbsX2", "scalar/1/MulXn"}


def test_validate_rule_detects_a_wrong_coefficient():
    rule = kc.rule_table()[SCALAR, "1", "Dn"]
    out = rule.outputs[0]
    bad = type(rule)(**{**rule.__dict__, "outputs": (type(out)(**{**out.__dict__, "coeff": out.coeff + 1}),)
                       + tuple(rule.outputs[1:])})
    err, where = no.validate_rule(bad, 3, QUICK)
    assert err > 1e-3 and "λ=" in where


def test_homogeneity():
    assert no.homogeneity_check(cfg=QUICK).ok


def test_bs_identities_quick():
    rep = no.bs_identity_numeric(cfg=QUICK)
    assert rep.ok
    diag = [c for c in rep.cases if c.status == "diagnostic"]
    assert len(diag) == 1 and diag[0].case_id == "form/printed-dd-sign"


def test_scalar_shift_at_fixed_point():
    n, lam, nu = 3, 1.25, 0.5
    cfg = FDConfig()
    x = no.draw_points(np.random.default_rng(2), n, 5, cfg)
    op = no.bs_operator(SCALAR, lam, n, None)
    lhs = no.fd_apply(op, no.family_kernel(SCALAR, 1, lam, nu, n, None), x, cfg)
    rhs = no.family_kernel(SCALAR, -1, lam - 1, nu, n, None)(x) * (lam + nu - n) * (nu - lam + 1)
    assert np.abs(lhs - rhs).max() / np.abs(rhs).max() < 1e-6


def test_grade_filter():
    cfg = FDConfig(draws=2, points=2, dims=(4,), grades=(2,))
    rep = no.bs_identity_numeric((FORM,), cfg)
    assert rep.ok and all("p=2" in c.detail for c in rep.cases if c.status != "diagnostic")


def test_laplacian_on_test_functions():
    f = TestFunction(3, {(1, 0, 0): 2.0, (0, 0, 0): 1.0})
    x = np.array([[0.3, -0.5, 0.8], [1.0, 0.2, -0.4]])
    h = 1e-4
    approx = sum((f(x + h * e) - 2 * f(x) + f(x - h * e)) / h ** 2 for e in np.eye(3))
    assert np.allclose(f.laplacian()(x), approx, rtol=1e-6)


def test_residue_k0_gaussian():
    res = no.continuation_residue(3, 0, TestFunction.gaussian(3), 80)
    assert res.target == pytest.approx(2 * math.pi ** 1.5 / math.gamma(1.5))
    assert res.rel_error < 1e-5


def test_residue_vanishing_function():
    res = no.continuation_residue(3, 0, TestFunction(3, {(1, 1, 0): 1.0}), 80)
    assert res.target == 0 and res.abs_error < 1e-8


def test_residue_k1():
    res = no.continuation_residue(3, 1, no.standard_test_function(1), 80)
    assert res.rel_error < 1e-5


def test_residue_arguments():
    with pytest.raises(OracleError):
        no.continuation_residue(3, 0, TestFunction.gaussian(3), 20)
    with pytest.raises(OracleError):
        no.continuation_residue(4, 0, TestFunction.gaussian(4), 80)


def test_fd_config_validation():
    with pytest.raises(OracleError):
        FDConfig(step=0)
    with pytest.raises(OracleError):
        FDConfig(dims=(7,))
