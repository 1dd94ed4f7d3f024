"""Riesz distributions: Bernstein-Sato identities, residue ladders, Fourier constants."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from . import kernel_calculus as kc
from . import weyl_algebra as wa
from .kernel_calculus import FORM, SCALAR, SPINOR
from .ratfunc import LAM, N, P, RationalFunction, pochhammer, rf, u
from .report import VerificationReport, stopwatch

K_MAX = 12

# π^{n/2}/Γ(n/2), carried as an opaque unit that every ratio must cancel
UNIT = u(1)


class RieszError(Exception):
    pass


# -- Bernstein-Sato identities -------------------------------------------------

def form_bs_coefficients(mu) -> tuple[RationalFunction, RationalFunction, RationalFunction]:
    """(coefficient of δd, coefficient of dδ, shift factor) for R_p^μ -> R_p^(μ-2)."""
    mu = rf(mu)
    a = (mu + 2 * N - 2 * P) * (mu + 2 * P - 2)
    b = (mu + 2 * P) * (mu + 2 * N - 2 * P - 2)
    f = -(mu - 2) * (mu + N - 2) * (mu + 2 * P) * (mu + 2 * N - 2 * P)
    return a, b, f


def _form_bs_holds(kernel, shifted) -> bool:
    a, b, f = form_bs_coefficients(LAM)
    lhs: dict = {}
    for coeff, chain in ((a, ("DeltaD",)), (b, ("DDelta",))):
        for key, c in kc.specialize(kc.apply_chain(chain, kernel)).items():
            lhs[key] = lhs.get(key, 0) + c * coeff
    lhs = {k: v for k, v in lhs.items() if not rf(v).is_zero()}
    rhs = {k: v * f for k, v in kc.specialize(shifted).items()}
    return lhs.keys() == rhs.keys() and all(rf(lhs[k]) == rhs[k] for k in lhs)


def riesz_bs_check(family: str) -> VerificationReport:
    if family in (SCALAR, SPINOR):
        return kc.specialize_to_riesz(family)
    if family != FORM:
        raise RieszError(f"unknown family {family!r}")
    rep = VerificationReport()
    # riesz_form_kernel specialises to R_p^μ; the shifted atoms give R_p^(μ-2)
    with stopwatch() as t:
        ok = _form_bs_holds(kc.riesz_form_kernel(), kc.riesz_form_kernel(1, -2, 2))
    rep.exact("riesz-bs", "form/R_p", "form Riesz Bernstein-Sato identity", ok, elapsed=t())
    # the generic form kernel specialises to R_p^μ∘(i_nε_n)
    with stopwatch() as t:
        ok = _form_bs_holds(kc.generic_kernel(FORM), kc.generic_kernel(FORM, 1, -2, 2))
    rep.exact("riesz-bs", "form/K_p-variant", "form Riesz identity composed with i_nε_n", ok, elapsed=t())
    return rep


# -- residue ladders -----------------------------------------------------------

@dataclass
class ResidueLadder:
    """Residues at consecutive poles as multiples of UNIT times operator words.

    ``residues[k]`` maps a word label to its coefficient at the k-th pole.
    """

    family: str
    base_constant: RationalFunction
    step_factors: list = field(default_factory=list)
    closed_form_ratio: list = field(default_factory=list)
    residues: list = field(default_factory=list)

    def __post_init__(self):
        if any(rf(s).is_zero() for s in self.step_factors):
            raise RieszError("ladder step factor vanishes identically")


def closed_form_residue(family: str, k: int, corrected: bool = True) -> dict:
    """Residue at the k-th pole as printed, with UNIT standing for π^{n/2}/Γ(n/2)."""
    k4 = 4 ** k * math.factorial(k)
    if family == SCALAR:
        return {("lap", k): 2 * UNIT / (k4 * pochhammer(N / 2, k))}
    if family == SPINOR:
        if corrected:
            return {("dirac", 2 * k + 1): (-1) ** (k + 1) * UNIT / (k4 * pochhammer(N / 2, k + 1))}
        return {("dirac", 2 * k + 1): 2 * UNIT / (k4 * pochhammer(N / 2, k))}
    if family == FORM:
        c = (-1) ** k * 2 * UNIT / (k4 * pochhammer(N / 2, k + 1))
        alpha, beta = N / 2 - P + k, N / 2 - P - k
        if k == 0:
            return {("id", 0): c * (alpha + beta)}
        return {("dd", k): c * alpha, ("Dd", k): c * beta}
    raise RieszError(f"unknown family {family!r}")


def geometric_base(family: str) -> dict:
    """First residue from the sphere volume 2π^{n/2}/Γ(n/2) and spherical averages."""
    if family == SCALAR:
        return {("lap", 0): 2 * UNIT}
    if family == SPINOR:
        # <r^(λ-1) x_j, f> picks up the second scalar residue of x_j f
        return {("dirac", 1): -2 * UNIT / N}
    if family == FORM:
        # the sphere average of i_ωε_ω - ε_ωi_ω on p-forms is (n-2p)/n
        return {("id", 0): 2 * UNIT * (N - 2 * P) / N}
    raise RieszError(f"unknown family {family!r}")


def ladder_step(family: str, k: int, res: dict) -> dict:
    """Residue at pole k+1 from the residue at pole k via the Bernstein-Sato identity."""
    if family == SCALAR:
        lam = -N - 2 * k - 2
        f = (lam + 2) * (lam + N)
        return {("lap", k + 1): c / f for (_, _), c in res.items()}
    if family == SPINOR:
        lam = -N - 2 * k - 3
        f = (lam + 1) * (lam + N + 1)
        # Δ D^(2k+1) = -D^(2k+3)
        return {("dirac", 2 * k + 3): -c / f for (_, _), c in res.items()}
    if family == FORM:
        a, b, f = form_bs_coefficients(-N - 2 * k)
        if k == 0:
            c0 = res[("id", 0)]
            return {("dd", 1): a * c0 / f, ("Dd", 1): b * c0 / f}
        # mixed products vanish since d² = δ² = 0
        return {("dd", k + 1): a * res[("dd", k)] / f, ("Dd", k + 1): b * res[("Dd", k)] / f}
    raise RieszError(f"unknown family {family!r}")


def _same(a: dict, b: dict) -> bool:
    return a.keys() == b.keys() and all(rf(a[k]) == rf(b[k]) for k in a)


def _unit_free(x: RationalFunction) -> bool:
    return "u1" not in rf(x).free_names()


def build_ladder(family: str, k_max: int) -> ResidueLadder:
    res = [geometric_base(family)]
    steps, ratios = [], []
    for k in range(k_max):
        res.append(ladder_step(family, k, res[-1]))
        key = next(iter(res[-1]))
        r = res[-1][key] / res[-2][next(iter(res[-2]))]
        if not _unit_free(r):
            raise RieszError("opaque unit failed to cancel in a ladder ratio")
        steps.append(r)
        cf_next = closed_form_residue(family, k + 1)[key]
        cf_prev = closed_form_residue(family, k)[next(iter(res[-2]))]
        ratios.append(cf_next / cf_prev)
    base = next(iter(res[0].values()))
    return ResidueLadder(family, base, steps, ratios, res)


def form_ansatz_reproduces(k: int) -> bool:
    """[Aδd + Bdδ](α(δd)^k + β(dδ)^k) = Aα(δd)^(k+1) + Bβ(dδ)^(k+1) in the form algebra."""
    d, de = wa.d_full(), wa.delta_full()
    dd, dD = de * d, d * de
    A, B, al, be = u(2), u(3), u(4), u(5)
    lhs = (A * dd + B * dD) * (al * dd ** k + be * dD ** k)
    rhs = A * al * dd ** (k + 1) + B * be * dD ** (k + 1)
    return lhs == rhs


def residue_ladder_check(family: str, k_max: int) -> VerificationReport:
    if k_max > K_MAX:
        raise RieszError(f"k_max {k_max} exceeds {K_MAX}")
    if k_max < 1:
        raise RieszError("k_max must be at least 1")
    rep = VerificationReport()
    with stopwatch() as t:
        ladder = build_ladder(family, k_max)
    res = ladder.residues
    for k in range(k_max):
        ok = _same(res[k + 1], closed_form_residue(family, k + 1))
        rep.exact("residue-ladder", f"{family}/k{k}->k{k + 1}", f"{family} residue at pole {k + 1}",
                  ok, elapsed=t() if k == 0 else 0.0)
    base_ok = _same(res[0], closed_form_residue(family, 0))
    if family == SCALAR:
        rep.exact("residue-ladder", "scalar/base", "scalar residue at the first pole", base_ok)
    else:
        rep.diagnostic("residue-ladder", f"{family}/base", f"{family} closed form at the first pole",
                       detail="matches the sphere-average value" if base_ok
                       else "differs from the sphere-average value")
    if family == SPINOR:
        printed = [closed_form_residue(SPINOR, k, corrected=False) for k in range(k_max + 1)]
        bad = [k for k in range(k_max)
               if not _same({("dirac", 2 * k + 3): next(iter(ladder_step(SPINOR, k, printed[k]).values()))},
                            printed[k + 1])]
        rep.diagnostic("residue-ladder", "spinor/printed-constant", "spinor residue constant as printed",
                       detail=f"inconsistent with the recurrence at steps {bad}" if bad else "consistent")
    if family == FORM:
        ok = (wa.d_full() * wa.d_full()).is_zero() and (wa.delta_full() * wa.delta_full()).is_zero()
        ok = ok and all(form_ansatz_reproduces(k) for k in (1, 2))
        rep.exact("residue-ladder", "form/ansatz", "(δd)/(dδ) residue ansatz is stable", ok)
    return rep


def spinor_printed_ladder_holds(k_max: int) -> bool:
    printed = [closed_form_residue(SPINOR, k, corrected=False) for k in range(k_max + 1)]
    return all(_same(ladder_step(SPINOR, k, printed[k]), printed[k + 1]) for k in range(k_max))


# -- Fourier constants --------------------------------------------------------

def _gamma_ratio(num: float, den: float) -> float:
    """Γ(num)/Γ(den) via log-Gamma with signs; zero when den sits on a pole."""
    if special.rgamma(den) == 0.0:
        return 0.0
    if num <= 0 and float(num).is_integer():
        raise RieszError(f"Γ pole at {num}")
    lg = special.gammaln(num) - special.gammaln(den)
    return float(special.gammasgn(num) * special.gammasgn(den) * math.exp(lg))


class GammaConstant:
    """c_λ = 2^{λ+n} π^{n/2} Γ((λ+n)/2) / Γ(-λ/2) and its spinor and form variants."""

    def __init__(self, n: float):
        self.n = float(n)

    def c(self, lam: float) -> float:
        n = self.n
        return 2.0 ** (lam + n) * math.pi ** (n / 2) * _gamma_ratio((lam + n) / 2, -lam / 2)

    def c_spinor(self, lam: float) -> complex:
        return -1j * self.c(lam + 1) / (lam + 1)

    def c_form(self, lam: float) -> float:
        return (lam - 1) * (lam - 2) * self.c(lam)


def gaussian_moment(lam: float, n: float) -> float:
    """∫ |x|^λ exp(-|x|²/2) dx over R^n, for λ > -n."""
    sphere = 2 * math.pi ** (n / 2) / special.gamma(n / 2)
    return sphere * 2 ** ((lam + n) / 2 - 1) * special.gamma((lam + n) / 2)


def _near_pole(x: float, tol: float = 1e-3) -> bool:
    return x < tol and abs(x - round(x)) < tol


def draw_point(rng: np.random.Generator, gaussian: bool = False) -> tuple[float, float]:
    while True:
        n = float(rng.uniform(2.0, 9.0))
        lam = float(rng.uniform(-n, 0.0)) if gaussian else float(rng.uniform(-n - 4.0, 4.0))
        args = [(lam + n) / 2, -lam / 2, (lam + 1 + n) / 2, -(lam + 1) / 2,
                (1 - lam) / 2, (lam + n - 1) / 2, lam + 1, lam + n - 1]
        if not any(_near_pole(a) for a in args) and min(abs(lam + 1), abs(lam + n - 1)) > 1e-3:
            return lam, n


def fourier_constants_check(samples: int = 100, seed: int = 0, tol: float = 1e-10) -> VerificationReport:
    if samples < 1:
        raise RieszError("samples must be positive")
    rep = VerificationReport(seed=seed)
    rng = np.random.default_rng(seed)
    worst = {"reflection": 0.0, "spinor": 0.0, "gaussian": 0.0}
    with stopwatch() as t:
        for _ in range(samples):
            lam, n = draw_point(rng)
            g = GammaConstant(n)
            target = (2 * math.pi) ** n
            worst["reflection"] = max(worst["reflection"], abs(g.c(lam) * g.c(-lam - n) - target) / target)
            s = g.c_spinor(lam) * g.c_spinor(-lam - n)
            worst["spinor"] = max(worst["spinor"], abs(s + target) / target)
            lam, n = draw_point(rng, gaussian=True)
            g = GammaConstant(n)
            lhs = (2 * math.pi) ** (n / 2) * gaussian_moment(lam, n)
            rhs = g.c(lam) * gaussian_moment(-lam - n, n)
            worst["gaussian"] = max(worst["gaussian"], abs(lhs - rhs) / abs(lhs))
    rep.numeric("fourier", "reflection", "c_λ c_{-λ-n} = (2π)^n", worst["reflection"], tol, elapsed=t())
    rep.numeric("fourier", "spinor-reflection", "spinor constants multiply to -(2π)^n", worst["spinor"], tol)
    rep.numeric("fourier", "gaussian-pairing", "(2π)^{n/2}A(λ) = c_λ A(-λ-n)", worst["gaussian"], tol)
    return rep

