"""Floating-point cross-checks in fixed dimensions.

Kernels are evaluated from their defining formulas, Clifford and exterior
multiplications by explicit matrices, and derivatives by central differences
with Richardson extrapolation.  Nothing here reads the symbolic engine except
the rule table itself, whose right-hand sides are what gets tested.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy import special

from . import kernel_calculus as kc
from .kernel_calculus import FORM, SCALAR, SPINOR, WORD_LETTERS
from .ratfunc import NAMES
from .report import VerificationReport, stopwatch


class OracleError(Exception):
    pass


@dataclass
class FDConfig:
    step: float = 1e-3
    richardson_levels: int = 3
    min_xn: float = 0.3
    radius: float = 2.0
    rel_tol: float = 1e-6
    seed: int = 0
    draws: int = 20
    points: int = 5
    dims: tuple = (3, 4, 5)
    grades: tuple | None = None

    def __post_init__(self):
        if self.step <= 0 or self.rel_tol <= 0 or self.min_xn <= 0:
            raise OracleError("step, tolerance and min_xn must be positive")
        if self.richardson_levels < 1:
            raise OracleError("at least one Richardson level is needed")
        if not self.dims or any(not 3 <= n <= 5 for n in self.dims):
            raise OracleError("dimensions must lie in 3..5")


# -- matrix representations ------------------------------------------------

_PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def _kron(*ms):
    out = np.eye(1, dtype=complex)
    for m in ms:
        out = np.kron(out, m)
    return out


class CliffordRep:
    """e_1..e_n with e_j e_k + e_k e_j = -2δ_jk."""

    def __init__(self, n: int):
        if not 3 <= n <= 5:
            raise OracleError("Clifford representations are built for 3 <= n <= 5")
        self.n = n
        m = n // 2
        gammas = []
        for k in range(m):
            for pauli in ("X", "Y"):
                factors = [_PAULI["Z"]] * k + [_PAULI[pauli]] + [_PAULI["I"]] * (m - k - 1)
                gammas.append(_kron(*factors))
        if n % 2:
            gammas.append(_kron(*([_PAULI["Z"]] * m)))
        # hermitian gammas square to +1; the factor i flips the signature
        self.matrices = np.array([1j * g for g in gammas])
        self.dim = 2 ** m
        self.identity = np.eye(self.dim, dtype=complex)

    def defect(self) -> float:
        worst = 0.0
        for j in range(self.n):
            for k in range(self.n):
                a, b = self.matrices[j], self.matrices[k]
                target = -2.0 * (j == k) * self.identity
                worst = max(worst, float(np.abs(a @ b + b @ a - target).max()))
        return worst

    def vec(self, x: np.ndarray) -> np.ndarray:
        """Clifford multiplication by x, batched over the leading axis."""
        return np.einsum("bj,jkl->bkl", x, self.matrices)

    def letters(self, x: np.ndarray) -> dict:
        b = x.shape[0]
        return {"X": self.vec(x), "N": np.broadcast_to(self.matrices[-1], (b, self.dim, self.dim))}


class ExteriorRep:
    """Exterior algebra of R^n with basis ordered by grade."""

    def __init__(self, n: int):
        if not 3 <= n <= 6:
            raise OracleError("exterior representations are built for 3 <= n <= 6")
        self.n = n
        subsets = sorted((s for r in range(n + 1) for s in itertools.combinations(range(n), r)),
                         key=lambda s: (len(s), s))
        index = {s: i for i, s in enumerate(subsets)}
        self.dim = len(subsets)
        self.grades = np.array([len(s) for s in subsets])
        self.identity = np.eye(self.dim, dtype=complex)
        self.eps = np.zeros((n, self.dim, self.dim), dtype=complex)
        self.ins = np.zeros((n, self.dim, self.dim), dtype=complex)
        for s in subsets:
            for j in range(n):
                sign = (-1) ** sum(1 for t in s if t < j)
                if j in s:
                    self.ins[j, index[tuple(t for t in s if t != j)], index[s]] = sign
                else:
                    self.eps[j, index[tuple(sorted(s + (j,)))], index[s]] = sign

    def eps_v(self, x):
        return np.einsum("bj,jkl->bkl", x, self.eps)

    def ins_v(self, x):
        return np.einsum("bj,jkl->bkl", x, self.ins)

    def grade_columns(self, p: int) -> np.ndarray:
        return np.nonzero(self.grades == p)[0]

    def defect(self, samples: int = 5, seed: int = 0) -> float:
        rng = np.random.default_rng(seed)
        worst = 0.0
        for _ in range(samples):
            v = rng.normal(size=(1, self.n))
            e, i = self.eps_v(v)[0], self.ins_v(v)[0]
            worst = max(worst, float(np.abs(i @ e + e @ i - (v @ v.T)[0, 0] * self.identity).max()),
                        float(np.abs(e @ e).max()), float(np.abs(i @ i).max()))
        return worst

    def letters(self, x: np.ndarray) -> dict:
        b = x.shape[0]
        en = np.zeros((1, self.n))
        en[0, -1] = 1.0

        def const(m):
            return np.broadcast_to(m, (b, self.dim, self.dim))
        return {"eX": self.eps_v(x), "iX": self.ins_v(x),
                "eN": const(self.eps[-1]), "iN": const(self.ins[-1])}


@lru_cache(maxsize=None)
def representation(family: str, n: int):
    if family == SCALAR:
        return None
    if family == SPINOR:
        return CliffordRep(n)
    if family == FORM:
        return ExteriorRep(n)
    raise OracleError(f"unknown family {family!r}")


def _dim(rep) -> int:
    return 1 if rep is None else rep.dim


# -- kernels ---------------------------------------------------------------

def scalar_kernel(sign: int, lam: float, nu: float, n: int, x: np.ndarray) -> np.ndarray:
    """K^±_{λ,ν}(x) = (sgn x_n)^{0|1} |x_n|^{λ+ν-n} |x|^{-2ν}, batched."""
    xn = x[:, -1]
    val = np.abs(xn) ** (lam + nu - n) * np.einsum("bj,bj->b", x, x) ** (-nu)
    return val if sign > 0 else np.sign(xn) * val


def word_matrix(word: str, rep, x: np.ndarray) -> np.ndarray:
    b = x.shape[0]
    d = _dim(rep)
    out = np.broadcast_to(np.eye(d, dtype=complex), (b, d, d))
    letters = WORD_LETTERS[word]
    if letters:
        table = rep.letters(x)
        for letter in letters:
            out = out @ table[letter]
    return out


def atom_function(sign, lam, nu, n, word, rep):
    def f(x):
        return scalar_kernel(sign, lam, nu, n, x)[:, None, None] * word_matrix(word, rep, x)
    return f


def eval_kernel(family: str, sign: int, lam: float, nu: float, n: int, p, x, rep=None, cfg: FDConfig | None = None):
    """Family kernel at one point x; a scalar for the scalar family, a matrix otherwise."""
    cfg = cfg or FDConfig()
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if np.any(np.abs(x[:, -1]) < cfg.min_xn):
        raise OracleError("x_n below the admissible minimum")
    rep = rep if rep is not None else representation(family, n)
    val = family_kernel(family, sign, lam, nu, n, rep)(x)
    return val[0, 0, 0].real if family == SCALAR else val[0]


def family_kernel(family, sign, lam, nu, n, rep):
    if family == SCALAR:
        return atom_function(sign, lam, nu, n, "1", rep)
    if family == SPINOR:
        # K-slash_{λ,ν} = K_{λ-1/2,ν+1/2} x·
        return atom_function(sign, lam - 0.5, nu + 0.5, n, "X", rep)
    if family == FORM:
        # K_{λ-1,ν+1}(i_xε_x - ε_xi_x) i_nε_n
        def f(x):
            letters = rep.letters(x)
            mid = letters["iX"] @ letters["eX"] - letters["eX"] @ letters["iX"]
            k = scalar_kernel(sign, lam - 1, nu + 1, n, x)
            return k[:, None, None] * (mid @ letters["iN"] @ letters["eN"])
        return f
    raise OracleError(f"unknown family {family!r}")


def riesz_function(family, mu, n, rep):
    """r^μ, r-slash^μ = r^(μ-1) x·, or R_p^μ = r^(μ-2)(i_xε_x - ε_xi_x)."""
    def radial(x, e):
        return np.einsum("bj,bj->b", x, x) ** (e / 2)

    if family == SCALAR:
        return lambda x: radial(x, mu)[:, None, None] * np.ones((1, 1, 1), dtype=complex)
    if family == SPINOR:
        return lambda x: radial(x, mu - 1)[:, None, None] * rep.vec(x)
    if family == FORM:
        def f(x):
            letters = rep.letters(x)
            return radial(x, mu - 2)[:, None, None] * (letters["iX"] @ letters["eX"] - letters["eX"] @ letters["iX"])
        return f
    raise OracleError(f"unknown family {family!r}")


# -- differential operators with numeric matrix coefficients -----------------

class DiffOp:
    """Σ x_n^i M ∂^α with constant matrices M; α is a multi-index tuple."""

    def __init__(self, n: int, dim: int, terms=None):
        self.n, self.dim = n, dim
        self.terms: dict = {}
        for key, m in (terms or {}).items():
            self._add(key, m)

    def _add(self, key, m):
        m = np.asarray(m, dtype=complex)
        if key in self.terms:
            self.terms[key] = self.terms[key] + m
        else:
            self.terms[key] = m

    def _zero_alpha(self):
        return (0,) * self.n

    @classmethod
    def const(cls, n, m):
        m = np.asarray(m, dtype=complex)
        return cls(n, m.shape[0], {(0, (0,) * n): m})

    @classmethod
    def partial(cls, n, dim, k):
        alpha = tuple(1 if j == k else 0 for j in range(n))
        return cls(n, dim, {(0, alpha): np.eye(dim)})

    @classmethod
    def xn(cls, n, dim):
        return cls(n, dim, {(1, (0,) * n): np.eye(dim)})

    def __add__(self, other):
        out = DiffOp(self.n, self.dim, self.terms)
        for k, m in other.terms.items():
            out._add(k, m)
        # exact cancellations only
        out.terms = {k: m for k, m in out.terms.items() if np.any(m)}
        return out

    def __neg__(self):
        return DiffOp(self.n, self.dim, {k: -m for k, m in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c: complex) -> "DiffOp":
        return DiffOp(self.n, self.dim, {k: c * m for k, m in self.terms.items()})

    def __matmul__(self, other: "DiffOp") -> "DiffOp":
        """Composition self∘other."""
        out = DiffOp(self.n, self.dim)
        for (i1, a1), m1 in self.terms.items():
            for (i2, a2), m2 in other.terms.items():
                # ∂_n^k x_n^i = Σ_m C(k,m) i!/(i-m)! x_n^(i-m) ∂_n^(k-m)
                kn = a1[-1]
                for m in range(min(kn, i2) + 1):
                    c = math.comb(kn, m) * math.perm(i2, m)
                    alpha = tuple(x + y for x, y in zip(a1, a2))
                    alpha = alpha[:-1] + (alpha[-1] - m,)
                    out._add((i1 + i2 - m, alpha), c * (m1 @ m2))
        return out

    def alphas(self) -> set:
        return {a for (_, a) in self.terms}

    def apply(self, f, x: np.ndarray, cfg: FDConfig, magnitude: bool = False):
        """Apply to f at x; with ``magnitude`` also return Σ|term| entrywise."""
        if not self.terms:
            zero = np.zeros((x.shape[0], self.dim, f(x).shape[2]), dtype=complex)
            return (zero, zero.copy()) if magnitude else zero
        derivs = derivatives(f, x, self.alphas(), cfg)
        out, mag = 0, 0
        for (i, alpha), m in self.terms.items():
            term = (x[:, -1] ** i)[:, None, None] * np.einsum("kl,blm->bkm", m, derivs[alpha])
            out = out + term
            if magnitude:
                mag = mag + np.abs(term)
        return (out, mag) if magnitude else out


def _central(f, x, alpha, h):
    n = x.shape[1]
    nz = [j for j, a in enumerate(alpha) if a]
    order = sum(alpha)
    if order == 0:
        return f(x)
    if order == 1:
        e = np.zeros(n)
        e[nz[0]] = h
        return (f(x + e) - f(x - e)) / (2 * h)
    if order == 2 and len(nz) == 1:
        e = np.zeros(n)
        e[nz[0]] = h
        return (f(x + e) - 2 * f(x) + f(x - e)) / h ** 2
    if order == 2:
        ej, ek = np.zeros(n), np.zeros(n)
        ej[nz[0]], ek[nz[1]] = h, h
        return (f(x + ej + ek) - f(x + ej - ek) - f(x - ej + ek) + f(x - ej - ek)) / (4 * h * h)
    raise OracleError("finite differences are implemented up to second order")


def derivatives(f, x: np.ndarray, alphas, cfg: FDConfig) -> dict:
    """∂^α f at the points x via Richardson-extrapolated central differences."""
    out = {}
    for alpha in alphas:
        if sum(alpha) == 0:
            out[alpha] = f(x)
            continue
        # coarsest step first; the configured step is the finest one used
        table = [_central(f, x, alpha, cfg.step * 2 ** (cfg.richardson_levels - 1 - level))
                 for level in range(cfg.richardson_levels)]
        for j in range(1, cfg.richardson_levels):
            table = [table[i] + (table[i] - table[i - 1]) / (4 ** j - 1) for i in range(1, len(table))]
        out[alpha] = table[-1]
    return out


def fd_apply(op, f, x, cfg: FDConfig | None = None, magnitude: bool = False):
    cfg = cfg or FDConfig()
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if isinstance(op, DiffOp):
        return op.apply(f, x, cfg, magnitude)
    if op == "MulAbsX2":
        out = np.einsum("bj,bj->b", x, x)[:, None, None] * f(x)
        return (out, np.abs(out)) if magnitude else out
    raise OracleError(f"unknown operator {op!r}")


# standard operators

def _id(rep):
    return np.eye(_dim(rep), dtype=complex)


def op_dn(n, rep):
    return DiffOp.partial(n, _dim(rep), n - 1)


def op_lap(n, rep):
    out = DiffOp(n, _dim(rep))
    for k in range(n):
        dk = DiffOp.partial(n, _dim(rep), k)
        out = out + dk @ dk
    return out


def op_xn(n, rep):
    return DiffOp.xn(n, _dim(rep))


def op_dirac(n, rep, tangential: bool = False):
    out = DiffOp(n, rep.dim)
    for k in range(n - 1 if tangential else n):
        out = out + DiffOp.const(n, rep.matrices[k]) @ DiffOp.partial(n, rep.dim, k)
    return out


def op_d(n, rep):
    out = DiffOp(n, rep.dim)
    for k in range(n):
        out = out + DiffOp.const(n, rep.eps[k]) @ DiffOp.partial(n, rep.dim, k)
    return out


def op_delta(n, rep):
    out = DiffOp(n, rep.dim)
    for k in range(n):
        out = out - DiffOp.const(n, rep.ins[k]) @ DiffOp.partial(n, rep.dim, k)
    return out


def generator_op(family: str, gen: str, n: int, rep):
    if gen == "MulAbsX2":
        return "MulAbsX2"
    if gen == "MulXn":
        return op_xn(n, rep)
    if gen == "Dn":
        return op_dn(n, rep)
    if gen == "Lap":
        return op_lap(n, rep)
    if gen == "Dirac":
        return op_dirac(n, rep)
    if gen == "LeftN":
        return DiffOp.const(n, rep.matrices[-1])
    if gen == "EnDelta":
        return DiffOp.const(n, rep.eps[-1]) @ op_delta(n, rep)
    if gen == "DIn":
        return op_d(n, rep) @ DiffOp.const(n, rep.ins[-1])
    if gen == "DDelta":
        return op_d(n, rep) @ op_delta(n, rep)
    if gen == "DeltaD":
        return op_delta(n, rep) @ op_d(n, rep)
    raise OracleError(f"unknown generator {gen!r}")


def bs_operator(family: str, lam: float, n: int, rep, p: int | None = None, dd_sign: int = 1) -> DiffOp:
    """The Bernstein-Sato operators as written before any normal ordering.

    For forms the dδ(x_n·) term enters with sign ``dd_sign``; +1 is the
    version consistent with the shift identity, -1 the misprinted one.
    """
    x, dn, lap = op_xn(n, rep), op_dn(n, rep), op_lap(n, rep)
    if family == SCALAR:
        return x @ lap - dn.scale(2 * lam - n - 2)
    if family == SPINOR:
        en = DiffOp.const(n, rep.matrices[-1])
        return dn.scale(n - 2 * lam + 1) + op_dirac(n, rep) @ en + lap @ x
    if family == FORM:
        d, de = op_d(n, rep), op_delta(n, rep)
        eps, ins = DiffOp.const(n, rep.eps[-1]), DiffOp.const(n, rep.ins[-1])
        a, b = lam - n + p - 1, lam - p - 1
        return (dn.scale(-(2 * lam - n) * a * b)
                + (de @ eps).scale((2 * lam - n) * a) - (d @ ins).scale((2 * lam - n) * b)
                - ((de @ d).scale(a * (lam - p)) + (d @ de).scale(dd_sign * (lam - n + p) * b)) @ x)
    raise OracleError(f"unknown family {family!r}")


# -- sampling --------------------------------------------------------------

_DENOMS = (1, 2, 3, 4, 5, 6, 8)


def draw_rational(rng: np.random.Generator, lo: float = -3.0, hi: float = 3.0) -> Fraction:
    q = int(rng.choice(_DENOMS))
    return Fraction(int(rng.integers(int(lo * q), int(hi * q) + 1)), q)


def draw_params(rng: np.random.Generator) -> tuple[float, float]:
    return float(draw_rational(rng)), float(draw_rational(rng))


def draw_points(rng: np.random.Generator, n: int, count: int, cfg: FDConfig) -> np.ndarray:
    pts = []
    while len(pts) < count:
        x = rng.uniform(-cfg.radius, cfg.radius, size=n)
        if np.linalg.norm(x) <= cfg.radius and abs(x[-1]) >= cfg.min_xn:
            pts.append(x)
    return np.array(pts)


def _values(lam, nu, n, p):
    vals = [0.0] * len(NAMES)
    vals[NAMES.index("lam")], vals[NAMES.index("nu")] = lam, nu
    vals[NAMES.index("n")] = n
    vals[NAMES.index("p")] = 0.0 if p is None else p
    return vals


def _rel_defect(lhs, rhs, *scales, cols=None) -> np.ndarray:
    """Pointwise max|lhs - rhs| over the largest of the given magnitudes."""
    arrays = [lhs, rhs] + [np.abs(np.broadcast_to(s, lhs.shape)) for s in scales]
    if cols is not None:
        arrays = [a[:, :, cols] for a in arrays]
    diff = np.abs(arrays[0] - arrays[1]).max(axis=(1, 2))
    scale = np.max([np.abs(a).max(axis=(1, 2)) for a in arrays], axis=0)
    return np.where(diff == 0, 0.0, diff / np.maximum(scale, 1e-300))


def _grades(family, n, cfg: FDConfig | None = None):
    if family != FORM:
        return [None]
    return [p for p in range(n + 1) if cfg is None or cfg.grades is None or p in cfg.grades]


def _stable_hash(parts) -> int:
    h = 1469598103934665603
    for ch in "|".join(str(p) for p in parts).encode():
        h = ((h ^ ch) * 1099511628211) % (2 ** 64)
    return h % (2 ** 32)


def validate_rule(rule, n: int, cfg: FDConfig):
    """Worst (defect, detail) for one rule in dimension n."""
    rep = representation(rule.family, n)
    rng = np.random.default_rng([cfg.seed, _stable_hash((rule.family, rule.word, rule.gen, n))])
    op = generator_op(rule.family, rule.gen, n, rep)
    grades = _grades(rule.family, n, cfg)
    dens = [o.coeff.float_pair()[1] for o in rule.outputs]
    worst, where = 0.0, ""
    for _ in range(cfg.draws):
        while True:
            lam, nu = draw_rational(rng), draw_rational(rng)
            if all(abs(den(_values(float(lam), float(nu), n, p))) >= 1e-3 for p in grades for den in dens):
                break
        # exact coefficients keep identically vanishing combinations at zero
        coeffs = {(p, j): float(o.coeff.evaluate({"lam": lam, "nu": nu, "n": n, "p": p or 0}))
                  for p in grades for j, o in enumerate(rule.outputs)}
        lam, nu = float(lam), float(nu)
        x = draw_points(rng, n, cfg.points, cfg)
        f = atom_function(1, lam, nu, n, rule.word, rep)
        lhs, mag = fd_apply(op, f, x, cfg, magnitude=True)
        base = f(x)
        parts = [atom_function(-1 if o.flip else 1, lam + o.dl2 / 2, nu + o.dn2 / 2, n, o.word, rep)(x)
                 for o in rule.outputs]
        for p in grades:
            rhs = np.zeros_like(lhs)
            rmag = np.zeros(lhs.shape)
            for j, part in enumerate(parts):
                rhs = rhs + coeffs[p, j] * part
                rmag = rmag + np.abs(coeffs[p, j] * part)
            cols = rep.grade_columns(p) if p is not None else None
            err = _rel_defect(lhs, rhs, base, mag, rmag, cols=cols)
            j = int(np.argmax(err))
            if err[j] > worst:
                worst = float(err[j])
                where = f"λ={lam}, ν={nu}, n={n}, p={p}, x={np.round(x[j], 4).tolist()}"
    return worst, where


def validate_rules(families=(SCALAR, SPINOR, FORM), cfg: FDConfig | None = None) -> VerificationReport:
    cfg = cfg or FDConfig()
    rep = VerificationReport(seed=cfg.seed)
    table = kc.rule_table()
    for key in sorted(table):
        rule = table[key]
        if rule.family not in families:
            continue
        with stopwatch() as t:
            worst, where = 0.0, ""
            for n in cfg.dims:
                err, detail = validate_rule(rule, n, cfg)
                if err >= worst:
                    worst, where = err, detail
        rep.numeric("rules", f"{rule.family}/{rule.word}/{rule.gen}",
                    f"{rule.family} rule {rule.gen} on {rule.word} ({rule.provenance})",
                    worst, cfg.rel_tol, detail=f"worst at {where}", elapsed=t())
    return rep


def representation_defects() -> VerificationReport:
    rep = VerificationReport()
    worst_c = max(CliffordRep(n).defect() for n in (3, 4, 5))
    worst_e = max(ExteriorRep(n).defect() for n in (3, 4, 5, 6))
    rep.numeric("representations", "clifford", "Clifford relations e_je_k + e_ke_j = -2δ_jk", worst_c, 1e-13)
    rep.numeric("representations", "exterior", "i_vε_v + ε_vi_v = |v|², i_v² = ε_v² = 0", worst_e, 1e-13)
    return rep


def homogeneity_check(families=(SCALAR, SPINOR, FORM), cfg: FDConfig | None = None) -> VerificationReport:
    cfg = cfg or FDConfig()
    rep = VerificationReport(seed=cfg.seed)
    for family in families:
        worst = 0.0
        for n in cfg.dims:
            r = representation(family, n)
            rng = np.random.default_rng([cfg.seed, _stable_hash(("homogeneity", family, n))])
            for _ in range(cfg.draws):
                lam, nu = draw_params(rng)
                x = draw_points(rng, n, cfg.points, cfg)
                for sign in (1, -1):
                    k = family_kernel(family, sign, lam, nu, n, r)
                    base = k(x)
                    for t in (0.5, 2.0):
                        err = _rel_defect(k(t * x), t ** (lam - nu - n) * base)
                        worst = max(worst, float(err.max()))
        rep.numeric("homogeneity", family, f"{family} kernel has degree λ-ν-n", worst, cfg.rel_tol)
    return rep


# -- end-to-end identities -------------------------------------------------

def _shift_identity(family, sign, second=False):
    """(operator parameter, shifted (λ, ν), factor) for a shift identity."""
    if second:
        return (lambda lam, nu, n, p: (lam + nu + 1) / 2,
                lambda lam, nu: (lam, nu + 1),
                lambda lam, nu, n, p: 2 * nu * (nu - lam + 1))

    def factor(lam, nu, n, p):
        c = (lam + nu - n) * (nu - lam + 1)
        if family == FORM:
            c *= (lam - n + p - 1) * (lam - p)
        return c
    return (lambda lam, nu, n, p: lam, lambda lam, nu: (lam - 1, nu), factor)


def bs_identity_cases():
    for family in (SCALAR, SPINOR, FORM):
        for sign in (1, -1):
            yield family, "shift", sign
    for sign in (1, -1):
        yield SCALAR, "shift-second", sign
    for family in (SCALAR, SPINOR, FORM):
        yield family, "riesz", 1
    yield SPINOR, "dirac-riesz", 1


def _bs_identity_worst(family, kind, sign, n, cfg):
    rep = representation(family, n)
    rng = np.random.default_rng([cfg.seed, _stable_hash(("bs", family, kind, sign, n))])
    worst, where = 0.0, ""
    for _ in range(cfg.draws):
        lam, nu = draw_params(rng)
        x = draw_points(rng, n, cfg.points, cfg)
        for p in _grades(family, n, cfg):
            if kind == "dirac-riesz":
                # D r-slash^μ = -(μ+n-1) r^(μ-1)
                op = op_dirac(n, rep)
                f = riesz_function(SPINOR, lam, n, rep)
                target = riesz_function(SCALAR, lam - 1, n, None)(x) * rep.identity * -(lam + n - 1)
            elif kind == "riesz":
                mu = lam
                if family == FORM:
                    d, de = op_d(n, rep), op_delta(n, rep)
                    op = ((de @ d).scale((mu + 2 * n - 2 * p) * (mu + 2 * p - 2))
                          + (d @ de).scale((mu + 2 * p) * (mu + 2 * n - 2 * p - 2)))
                    f = riesz_function(FORM, mu, n, rep)
                    target = riesz_function(FORM, mu - 2, n, rep)(x) * (
                        -(mu - 2) * (mu + n - 2) * (mu + 2 * p) * (mu + 2 * n - 2 * p))
                else:
                    op = op_lap(n, rep)
                    f = riesz_function(family, mu + 2, n, rep)
                    c = (mu + 2) * (mu + n) if family == SCALAR else (mu + 1) * (mu + n + 1)
                    target = riesz_function(family, mu, n, rep)(x) * c
            else:
                opar, shifted, factor = _shift_identity(family, sign, kind == "shift-second")
                op = bs_operator(family, opar(lam, nu, n, p), n, rep, p)
                f = family_kernel(family, sign, lam, nu, n, rep)
                l2, n2 = shifted(lam, nu)
                target = family_kernel(family, -sign, l2, n2, n, rep)(x) * factor(lam, nu, n, p)
            lhs, mag = fd_apply(op, f, x, cfg, magnitude=True)
            cols = rep.grade_columns(p) if p is not None else None
            err = _rel_defect(lhs, target, f(x), mag, cols=cols)
            j = int(np.argmax(err))
            if err[j] > worst:
                worst, where = float(err[j]), f"λ={lam}, ν={nu}, n={n}, p={p}"
    return worst, where


def bs_identity_numeric(families=(SCALAR, SPINOR, FORM), cfg: FDConfig | None = None) -> VerificationReport:
    cfg = cfg or FDConfig()
    rep = VerificationReport(seed=cfg.seed)
    for family, kind, sign in bs_identity_cases():
        if family not in families:
            continue
        with stopwatch() as t:
            worst, where = 0.0, ""
            for n in cfg.dims:
                err, detail = _bs_identity_worst(family, kind, sign, n, cfg)
                if err >= worst:
                    worst, where = err, detail
        tag = "" if "riesz" in kind else ("+" if sign > 0 else "-")
        rep.numeric("bs-numeric", f"{family}/{kind}{tag}", f"{family} {kind} identity, finite differences",
                    worst, cfg.rel_tol, detail=f"worst at {where}", elapsed=t())
    if FORM in families:
        err = form_printed_sign_defect(cfg=cfg)
        rep.diagnostic("bs-numeric", "form/printed-dd-sign",
                       "form operator with the opposite dδ sign", detail=f"shift identity defect {err:.3g}")
    return rep


def form_printed_sign_defect(n: int = 4, cfg: FDConfig | None = None) -> float:
    """Worst shift-identity defect of the form operator with the dδ sign as misprinted."""
    cfg = cfg or FDConfig()
    rep = representation(FORM, n)
    rng = np.random.default_rng([cfg.seed, _stable_hash(("printed-form", n))])
    worst = 0.0
    for _ in range(3):
        lam, nu = draw_params(rng)
        x = draw_points(rng, n, cfg.points, cfg)
        f = family_kernel(FORM, 1, lam, nu, n, rep)
        for p in range(1, n):
            _, _, factor = _shift_identity(FORM, 1)
            target = family_kernel(FORM, -1, lam - 1, nu, n, rep)(x) * factor(lam, nu, n, p)
            lhs, mag = fd_apply(bs_operator(FORM, lam, n, rep, p, dd_sign=-1), f, x, cfg, magnitude=True)
            err = _rel_defect(lhs, target, f(x), mag, cols=rep.grade_columns(p))
            worst = max(worst, float(err.max()))
    return worst


# -- continuation residues ---------------------------------------------------

class TestFunction:
    """Polynomial times exp(-|x|²/2); the polynomial is {multi-index: coefficient}."""

    __test__ = False

    def __init__(self, n: int, poly: dict):
        self.n = n
        self.poly = {tuple(k): float(v) for k, v in poly.items() if v}

    @classmethod
    def gaussian(cls, n: int) -> "TestFunction":
        return cls(n, {(0,) * n: 1.0})

    def _shift(self, alpha, j, d):
        a = list(alpha)
        a[j] += d
        return tuple(a)

    def laplacian(self) -> "TestFunction":
        """Δ(qG) = (Δq - 2 x·∇q + (|x|² - n)q) G."""
        out: dict = {}

        def add(k, v):
            out[k] = out.get(k, 0.0) + v
        for alpha, c in self.poly.items():
            add(alpha, -self.n * c)
            for j in range(self.n):
                a = alpha[j]
                if a >= 2:
                    add(self._shift(alpha, j, -2), a * (a - 1) * c)
                add(alpha, -2 * a * c)
                add(self._shift(alpha, j, 2), c)
        return TestFunction(self.n, out)

    def at_origin(self) -> float:
        return self.poly.get((0,) * self.n, 0.0)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        total = np.zeros(x.shape[0])
        for alpha, c in self.poly.items():
            total += c * np.prod(x ** np.array(alpha), axis=1)
        return total * np.exp(-0.5 * np.einsum("bj,bj->b", x, x))


def sphere_area(n: float) -> float:
    return 2 * math.pi ** (n / 2) / special.gamma(n / 2)


def residue_constant(n: int, k: int) -> float:
    """2π^{n/2}/(4^k k! Γ(n/2) (n/2)_k)."""
    return sphere_area(n) / (4 ** k * math.factorial(k) * special.poch(n / 2, k))


def radial_moment(f: TestFunction, mu: float, quad_order: int, radius: float = 12.0) -> float:
    """∫_{R^3} |x|^μ f(x) dx by Gauss-Legendre in r and cos θ and the trapezoid rule in φ."""
    if f.n != 3:
        raise OracleError("spherical quadrature is implemented for n = 3")
    r, wr = np.polynomial.legendre.leggauss(quad_order)
    r, wr = radius * (r + 1) / 2, wr * radius / 2
    na = max(quad_order // 4, 10)
    t, wt = np.polynomial.legendre.leggauss(na)
    phi = 2 * math.pi * np.arange(2 * na) / (2 * na)
    wphi = 2 * math.pi / (2 * na)
    st = np.sqrt(1 - t ** 2)
    omega = np.stack([np.outer(st, np.cos(phi)).ravel(), np.outer(st, np.sin(phi)).ravel(),
                      np.repeat(t, 2 * na)], axis=1)
    w_omega = np.repeat(wt, 2 * na) * wphi
    pts = (r[:, None, None] * omega[None, :, :]).reshape(-1, 3)
    vals = f(pts).reshape(len(r), -1) @ w_omega
    return float(np.sum(wr * r ** (mu + 2) * vals))


@dataclass
class ResidueEstimate:
    estimate: float
    target: float
    abs_error: float
    rel_error: float


def continuation_residue(n: int, k: int, f: TestFunction, quad_order: int = 80) -> ResidueEstimate:
    """Residue of λ ↦ ∫ r^λ f at λ = -n-2k from k+1 steps of I(λ) = I_Δ(λ+2)/((λ+2)(λ+n))."""
    if n != 3:
        raise OracleError("continuation residues are computed for n = 3")
    if k not in (0, 1, 2):
        raise OracleError("k must be 0, 1 or 2")
    if quad_order < 40:
        raise OracleError("quad_order must be at least 40")
    g = f
    for _ in range(k + 1):
        g = g.laplacian()
    lam = -n - 2 * k
    # the factor (λ+2k+n) from the last step is the one removed by the residue
    denom = 1.0
    for j in range(k + 1):
        denom *= lam + 2 * j + 2
        if j < k:
            denom *= lam + 2 * j + n
    estimate = radial_moment(g, lam + 2 * (k + 1), quad_order) / denom
    h = f
    for _ in range(k):
        h = h.laplacian()
    target = float(residue_constant(n, k) * h.at_origin())
    abs_err = abs(estimate - target)
    rel = abs_err / abs(target) if target else abs_err
    return ResidueEstimate(estimate, target, abs_err, rel)


def standard_test_function(k: int) -> TestFunction:
    if k == 0:
        return TestFunction.gaussian(3)
    # (1 + |x|²) exp(-|x|²/2)
    return TestFunction(3, {(0, 0, 0): 1, (2, 0, 0): 1, (0, 2, 0): 1, (0, 0, 2): 1})


def continuation_check(ks=(0, 1), quad_order: int = 80, tol: float = 1e-5, floor: float = 1e-13) -> VerificationReport:
    rep = VerificationReport()
    for k in ks:
        f = standard_test_function(k)
        with stopwatch() as t:
            res = continuation_residue(3, k, f, quad_order)
        rep.numeric("continuation", f"n3/k{k}", f"residue of r^λ at λ=-3-{2 * k}", res.rel_error, tol,
                    detail=f"estimate {res.estimate!r}, target {res.target!r}", elapsed=t())
        errs = [continuation_residue(3, k, f, q).rel_error for q in (40, 80, 160)]
        ok = all(b <= max(a, floor) for a, b in zip(errs, errs[1:]))
        rep.exact("continuation", f"n3/k{k}/convergence", "quadrature error shrinks as the order doubles", ok,
                  detail=", ".join(f"{e:.2e}" for e in errs))
    return rep
