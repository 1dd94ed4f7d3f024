"""Fourier-side symbol calculus for the Knapp-Stein compositions.

A symbol term is ``i^a · ξ_n^m · r^e · word · ∂_n^f F`` where r = |ξ|, the
exponent e = q0 + qλ·λ + qn·n is kept as an integer triple and the word is a
normal-ordered product of Clifford letters (Ξ = ξ·, N = e_n·) or exterior
letters (ε_ξ, ε_n, i_ξ, i_n).  Powers of i are tracked separately so every
coefficient stays a real rational function.  ``f`` is None for a pure
multiplier and the number of ∂_n falling on F(f) otherwise.

Fourier conventions: F(∂_k f) = -iξ_k F(f) and F(x_k f) = -i∂_{ξ_k} F(f).
"""

from __future__ import annotations

import itertools
from functools import lru_cache
from typing import Iterable, NamedTuple

from .ratfunc import LAM, N, ONE, P, RationalFunction, double_factorial, pochhammer, rf
from .report import VerificationReport, stopwatch
from .weyl_algebra import coeff_a, coeff_b

CLIFFORD = ("X", "N")
EXTERIOR = ("eX", "eN", "iX", "iN")
_ORDER = {"X": 0, "N": 1, "eX": 0, "eN": 1, "iX": 2, "iN": 3}
_DERIV = {"X": "N", "eX": "eN", "iX": "iN"}


class SymbolError(Exception):
    pass


class ExpAff(NamedTuple):
    """Exponent q0 + qλ·λ + qn·n."""

    q0: int = 0
    ql: int = 0
    qn: int = 0

    def __add__(self, other):
        return ExpAff(self.q0 + other[0], self.ql + other[1], self.qn + other[2])

    def value(self) -> RationalFunction:
        return self.q0 + self.ql * LAM + self.qn * N


def _inner(a: str, b: str):
    """<a, b> as (ξ_n power, r-exponent shift); vectors ξ and e_n."""
    va, vb = a[-1], b[-1]
    if va == "X" and vb == "X":
        return 0, 2
    if va == "N" and vb == "N":
        return 0, 0
    return 1, 0


def _clifford_pair(a, b):
    """Rewrite an adjacent pair ab that is not in normal order, or None."""
    if a == b:
        xn, dr = _inner(a, b)
        return [(-1, xn, dr, ())]
    if _ORDER[a] > _ORDER[b]:
        xn, dr = _inner(a, b)
        return [(-1, 0, 0, (b, a)), (-2, xn, dr, ())]
    return None


def _exterior_pair(a, b):
    ea, eb = a[0] == "e", b[0] == "e"
    if a == b:
        return []
    if ea == eb:
        if _ORDER[a] > _ORDER[b]:
            return [(-1, 0, 0, (b, a))]
        return None
    if not ea and eb:
        # i_u ε_v = <u,v> - ε_v i_u
        xn, dr = _inner(a, b)
        return [(1, xn, dr, ()), (-1, 0, 0, (b, a))]
    return None


def _pair_rule(a, b):
    return _clifford_pair(a, b) if a in CLIFFORD else _exterior_pair(a, b)


def _reduce(word: tuple, rightmost: bool = False) -> dict:
    """Normal form of a word as {(ξ_n power, r shift, word): integer}."""
    out: dict = {}
    stack = [(1, 0, 0, tuple(word))]
    while stack:
        c, xn, dr, w = stack.pop()
        positions = range(len(w) - 2, -1, -1) if rightmost else range(len(w) - 1)
        for pos in positions:
            rule = _pair_rule(w[pos], w[pos + 1])
            if rule is not None:
                for c2, xn2, dr2, mid in rule:
                    stack.append((c * c2, xn + xn2, dr + dr2, w[:pos] + mid + w[pos + 2:]))
                break
        else:
            key = (xn, dr, w)
            out[key] = out.get(key, 0) + c
            if out[key] == 0:
                del out[key]
    return out


@lru_cache(maxsize=None)
def reduce_word(word: tuple) -> tuple:
    return tuple(_reduce(word).items())


@lru_cache(maxsize=None)
def check_confluence(max_len: int = 6) -> bool:
    """Leftmost and rightmost rewriting agree on every word up to max_len."""
    for letters in (CLIFFORD, EXTERIOR):
        for length in range(max_len + 1):
            for w in itertools.product(letters, repeat=length):
                if _reduce(w) != _reduce(w, rightmost=True):
                    return False
    return True


class SymbolExpr:
    __slots__ = ("terms",)

    def __init__(self, terms=None):
        self.terms: dict = {}
        for key, c in (terms or {}).items():
            self._add(key, c)

    def _add(self, key, c):
        c = rf(c)
        if c.is_zero():
            return
        ip, f, xn, e, w = key
        if ip % 2 == 0:
            c = c if ip % 4 == 0 else -c
        else:
            c = c if ip % 4 == 1 else -c
        key = (ip % 2, f, xn, ExpAff(*e), w)
        total = self.terms.get(key)
        total = c if total is None else total + c
        if total.is_zero():
            self.terms.pop(key, None)
        else:
            self.terms[key] = total

    @classmethod
    def mono(cls, coeff=ONE, xn=0, exp=(0, 0, 0), word=(), f=None, ipow=0):
        out = cls()
        for (dxn, dr, w), c in reduce_word(tuple(word)):
            out._add((ipow, f, xn + dxn, ExpAff(*exp) + (dr, 0, 0), w), rf(coeff) * c)
        return out

    @classmethod
    def F(cls):
        """The transformed function itself."""
        return cls.mono(f=0)

    def __add__(self, other):
        out = SymbolExpr(self.terms)
        for k, c in other.terms.items():
            out._add(k, c)
        return out

    def __neg__(self):
        return SymbolExpr({k: -c for k, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c) -> "SymbolExpr":
        c = rf(c)
        return SymbolExpr({k: v * c for k, v in self.terms.items()})

    def times_i(self, k: int = 1) -> "SymbolExpr":
        out = SymbolExpr()
        for (ip, f, xn, e, w), c in self.terms.items():
            out._add((ip + k, f, xn, e, w), c)
        return out

    def __mul__(self, other: "SymbolExpr") -> "SymbolExpr":
        out = SymbolExpr()
        for (ip1, f1, xn1, e1, w1), c1 in self.terms.items():
            if f1 is not None:
                raise SymbolError("only pure multipliers can act on the left")
            for (ip2, f2, xn2, e2, w2), c2 in other.terms.items():
                for (dxn, dr, w), c in reduce_word(w1 + w2):
                    out._add((ip1 + ip2, f2, xn1 + xn2 + dxn, e1 + e2 + (dr, 0, 0), w), c1 * c2 * c)
        return out

    def __eq__(self, other):
        if not isinstance(other, SymbolExpr):
            return NotImplemented
        return not (self - other).terms

    __hash__ = None

    def __repr__(self):
        parts = []
        for (ip, f, xn, e, w), c in sorted(self.terms.items(), key=lambda kv: str(kv[0])):
            parts.append(f"({c}){'i' if ip else ''} ξn^{xn} r^{tuple(e)} {''.join(w) or '1'} ∂^{f}F")
        return " + ".join(parts) or "0"


def symbol_dn(e: SymbolExpr) -> SymbolExpr:
    """∂/∂ξ_n with the Leibniz rule over ξ_n, r, word letters and F."""
    out = SymbolExpr()
    for (ip, f, xn, ex, w), c in e.terms.items():
        if xn:
            out._add((ip, f, xn - 1, ex, w), c * xn)
        ev = ex.value()
        if not ev.is_zero():
            out._add((ip, f, xn + 1, ex + (-2, 0, 0), w), c * ev)
        for pos, letter in enumerate(w):
            if letter in _DERIV:
                new = w[:pos] + (_DERIV[letter],) + w[pos + 1:]
                for (dxn, dr, nw), cc in reduce_word(new):
                    out._add((ip, f, xn + dxn, ex + (dr, 0, 0), nw), c * cc)
        if f is not None:
            out._add((ip, f + 1, xn, ex, w), c)
    return out


# -- Fourier images of differential operators ---------------------------------

def _left(word, coeff=ONE, ipow=0, xn=0, exp=(0, 0, 0)):
    return SymbolExpr.mono(coeff, xn=xn, exp=exp, word=word, ipow=ipow)


def fourier_op(op: str, e: SymbolExpr) -> SymbolExpr:
    """F(op g) from F(g)."""
    if op == "dn":
        return _left((), ipow=-1, xn=1) * e
    if op == "lap":
        return _left((), -1, exp=(2, 0, 0)) * e
    if op == "xn":
        return symbol_dn(e).times_i(-1)
    if op == "dirac":
        return _left(("X",), ipow=-1) * e
    if op == "en":
        return _left(("N",)) * e
    if op == "d":
        return _left(("eX",), ipow=-1) * e
    if op == "delta":
        # δ = -Σ i_k ∂_k
        return _left(("iX",), ipow=1) * e
    if op == "eps_n":
        return _left(("eN",)) * e
    if op == "i_n":
        return _left(("iN",)) * e
    raise SymbolError(f"unknown operator {op!r}")


def fourier_chain(chain: Iterable[str], e: SymbolExpr | None = None) -> SymbolExpr:
    e = SymbolExpr.F() if e is None else e
    for op in reversed(tuple(chain)):
        e = fourier_op(op, e)
    return e


def alpha(mu) -> RationalFunction:
    return N / 2 - P + mu


def beta(mu) -> RationalFunction:
    return N / 2 - P - mu


def _form_word(a, b) -> SymbolExpr:
    """a i_ξε_ξ + b ε_ξi_ξ."""
    return _left(("iX", "eX"), a) + _left(("eX", "iX"), b)


def clerc_sides(variant: str, lam=LAM):
    """(-i × multiplier composition from the proof, Fourier image of the claimed operator)."""
    lam = rf(lam)
    F = SymbolExpr.F()
    # exponents carry λ and n symbolically, so only the generic λ is supported
    if lam != LAM:
        raise SymbolError("symbol checks run at symbolic λ")
    if variant == "scalar":
        inner = _left((), exp=(0, -2, 1)) * F
        lhs = (_left((), exp=(2, 2, -1)) * symbol_dn(inner)).times_i(-1)
        rhs = fourier_chain(["dn"]).scale(N - 2 * lam) - fourier_chain(["lap", "xn"])
        return lhs, rhs
    if variant == "spinor":
        # r-slash^μ(ξ) = r^(μ-1) ξ·
        inner = _left(("X",), exp=(-1, -2, 1)) * F
        lhs = (_left(("X",), exp=(1, 2, -1)) * symbol_dn(inner)).times_i(-1)
        rhs = (fourier_chain(["dn"]).scale(2 * lam - N + 1) + fourier_chain(["dirac", "en"])
               + fourier_chain(["lap", "xn"]))
        return lhs, rhs
    if variant == "form":
        inner = (_left((), exp=(-2, -2, 1)) * _form_word(alpha(N / 2 - lam), beta(N / 2 - lam))) * F
        outer = _left((), exp=(0, 2, -1)) * _form_word(alpha(lam + 1 - N / 2), beta(lam + 1 - N / 2))
        lhs = (outer * symbol_dn(inner)).times_i(-1)
        rhs = (fourier_chain(["dn"]).scale((2 * lam - N) * (lam - P + 1) * (lam - N + P + 1))
               + fourier_chain(["delta", "eps_n"]).scale((2 * lam - N) * (lam - P + 1))
               - fourier_chain(["d", "i_n"]).scale((2 * lam - N) * (lam - N + P + 1))
               + fourier_chain(["delta", "d", "xn"]).scale((lam - P + 1) * (N - lam - P))
               + fourier_chain(["d", "delta", "xn"]).scale((lam - P) * (N - lam - P - 1)))
        return lhs, rhs
    raise SymbolError(f"unknown variant {variant!r}")


def clerc_check(variant: str) -> VerificationReport:
    rep = VerificationReport()
    if not check_confluence():
        raise SymbolError("word reduction is not confluent")
    with stopwatch() as t:
        lhs, rhs = clerc_sides(variant)
        ok = lhs == rhs
    rep.exact("symbol", f"{variant}/second-order", f"{variant} Knapp-Stein composition is a second-order operator",
              ok, elapsed=t())
    if variant == "form":
        ok = alpha(LAM + 1 - N / 2) * alpha(N / 2 - LAM - 1) == beta(LAM + 1 - N / 2) * beta(N / 2 - LAM - 1)
        rep.exact("symbol", "form/alpha-beta", "α_{λ+1-n/2}α_{n/2-λ-1} = β_{λ+1-n/2}β_{n/2-λ-1}", ok)
    return rep


# -- iterated normal derivatives of r^(n-2λ) ----------------------------------

def _tangential_power(m: int) -> SymbolExpr:
    """r(ξ')^(2m) = (r² - ξ_n²)^m."""
    out = SymbolExpr()
    for j in range(m + 1):
        sign = (-1) ** j
        binom = 1
        for t in range(j):
            binom = binom * (m - t) // (t + 1)
        out = out + _left((), sign * binom, xn=2 * j, exp=(2 * (m - j), 0, 0))
    return out


def dn_power_closed_form(order: int, odd_double_factorial: int | None = None) -> SymbolExpr:
    """Closed form of ∂_n^order r^(n-2λ); the odd prefactor's double factorial can be overridden."""
    half, odd = divmod(order, 2)
    lam = LAM
    total = SymbolExpr()
    if not odd:
        pref = double_factorial(2 * half - 1) * 2 ** half * pochhammer(N / 2 - lam - half + 1, half)
        for k in range(half + 1):
            c = coeff_a(half, half - k, lam - N + 2 * half)
            total = total + (_tangential_power(half - k) * _left((), c, xn=2 * k))
        return _left((), pref, exp=(-4 * half, -2, 1)) * total
    df = double_factorial(2 * half + 1) if odd_double_factorial is None else odd_double_factorial
    pref = df * 2 ** (half + 1) * pochhammer(N / 2 - lam - half, half + 1)
    for k in range(half + 1):
        c = coeff_b(half, half - k, lam - N + 2 * half + 1)
        total = total + (_tangential_power(half - k) * _left((), c, xn=2 * k))
    return _left((), pref, xn=1, exp=(-4 * half - 2, -2, 1)) * total


def dn_power(order: int) -> SymbolExpr:
    e = _left((), exp=(0, -2, 1))
    for _ in range(order):
        e = symbol_dn(e)
    return e


def dn_power_expansion_check(N_: int) -> VerificationReport:
    if N_ > 5:
        raise SymbolError("N is capped at 5")
    rep = VerificationReport()
    for order in (2 * N_, 2 * N_ + 1):
        with stopwatch() as t:
            ok = dn_power(order) == dn_power_closed_form(order)
        rep.exact("symbol", f"dn-power/{order}", f"∂_n^{order} r^(n-2λ) closed form", ok, elapsed=t())
    if N_ >= 1:
        printed = dn_power(2 * N_ + 1) == dn_power_closed_form(2 * N_ + 1, double_factorial(2 * N_ - 1))
        rep.diagnostic("symbol", f"dn-power/{2 * N_ + 1}/printed-prefactor",
                       "odd closed form with (2N-1)!! in front",
                       detail="holds" if printed else "does not hold")
    return rep


def form_ks_composition() -> SymbolExpr:
    """Multiplier of I^p_{n-λ}∘I^p_λ without the Γ-constants."""
    lam = LAM
    # I^p_γ has multiplier r^(2γ-n-2)(α_{γ-n/2} i_ξε_ξ + β_{γ-n/2} ε_ξi_ξ)
    left = _left((), exp=(-2, -2, 1)) * _form_word(alpha(N / 2 - lam), beta(N / 2 - lam))
    right = _left((), exp=(-2, 2, -1)) * _form_word(alpha(lam - N / 2), beta(lam - N / 2))
    return left * right


def form_ks_composition_check() -> VerificationReport:
    rep = VerificationReport()
    with stopwatch() as t:
        prod = form_ks_composition()
        ok = prod == _left((), (LAM - P) * (N - P - LAM))
    rep.exact("symbol", "form/ks-composition", "I^p_{n-λ}∘I^p_λ is the scalar (λ-p)(n-p-λ)", ok, elapsed=t())
    return rep
