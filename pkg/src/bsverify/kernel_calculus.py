"""Formal calculus of the symmetry breaking kernels K, K-slash and K^(p).

An atom is ``K^s_{λ+dλ, ν+dν} · w``: the scalar kernel
``sgn(x_n)^{(1-s)/2} |x_n|^{λ+ν-n} |x|^{-2ν}`` with half-integer parameter
offsets (stored doubled) followed by an endomorphism word ``w``.  Spinor and
form kernels are sums of such atoms, so one representation serves all three
families.

Words are built from letters that act on the left, listed outermost first:

* Clifford: ``X`` (x·), ``N`` (e_n·)
* exterior: ``eX`` (ε_x), ``eN`` (ε_{e_n}), ``iX`` (i_x), ``iN`` (i_{e_n})

A small rewriting engine differentiates atoms letter by letter (Leibniz rule
plus the scalar kernel derivatives) and normal-orders the resulting words.
Its output is cached in a rule table keyed by (family, word, generator).
Where the same rule is written out explicitly in the literature the written
form is stored instead, tagged with its provenance, and the engine result is
kept alongside so that the two can be compared.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Iterable, Mapping

from .ratfunc import (
    LAM, N, NU, ONE, P, ZERO, LinSystem, RationalFunction, pochhammer, render,
    in_solution_space, rf, rf_eq, solve_linear, substitute, u,
)
from .report import VerificationReport, stopwatch

SCALAR, SPINOR, FORM = "scalar", "spinor", "form"
FAMILIES = (SCALAR, SPINOR, FORM)

GENERATORS = {
    SCALAR: ("MulXn", "MulAbsX2", "Dn", "Lap"),
    SPINOR: ("MulXn", "Dn", "Dirac", "Lap", "LeftN"),
    FORM: ("MulXn", "Dn", "EnDelta", "DIn", "DDelta", "DeltaD"),
}

WORDS = {
    SCALAR: ("1",),
    SPINOR: ("1", "X", "N", "XN"),
    FORM: ("W1", "W2", "W3", "W4", "W5", "W6"),
}

LEMMA = "lemma"
PROOF_IDENTITY = "proof-identity"
DERIVED = "derived"


class KernelError(Exception):
    pass


# ---------------------------------------------------------------------------
# letter-level engine

_RANK = {"X": 0, "N": 1, "eX": 0, "eN": 1, "iX": 2, "iN": 3}
_DEGREE = {"eX": 1, "eN": 1, "eK": 1, "iX": -1, "iN": -1, "iK": -1}
_TO_INDEX = {"X": "E", "eX": "eK", "iX": "iK"}
_TO_NORMAL = {"X": "N", "eX": "eN", "iX": "iN"}
_INDEX_TO_X = {"E": "X", "eK": "eX", "iK": "iX"}
_INDEX_TO_N = {"E": "N", "eK": "eN", "iK": "iN"}
_IS_E = {"eX", "eN", "eK"}
_IS_I = {"iX", "iN", "iK"}

HALF = Fraction(1, 2)


def _params(dl2: int, dn2: int) -> tuple[RationalFunction, RationalFunction]:
    return LAM + Fraction(dl2, 2), NU + Fraction(dn2, 2)


def _add(out: dict, key, c: RationalFunction):
    if c.is_zero():
        return
    prev = out.get(key)
    total = c if prev is None else prev + c
    if total.is_zero():
        out.pop(key, None)
    else:
        out[key] = total


def _net(word: Iterable[str]) -> int:
    return sum(_DEGREE.get(a, 0) for a in word)


def _inner(a: str, b: str):
    """Contraction produced when ``a`` is moved to the right past ``b``."""
    if a == "E" or a in _IS_I and b in ("eX", "eN") or a in _IS_E and b in ("iX", "iN"):
        if b in ("X", "eX", "iX"):
            return "x"
        if b in ("N", "eN", "iN"):
            return "n"
    return None


def _contract(key, c, i, j, out):
    """Sum over the repeated index carried by letters ``i`` < ``j``."""
    s, dl2, dn2, w = key
    left = w[i]
    if j == i + 1:
        right = w[j]
        rest = w[:i] + w[j + 1:]
        if left == "E":
            _add(out, (s, dl2, dn2, rest), -N * c)
        elif left != right:
            q = P + _net(w[j + 1:])
            _add(out, (s, dl2, dn2, rest), (q if left == "eK" else N - q) * c)
        return
    nxt = w[i + 1]
    _contract((s, dl2, dn2, w[:i] + (nxt, left) + w[i + 2:]), -c, i + 1, j, out)
    kind = _inner(left, nxt)
    if kind is None:
        return
    rest = w[:i] + w[i + 2:]
    j2 = j - 2
    partner = (_INDEX_TO_X if kind == "x" else _INDEX_TO_N)[w[j]]
    rest = rest[:j2] + (partner,) + rest[j2 + 1:]
    _add(out, (s, dl2, dn2, rest), (-2 * c) if left == "E" else c)


def _clifford_letter(a: str) -> bool:
    return a in ("X", "N")


def _normalize(terms: Mapping) -> dict:
    """Normal order every word: X before N; ε's (x before n) before i's."""
    out: dict = {}
    stack = list(terms.items())
    while stack:
        key, c = stack.pop()
        if c.is_zero():
            continue
        s, dl2, dn2, w = key
        pos = next((k for k in range(len(w) - 1) if _RANK[w[k]] >= _RANK[w[k + 1]]), None)
        if pos is None:
            _add(out, key, c)
            continue
        a, b = w[pos], w[pos + 1]
        rest = w[:pos] + w[pos + 2:]
        if a == b:
            if a == "X":
                stack.append(((s, dl2 + 2, dn2 - 2, rest), -c))
            elif a == "N":
                stack.append(((s, dl2, dn2, rest), -c))
            continue
        stack.append(((s, dl2, dn2, w[:pos] + (b, a) + w[pos + 2:]), -c))
        if _clifford_letter(a):
            # N X = -X N - 2 x_n
            stack.append(((-s, dl2 + 2, dn2, rest), -2 * c))
        elif a in _IS_I and b in _IS_E:
            kinds = {a[1], b[1]}
            if kinds == {"X"}:
                stack.append(((s, dl2 + 2, dn2 - 2, rest), c))
            elif kinds == {"X", "N"}:
                stack.append(((-s, dl2 + 2, dn2, rest), c))
            else:
                stack.append(((s, dl2, dn2, rest), c))
    return out


def _mul_xn(terms):
    return {(-s, dl2 + 2, dn2, w): c for (s, dl2, dn2, w), c in terms.items()}


def _mul_absx2(terms):
    return {(s, dl2 + 2, dn2 - 2, w): c for (s, dl2, dn2, w), c in terms.items()}


def _left(letter: str, terms):
    return _normalize({(s, dl2, dn2, (letter,) + w): c for (s, dl2, dn2, w), c in terms.items()})


def _dn(terms):
    out: dict = {}
    for (s, dl2, dn2, w), c in terms.items():
        a, b = _params(dl2, dn2)
        _add(out, (-s, dl2 - 2, dn2, w), (a + b - N) * c)
        _add(out, (-s, dl2, dn2 + 2, w), -2 * b * c)
        for j, letter in enumerate(w):
            if letter in _TO_NORMAL:
                _add(out, (s, dl2, dn2, w[:j] + (_TO_NORMAL[letter],) + w[j + 1:]), c)
    return _normalize(out)


def _index_op(terms, index_letter: str, sign: int):
    """sign · Σ_k L_k ∂_k for L one of e_k·, ε_{e_k}, i_{e_k}."""
    lx, ln = _INDEX_TO_X[index_letter], _INDEX_TO_N[index_letter]
    out: dict = {}
    for (s, dl2, dn2, w), c in terms.items():
        c = c * sign
        a, b = _params(dl2, dn2)
        # ∂_k K = -2ν x_k K_{λ-1,ν+1} + δ_{kn}(λ+ν-n) K̄_{λ-1,ν}
        _add(out, (s, dl2 - 2, dn2 + 2, (lx,) + w), -2 * b * c)
        _add(out, (-s, dl2 - 2, dn2, (ln,) + w), (a + b - N) * c)
        for j, letter in enumerate(w):
            if letter in _TO_INDEX:
                w2 = (index_letter,) + w[:j] + (_TO_INDEX[letter],) + w[j + 1:]
                _contract((s, dl2, dn2, w2), c, 0, j + 1, out)
    return _normalize(out)


def _lap(terms):
    """Δ(K w) = (ΔK) w + 2 Σ_k ∂_kK ∂_k w + K Δw, for Clifford words."""
    out: dict = {}
    for (s, dl2, dn2, w), c in terms.items():
        a, b = _params(dl2, dn2)
        # ΔK = Σ_k ∂_k(-2ν x_k K_{λ-1,ν+1}) + (λ+ν-n) ∂_n K̄_{λ-1,ν}; the first sum is
        # -2ν(n + E)K_{λ-1,ν+1} with E the Euler operator, of eigenvalue λ-ν-n-2 there.
        _add(out, (s, dl2 - 2, dn2 + 2, w), -2 * b * (N + (a - 1) - (b + 1) - N) * c)
        for key, cc in _dn({(-s, dl2 - 2, dn2, ()): (a + b - N) * c}).items():
            _add(out, key[:3] + (w,), cc)
        # cross term: Σ x_k ∂_k w = (number of x-letters) w
        xs = [j for j, letter in enumerate(w) if letter in _TO_INDEX]
        _add(out, (s, dl2 - 2, dn2 + 2, w), -4 * b * len(xs) * c)
        for j in xs:
            _add(out, (-s, dl2 - 2, dn2, w[:j] + (_TO_NORMAL[w[j]],) + w[j + 1:]), 2 * (a + b - N) * c)
        for ii, i in enumerate(xs):
            for j in xs[ii + 1:]:
                w2 = list(w)
                w2[i], w2[j] = _TO_INDEX[w[i]], _TO_INDEX[w[j]]
                _contract((s, dl2, dn2, tuple(w2)), 2 * c, i, j, out)
    return _normalize(out)


def _d(terms):
    return _index_op(terms, "eK", 1)


def _delta(terms):
    return _index_op(terms, "iK", -1)


_ENGINE: dict[str, Callable] = {
    "MulXn": _mul_xn,
    "MulAbsX2": _mul_absx2,
    "Dn": _dn,
    "Lap": _lap,
    "LeftN": lambda t: _left("N", t),
    "Dirac": lambda t: _index_op(t, "E", 1),
    "EnDelta": lambda t: _left("eN", _delta(t)),
    "DIn": lambda t: _d(_left("iN", t)),
    "DDelta": lambda t: _d(_delta(t)),
    "DeltaD": lambda t: _delta(_d(t)),
}


# ---------------------------------------------------------------------------
# word bases

def _lc(pairs) -> dict:
    """Letter combination from (coefficient, x_n-power, letters) triples."""
    out: dict = {}
    for c, xn, word in pairs:
        _add(out, (1 if xn % 2 == 0 else -1, 2 * xn, 0, tuple(word)), rf(c))
    return out


_EXPANSION = {
    "1": _lc([(1, 0, ())]),
    "X": _lc([(1, 0, ("X",))]),
    "N": _lc([(1, 0, ("N",))]),
    "XN": _lc([(1, 0, ("X", "N"))]),
    # i_n ε_n
    "W1": _lc([(1, 0, ()), (-1, 0, ("eN", "iN"))]),
    # ε_x i_x i_n ε_n
    "W2": _lc([(1, 0, ("eX", "iX")), (-1, 1, ("eX", "iN")), (1, 0, ("eX", "eN", "iX", "iN"))]),
    # ε_n i_x i_n ε_n
    "W3": _lc([(1, 0, ("eN", "iX")), (-1, 1, ("eN", "iN"))]),
    "W4": _lc([(1, 0, ("eN", "iN"))]),
    "W5": _lc([(1, 0, ("eX", "iN"))]),
    "W6": _lc([(1, 0, ("eX", "eN", "iX", "iN"))]),
}

# normal letter word -> combination of (coefficient, x_n-power, family word)
_INVERSE = {
    SCALAR: {(): [(1, 0, "1")]},
    SPINOR: {(): [(1, 0, "1")], ("X",): [(1, 0, "X")], ("N",): [(1, 0, "N")],
             ("X", "N"): [(1, 0, "XN")]},
    FORM: {
        (): [(1, 0, "W1"), (1, 0, "W4")],
        ("eN", "iN"): [(1, 0, "W4")],
        ("eX", "iN"): [(1, 0, "W5")],
        ("eX", "eN", "iX", "iN"): [(1, 0, "W6")],
        ("eN", "iX"): [(1, 0, "W3"), (1, 1, "W4")],
        ("eX", "iX"): [(1, 0, "W2"), (1, 1, "W5"), (-1, 0, "W6")],
    },
}

# letter spellings of the family words, outermost letter first
WORD_LETTERS = {
    "1": (), "X": ("X",), "N": ("N",), "XN": ("X", "N"),
    "W1": ("iN", "eN"),
    "W2": ("eX", "iX", "iN", "eN"),
    "W3": ("eN", "iX", "iN", "eN"),
    "W4": ("eN", "iN"),
    "W5": ("eX", "iN"),
    "W6": ("eX", "eN", "iX", "iN"),
    "Kp": None,
}


def _to_letters(terms: Mapping) -> dict:
    out: dict = {}
    for (s, dl2, dn2, word), c in terms.items():
        for (s2, d2, e2, letters), c2 in _EXPANSION[word].items():
            _add(out, (s * s2, dl2 + d2, dn2 + e2, letters), c * c2)
    return out


def _from_letters(family: str, terms: Mapping) -> dict:
    table = _INVERSE[family]
    out: dict = {}
    for (s, dl2, dn2, letters), c in terms.items():
        if letters not in table:
            raise KernelError(f"letter word {letters} outside the {family} basis")
        for c2, xn, word in table[letters]:
            _add(out, (s * (-1) ** xn, dl2 + 2 * xn, dn2, word), c * c2)
    return out


def _check_bases():
    for family, words in WORDS.items():
        for w in words:
            back = _from_letters(family, _normalize(_EXPANSION[w]))
            if back != {(1, 0, 0, w): ONE}:
                raise KernelError(f"word basis round trip failed for {w}")
            spelled = _normalize({(1, 0, 0, WORD_LETTERS[w]): ONE})
            if spelled != _normalize(_EXPANSION[w]):
                raise KernelError(f"letter spelling of {w} disagrees with its expansion")


_check_bases()


# ---------------------------------------------------------------------------
# kernel expressions

@dataclass(frozen=True)
class KernelAtom:
    family: str
    sign: int
    dl2: int
    dn2: int
    word: str

    @property
    def dl(self) -> Fraction:
        return Fraction(self.dl2, 2)

    @property
    def dn(self) -> Fraction:
        return Fraction(self.dn2, 2)

    def label(self) -> str:
        sgn = "+" if self.sign > 0 else "-"
        return f"K{sgn}[λ{_offset(self.dl)},ν{_offset(self.dn)}]·{self.word}"


def _offset(q: Fraction) -> str:
    if q == 0:
        return ""
    return f"+{q}" if q > 0 else f"{q}"


class KernelExpr:
    """Finite sum of atoms of one family with rational-function coefficients."""

    __slots__ = ("family", "terms")

    def __init__(self, family: str, terms: Mapping | None = None):
        if family not in FAMILIES:
            raise KernelError(f"unknown family {family!r}")
        self.family = family
        self.terms: dict = {}
        for key, c in (terms or {}).items():
            if key[3] not in WORDS[family]:
                raise KernelError(f"word {key[3]!r} not in the {family} word set")
            _add(self.terms, key, rf(c))

    @classmethod
    def atom(cls, family, sign=1, dl2=0, dn2=0, word=None, coeff=ONE):
        word = word or WORDS[family][0]
        return cls(family, {(sign, dl2, dn2, word): coeff})

    def atoms(self) -> list[tuple[KernelAtom, RationalFunction]]:
        return [(KernelAtom(self.family, *key), c) for key, c in sorted(self.terms.items(), key=_sort_key)]

    def coefficient(self, sign, dl2, dn2, word) -> RationalFunction:
        return self.terms.get((sign, dl2, dn2, word), ZERO)

    def _check(self, other):
        if not isinstance(other, KernelExpr):
            return NotImplemented
        if other.family != self.family:
            raise KernelError("cannot combine kernels of different families")
        return other

    def __add__(self, other):
        other = self._check(other)
        out = KernelExpr(self.family, self.terms)
        for key, c in other.terms.items():
            _add(out.terms, key, c)
        return out

    def __neg__(self):
        return KernelExpr(self.family, {k: -c for k, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, scalar):
        scalar = rf(scalar)
        return KernelExpr(self.family, {k: c * scalar for k, c in self.terms.items()})

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, KernelExpr):
            return NotImplemented
        if other.family != self.family:
            return False
        return (self - other).is_zero()

    __hash__ = None

    def is_zero(self) -> bool:
        return not self.terms

    def shifted(self, dl2: int = 0, dn2: int = 0, flip: bool = False) -> "KernelExpr":
        """Relabel every atom; coefficients are left untouched."""
        f = -1 if flip else 1
        return KernelExpr(self.family, {(s * f, a + dl2, b + dn2, w): c
                                        for (s, a, b, w), c in self.terms.items()})

    def substitute(self, bindings) -> "KernelExpr":
        return KernelExpr(self.family, {k: substitute(c, bindings) for k, c in self.terms.items()})

    def __repr__(self):
        return f"KernelExpr({self.family}: {self.render()})"

    def render(self) -> str:
        if not self.terms:
            return "0"
        return " + ".join(f"({render(c)})·{a.label()}" for a, c in self.atoms())


def _sort_key(item):
    (s, dl2, dn2, w), _ = item
    return (w, -s, dl2, dn2)


def generic_kernel(family: str, sign: int = 1, dl2: int = 0, dn2: int = 0) -> KernelExpr:
    """K_{λ,ν}, K-slash_{λ,ν} or K^(p)_{λ,ν}, optionally at shifted parameters."""
    if family == SCALAR:
        return KernelExpr.atom(SCALAR, sign, dl2, dn2, "1")
    if family == SPINOR:
        return KernelExpr.atom(SPINOR, sign, dl2 - 1, dn2 + 1, "X")
    if family == FORM:
        return KernelExpr(FORM, {(sign, dl2, dn2, "W1"): ONE,
                                 (sign, dl2 - 2, dn2 + 2, "W2"): rf(-2)})
    raise KernelError(f"unknown family {family!r}")


def riesz_form_kernel(sign: int = 1, dl2: int = 0, dn2: int = 0) -> KernelExpr:
    """K_{λ-1,ν+1}(i_xε_x - ε_x i_x) written in the form word basis."""
    return KernelExpr(FORM, {
        (sign, dl2, dn2, "W1"): ONE, (sign, dl2, dn2, "W4"): ONE,
        (sign, dl2 - 2, dn2 + 2, "W2"): rf(-2),
        (-sign, dl2, dn2 + 2, "W5"): rf(-2),
        (sign, dl2 - 2, dn2 + 2, "W6"): rf(2),
    })


def engine_apply(gen: str, e: KernelExpr) -> KernelExpr:
    """Apply a generator by direct derivation, bypassing the rule table."""
    if gen not in GENERATORS[e.family]:
        raise KernelError(f"{gen} is not a {e.family} generator")
    out = _ENGINE[gen](_normalize(_to_letters(e.terms)))
    return KernelExpr(e.family, _from_letters(e.family, out))


# ---------------------------------------------------------------------------
# stated rules, transcribed with respect to the family's own parameters

L, V = LAM, NU


def _t(c, flip, dl, dn, letters):
    return (rf(c), flip, Fraction(dl), Fraction(dn), tuple(letters))


_W1 = WORD_LETTERS["W1"]
_W2 = WORD_LETTERS["W2"]
_W3 = WORD_LETTERS["W3"]
_KS = ("X",)  # K-slash_{λ,ν} = K_{λ-1/2,ν+1/2} x·
_h = HALF

# (family, word, gen) -> (provenance, base offset (dλ, dν), base factor, outputs)
# meaning gen(factor · K_{λ+dλ,ν+dν} word) = Σ c · K^{±}_{λ+a,ν+b} letters.
STATED = {
    (SCALAR, "1", "MulXn"): (LEMMA, (0, 0), 1, [_t(1, True, 1, 0, ())]),
    (SCALAR, "1", "Dn"): (LEMMA, (0, 0), 1, [
        _t(L + V - N, True, -1, 0, ()), _t(-2 * V, True, 0, 1, ())]),
    (SCALAR, "1", "Lap"): (LEMMA, (0, 0), 1, [
        _t(pochhammer(L + V - N - 1, 2), False, -2, 0, ()),
        _t(-2 * V * (2 * L - N - 2), False, -1, 1, ())]),
    (SPINOR, "X", "MulXn"): (LEMMA, (-_h, _h), 1, [_t(1, True, 1 - _h, _h, _KS)]),
    (SPINOR, "X", "Dn"): (LEMMA, (-_h, _h), 1, [
        _t(L + V - N, True, -1 - _h, _h, _KS),
        _t(-2 * (V + _h), True, -_h, 1 + _h, _KS),
        _t(1, False, -_h, _h, ("N",))]),
    (SPINOR, "X", "Dirac"): (LEMMA, (-_h, _h), 1, [
        _t(2 * (V + (1 - N) / 2), False, -_h, _h, ()),
        # e_n · K-slash^∓_{λ-1,ν}
        _t(L + V - N, True, -1 - _h, _h, ("N", "X"))]),
    (SPINOR, "X", "Lap"): (LEMMA, (-_h, _h), 1, [
        _t(pochhammer(L + V - N - 1, 2), False, -2 - _h, _h, _KS),
        _t(-2 * (V + _h) * (2 * L - N - 1), False, -1 - _h, 1 + _h, _KS),
        _t(2 * (L + V - N), True, -1 - _h, _h, ("N",))]),
    # summand identities for K^(p) = K_{λ,ν} W1 - 2 K_{λ-1,ν+1} W2
    (FORM, "W1", "Dn"): (PROOF_IDENTITY, (0, 0), 1, [
        _t(L + V - N, True, -1, 0, _W1), _t(-2 * V, True, 0, 1, _W1)]),
    (FORM, "W2", "Dn"): (PROOF_IDENTITY, (-1, 1), -2, [
        _t(-2 * (L + V - N), True, -2, 1, _W2),
        _t(4 * (V + 1), True, -1, 2, _W2),
        _t(-2, False, -1, 1, _W3)]),
    (FORM, "W1", "EnDelta"): (PROOF_IDENTITY, (0, 0), 1, [_t(2 * V, False, -1, 1, _W3)]),
    (FORM, "W2", "EnDelta"): (PROOF_IDENTITY, (-1, 1), -2, [
        _t(-2 * (V - L + P), False, -1, 1, _W3)]),
    (FORM, "W1", "DIn"): (PROOF_IDENTITY, (0, 0), 1, []),
    (FORM, "W2", "DIn"): (PROOF_IDENTITY, (-1, 1), -2, [
        _t(4 * (V + 1), True, -1, 2, _W2),
        _t(-2 * (L + V - N + 1), False, -1, 1, _W3),
        # printed with K^±_{λ-1,ν+1}; the lemma and a direct derivation give K^∓_{λ,ν+1}
        _t(-2 * P, True, 0, 1, _W1)]),
    (FORM, "W1", "DDelta"): (PROOF_IDENTITY, (0, 0), 1, [
        _t(-4 * pochhammer(V, 2), False, -2, 2, _W2),
        _t(2 * V * (L + V - N), True, -2, 1, _W3),
        _t(2 * P * V, False, -1, 1, _W1)]),
    (FORM, "W2", "DDelta"): (PROOF_IDENTITY, (-1, 1), -2, [
        _t(4 * (V + 1) * (V - L + P), False, -2, 2, _W2),
        _t(-2 * (L + V - N) * (V - L + P), True, -2, 1, _W3),
        _t(-2 * P * (V - L + P), False, -1, 1, _W1)]),
    (FORM, "W1", "DeltaD"): (PROOF_IDENTITY, (0, 0), 1, [
        _t(4 * pochhammer(V, 2), False, -2, 2, _W2),
        _t(-2 * V * (L + V - N), True, -2, 1, _W3),
        _t(2 * V * (2 * L - N - P - 2), False, -1, 1, _W1),
        _t(-pochhammer(L + V - N - 1, 2), False, -2, 0, _W1)]),
    (FORM, "W2", "DeltaD"): (PROOF_IDENTITY, (-1, 1), -2, [
        _t(-4 * (V + 1) * (L + V - N + P), False, -2, 2, _W2),
        _t(2 * pochhammer(L + V - N - 1, 2), False, -3, 1, _W2),
        _t(-2 * (L + V - N) * (L - V - P - 2), True, -2, 1, _W3),
        _t(-2 * P * (L - V - P - 2), False, -1, 1, _W1)]),
}


def _stated_as_rule(family, entry) -> dict:
    """Rewrite a stated identity as the rule for the word at zero offset."""
    _, (bl, bn), factor, outputs = entry
    terms: dict = {}
    for c, flip, dl, dn, letters in outputs:
        _add(terms, (-1 if flip else 1, int(2 * (dl - bl)), int(2 * (dn - bn)), letters), c)
    shift = {"lam": LAM - Fraction(bl), "nu": NU - Fraction(bn)}
    terms = {k: substitute(c, shift) / factor for k, c in terms.items()}
    return _from_letters(family, _normalize(terms))


# ---------------------------------------------------------------------------
# rule table

@dataclass(frozen=True)
class RuleOutput:
    flip: bool
    dl2: int
    dn2: int
    word: str
    coeff: RationalFunction


@dataclass(frozen=True)
class Rule:
    family: str
    word: str
    gen: str
    provenance: str
    outputs: tuple[RuleOutput, ...]
    engine_agrees: bool

    def as_dict(self) -> dict:
        return {(-1 if o.flip else 1, o.dl2, o.dn2, o.word): o.coeff for o in self.outputs}

    def dump(self) -> str:
        parts = []
        for o in self.outputs:
            sgn = "∓" if o.flip else "±"
            parts.append(f"[{render(o.coeff)}] K{sgn}[{_offset(Fraction(o.dl2, 2)) or '0'},"
                         f"{_offset(Fraction(o.dn2, 2)) or '0'}]·{o.word}")
        rhs = " + ".join(parts) if parts else "0"
        return f"{self.family}\t{self.word}\t{self.gen}\t{self.provenance}\t{rhs}"


def _outputs(terms: Mapping) -> tuple[RuleOutput, ...]:
    items = sorted(terms.items(), key=_sort_key)
    return tuple(RuleOutput(s < 0, dl2, dn2, w, c) for (s, dl2, dn2, w), c in items)


@lru_cache(maxsize=None)
def rule_table() -> dict[tuple[str, str, str], Rule]:
    table = {}
    for family in FAMILIES:
        for word in WORDS[family]:
            for gen in GENERATORS[family]:
                derived = engine_apply(gen, KernelExpr.atom(family, 1, 0, 0, word)).terms
                entry = STATED.get((family, word, gen))
                if entry is None:
                    table[family, word, gen] = Rule(family, word, gen, DERIVED, _outputs(derived), True)
                    continue
                stated = _stated_as_rule(family, entry)
                agrees = KernelExpr(family, stated) == KernelExpr(family, derived)
                table[family, word, gen] = Rule(family, word, gen, entry[0], _outputs(stated), agrees)
    return table


def word_closure(family: str, start: KernelExpr | None = None) -> set[str]:
    """Words reachable from ``start`` (default the generic kernel) under the generators."""
    start = generic_kernel(family) if start is None else start
    seen = {w for (_, _, _, w) in start.terms}
    frontier = list(seen)
    table = rule_table()
    while frontier:
        w = frontier.pop()
        for gen in GENERATORS[family]:
            for o in table[family, w, gen].outputs:
                if o.word not in seen:
                    seen.add(o.word)
                    frontier.append(o.word)
    return seen


# words reachable from the generic kernels; the form words W4..W6 only enter
# through the Riesz form kernel, which is closed in all six
GENERIC_WORDS = {SCALAR: {"1"}, SPINOR: {"1", "X", "N", "XN"}, FORM: {"W1", "W2", "W3"}}


def _check_closure():
    for family in FAMILIES:
        if word_closure(family) != GENERIC_WORDS[family]:
            raise KernelError(f"{family} word closure differs from the declared word set")
    if word_closure(FORM, riesz_form_kernel()) != set(WORDS[FORM]):
        raise KernelError("the form word basis is not closed")


@lru_cache(maxsize=None)
def _instantiated(family, word, gen, dl2, dn2):
    rule = rule_table()[family, word, gen]
    bind = {"lam": LAM + Fraction(dl2, 2), "nu": NU + Fraction(dn2, 2)}
    return tuple((o, substitute(o.coeff, bind)) for o in rule.outputs)


def apply_gen(gen: str, e: KernelExpr) -> KernelExpr:
    """Apply a generator atom by atom through the rule table."""
    if gen not in GENERATORS[e.family]:
        raise KernelError(f"{gen} is not a {e.family} generator")
    out: dict = {}
    for (s, dl2, dn2, w), c in e.terms.items():
        for o, coeff in _instantiated(e.family, w, gen, dl2, dn2):
            _add(out, (-s if o.flip else s, dl2 + o.dl2, dn2 + o.dn2, o.word), c * coeff)
    return KernelExpr(e.family, out)


def apply_chain(gens: Iterable[str], e: KernelExpr) -> KernelExpr:
    """Apply generators right to left, as in composition ``g1∘g2∘...``."""
    for gen in reversed(tuple(gens)):
        e = apply_gen(gen, e)
    return e


# ---------------------------------------------------------------------------
# Bernstein-Sato operators

def p_operator_terms(family: str, lam: RationalFunction):
    """The operator as a list of (coefficient, generator chain)."""
    lam = rf(lam)
    if family == SCALAR:
        # x_nΔ - (2λ-n-2)∂_n = Δ(x_n·) + (n-2λ)∂_n
        return [(ONE, ("Lap", "MulXn")), (N - 2 * lam, ("Dn",))]
    if family == SPINOR:
        # D(e_n·φ) = -e_n·Dφ - 2∂_nφ
        return [(N - 2 * lam + 1, ("Dn",)), (rf(-1), ("LeftN", "Dirac")), (rf(-2), ("Dn",)),
                (ONE, ("Lap", "MulXn"))]
    if family == FORM:
        a = lam - N + P
        b = lam - P
        c = 2 * lam - N - 2
        return [
            (-c * (a - 1) * b, ("Dn",)),
            (-c * a, ("EnDelta",)),
            (-c * b, ("DIn",)),
            (-(a - 1) * b, ("MulXn", "DeltaD")),
            (-a * (b - 1), ("MulXn", "DDelta")),
        ]
    raise KernelError(f"unknown family {family!r}")


def apply_P(family: str, lam, e: KernelExpr) -> KernelExpr:
    if e.family != family:
        raise KernelError(f"operator for {family} applied to a {e.family} kernel")
    out = KernelExpr(family)
    for c, chain in p_operator_terms(family, lam):
        out = out + apply_chain(chain, e) * c
    return out


def shift_theorem_sides(family: str, sign: int = 1, second: bool = False):
    """(lhs, rhs) of the spectral shift identity."""
    k = generic_kernel(family, sign)
    if second:
        if family != SCALAR:
            raise KernelError("the second shift identity is scalar only")
        lhs = apply_P(SCALAR, (LAM + NU + 1) / 2, k)
        rhs = generic_kernel(SCALAR, -sign, 0, 2) * (2 * NU * (NU - LAM + 1))
        return lhs, rhs
    lhs = apply_P(family, LAM, k)
    factor = (LAM + NU - N) * (NU - LAM + 1)
    if family == FORM:
        factor = factor * (LAM - N + P - 1) * (LAM - P)
    return lhs, generic_kernel(family, -sign, -2, 0) * factor


def verify_shift_theorem(family: str) -> VerificationReport:
    rep = VerificationReport()
    anchors = {
        SCALAR: "scalar spectral shift theorem",
        SPINOR: "spinor spectral shift theorem",
        FORM: "form spectral shift theorem",
    }
    cases = [(s, False) for s in (1, -1)]
    if family == SCALAR:
        cases += [(s, True) for s in (1, -1)]
    for sign, second in cases:
        with stopwatch() as t:
            lhs, rhs = shift_theorem_sides(family, sign, second)
            ok = lhs == rhs
        tag = ("second" if second else "first") + ("+" if sign > 0 else "-")
        rep.exact("shift", f"{family}/{tag}", anchors[family] + (", second identity" if second else ""),
                  ok, elapsed=t())
    if family == FORM:
        with stopwatch() as t:
            lhs = apply_P(FORM, LAM, generic_kernel(FORM))
            ok = all(c.is_zero() for c in form_w3_contributions().values())
            for key, collected, expected in form_cancellations():
                # the K^(p) target lives on W1 at (λ-1,ν); its W2 part is checked by the theorem
                ok = ok and collected == expected and lhs.coefficient(*key) == expected
        rep.exact("shift", "form/W3-cancellation", "form shift theorem, cancellation of ε_n i_x i_n ε_n terms",
                  ok, elapsed=t())
    return rep


def form_cancellations() -> list[tuple[tuple, RationalFunction, RationalFunction]]:
    """(atom, hand-collected coefficient, expected value) for P^p(λ)K^(p)_{λ,ν}.

    The hand-collected coefficients group the contributions of the five
    operator terms on the four atoms that survive in the lemma.
    """
    L_, V_ = LAM, NU
    c = 2 * L_ - N - 2
    a = L_ - N + P
    b = L_ - P
    target = (L_ + V_ - N) * (V_ - L_ + 1) * (a - 1) * b
    return [
        ((-1, -2, 0, "W1"),
         -c * (a - 1) * b * (L_ + V_ - N) + (a - 1) * b * pochhammer(L_ + V_ - N - 1, 2), target),
        ((-1, 0, 2, "W1"),
         2 * V_ * c * (a - 1) * b + 2 * P * c * b - 2 * P * a * pochhammer(b - 1, 2)
         - (a - 1) * b * (2 * V_ * (2 * L_ - N - P - 2) - 2 * P * (L_ - V_ - P - 2)), ZERO),
        ((-1, -2, 4, "W2"),
         -4 * (V_ + 1) * c * (a - 1) * b - 4 * (V_ + 1) * c * b
         + 4 * (V_ + 1) * a * pochhammer(b - 1, 2) + 4 * (V_ + 1) * pochhammer(a - 1, 2) * b, ZERO),
        ((1, -2, 2, "W3"),
         2 * c * (a - 1) * b - 2 * c * a * b + 2 * c * b * (L_ + V_ - N + 1)
         - 2 * a * pochhammer(b - 1, 2) * (L_ + V_ - N) + 2 * (a - 1) * b * (L_ + V_ - N) * (b - 2), ZERO),
    ]


def form_w3_contributions() -> dict:
    """Total coefficient of each W3 atom in P^p(λ)K^(p)_{λ,ν}, grouped by atom."""
    lhs = apply_P(FORM, LAM, generic_kernel(FORM))
    seen = {}
    for c, chain in p_operator_terms(FORM, LAM):
        for key, v in apply_chain(chain, generic_kernel(FORM)).terms.items():
            if key[3] == "W3":
                seen.setdefault(key, ZERO)
    return {key: lhs.coefficient(*key) for key in seen}


# ---------------------------------------------------------------------------
# ansatz systems

ANSATZ = {
    SCALAR: [("Dn",), ("Lap", "MulXn")],
    SPINOR: [("Dn",), ("Dirac", "LeftN"), ("Lap", "MulXn")],
    FORM: [("Dn",), ("EnDelta",), ("DIn",), ("MulXn", "DDelta"), ("MulXn", "DeltaD")],
}


def expected_ansatz(family: str) -> list[RationalFunction]:
    if family == SCALAR:
        return [N - 2 * LAM, ONE]
    if family == SPINOR:
        return [N - 2 * LAM + 1, ONE, ONE]
    c = 2 * LAM - N - 2
    a, b = LAM - N + P, LAM - P
    return [-c * (a - 1) * b, -c * a, -c * b, -a * (b - 1), -(a - 1) * b]


@dataclass
class AnsatzResult:
    family: str
    system: LinSystem
    solution: object
    expected: list

    @property
    def nullity(self) -> int:
        return self.solution.nullity


def ansatz_system(family: str) -> LinSystem:
    """Equations forcing Σ u_i·(chain_i) K = target on every independent atom."""
    chains = ANSATZ[family]
    k = generic_kernel(family)
    _, target = shift_theorem_sides(family)
    images = [apply_chain(ch, k) for ch in chains]
    keys = set(target.terms)
    for im in images:
        keys |= set(im.terms)
    rows = []
    for key in sorted(keys, key=lambda kk: (kk[3], -kk[0], kk[1], kk[2])):
        coeffs = [im.coefficient(*key) for im in images]
        if all(c.is_zero() for c in coeffs) and target.coefficient(*key).is_zero():
            continue
        rows.append((coeffs, target.coefficient(*key)))
    return LinSystem(rows, [f"u{i + 1}" for i in range(len(chains))])


def ansatz_solve(family: str) -> AnsatzResult:
    system = ansatz_system(family)
    return AnsatzResult(family, system, solve_linear(system), expected_ansatz(family))


def ansatz_check(family: str) -> VerificationReport:
    """Scalar and spinor systems are uniquely solvable; the form system has a one-dimensional kernel."""
    rep = VerificationReport()
    with stopwatch() as t:
        res = ansatz_solve(family)
        sol = res.solution
        if family == FORM:
            ok = sol.consistent and res.nullity == 1 and in_solution_space(sol, res.expected)
            detail = f"nullity {res.nullity}"
        else:
            ok = sol.unique and all(rf_eq(a, b) for a, b in zip(sol.particular, res.expected))
            detail = "unique" if sol.unique else f"nullity {res.nullity}"
    rep.exact("ansatz", family, f"{family} ansatz for the Bernstein-Sato operator", ok,
              detail=detail, elapsed=t())
    return rep


def ansatz_operator(family: str) -> KernelExpr:
    """The ansatz applied to the generic kernel with symbolic unknowns u1.."""
    k = generic_kernel(family)
    out = KernelExpr(family)
    for i, ch in enumerate(ANSATZ[family]):
        out = out + apply_chain(ch, k) * u(i + 1)
    return out


# ---------------------------------------------------------------------------
# Casimir operator and specialisation to Riesz distributions

def casimir_apply(sign: int = 1) -> KernelExpr:
    """C(μ) = x_n²Δ + 2(μ+1)x_n∂_n + (μ+n/2)(μ-n/2+1) at μ = -λ+n/2."""
    mu = -LAM + N / 2
    k = generic_kernel(SCALAR, sign)
    return (apply_chain(("MulXn", "MulXn", "Lap"), k)
            + apply_chain(("MulXn", "Dn"), k) * (2 * (mu + 1))
            + k * ((mu + N / 2) * (mu - N / 2 + 1)))


def casimir_eigenvalue() -> RationalFunction:
    return -NU * (N - 1 - NU)


def casimir_eigen_check() -> VerificationReport:
    rep = VerificationReport()
    for sign in (1, -1):
        with stopwatch() as t:
            ok = casimir_apply(sign) == generic_kernel(SCALAR, sign) * casimir_eigenvalue()
        rep.exact("casimir", f"eigen{'+' if sign > 0 else '-'}", "Casimir eigen-equation", ok, elapsed=t())
    return rep


# the Riesz point: λ = μ/2 + n, ν = -μ/2, with μ reusing the λ slot
RIESZ_POINT = {"lam": LAM / 2 + N, "nu": -LAM / 2}


def specialize(e: KernelExpr) -> dict:
    """Map to terms (sign, |x_n|-exponent, r-exponent offset from μ, word)."""
    out: dict = {}
    for (s, dl2, dn2, w), c in e.terms.items():
        key = (s, Fraction(dl2 + dn2, 2), Fraction(-dn2), w)
        _add(out, key, substitute(c, RIESZ_POINT))
    return out


def specialize_to_riesz(family: str) -> VerificationReport:
    rep = VerificationReport()
    mu = LAM
    if family == SCALAR:
        with stopwatch() as t:
            ok = not specialize(apply_P(SCALAR, LAM, generic_kernel(SCALAR)))
        rep.exact("riesz-specialization", "scalar/P", "P(μ/2+n) r^μ = 0", ok, elapsed=t())
        with stopwatch() as t:
            lap = specialize(apply_gen("Lap", generic_kernel(SCALAR)))
            ok = lap == {(1, Fraction(0), Fraction(-2), "1"): mu * (mu + N - 2)}
        rep.exact("riesz-specialization", "scalar/Laplacian", "Δ r^μ = μ(μ+n-2) r^(μ-2)", ok, elapsed=t())
    elif family == SPINOR:
        with stopwatch() as t:
            ok = not specialize(apply_P(SPINOR, LAM, generic_kernel(SPINOR)))
        rep.exact("riesz-specialization", "spinor/P", "spinor P(μ/2+n) r-slash^μ = 0", ok, elapsed=t())
        with stopwatch() as t:
            lap = specialize(apply_gen("Lap", generic_kernel(SPINOR)))
            # r-slash^(μ-2) = r^(μ-3) x·
            ok = lap == {(1, Fraction(0), Fraction(-3), "X"): (mu - 1) * (mu + N - 1)}
        rep.exact("riesz-specialization", "spinor/Laplacian", "Δ r-slash^μ = (μ-1)(μ+n-1) r-slash^(μ-2)",
                  ok, elapsed=t())
    else:
        raise KernelError("specialisation is defined for the scalar and spinor families")
    return rep


def rule_table_dump() -> str:
    lines = [rule.dump() for _, rule in sorted(rule_table().items())]
    return "\n".join(lines) + "\n"


_check_closure()
