"""Exact multivariate polynomials and rational functions over the rationals.

The indeterminates are fixed: ``lam`` (λ), ``nu`` (ν), ``n``, ``p`` and the
ansatz unknowns ``u1`` .. ``u5``.  Arithmetic is delegated to FLINT's sparse
``fmpq_mpoly``; this module only supplies the contract the rest of the
package relies on (canonical ordering and rendering, Fraction-valued
coefficients, substitution, and linear solving over the fraction field).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import flint

Rat = Fraction

NAMES: tuple[str, ...] = ("lam", "nu", "n", "p", "u1", "u2", "u3", "u4", "u5")
UNKNOWNS: tuple[str, ...] = NAMES[4:]

_DISPLAY = {"lam": "λ", "nu": "ν"}
_LATEX = {"lam": r"\lambda", "nu": r"\nu"}
_INDEX = {name: i for i, name in enumerate(NAMES)}

_CTX = flint.fmpq_mpoly_ctx.get(NAMES, "deglex")
_ZERO = _CTX.from_dict({})
_ONE = _CTX.constant(1)


class InvalidInput(ValueError):
    """Raised for malformed arguments such as a zero denominator."""


def _fmpq(x) -> flint.fmpq:
    if isinstance(x, flint.fmpq):
        return x
    if isinstance(x, Fraction):
        return flint.fmpq(x.numerator, x.denominator)
    if isinstance(x, int):
        return flint.fmpq(x)
    raise TypeError(f"not an exact rational: {x!r}")


def _frac(q) -> Fraction:
    return Fraction(int(q.p), int(q.q))


def _raw(x):
    """Coerce ints, Fractions and Poly into a raw fmpq_mpoly."""
    if isinstance(x, Poly):
        return x._p
    return _CTX.constant(_fmpq(x))


class Poly:
    """Polynomial in the fixed indeterminates with rational coefficients."""

    __slots__ = ("_p",)

    def __init__(self, raw=None):
        self._p = _ZERO if raw is None else raw

    @classmethod
    def var(cls, name: str) -> "Poly":
        return cls(_CTX.gen(_INDEX[name]))

    @classmethod
    def const(cls, c) -> "Poly":
        return cls(_CTX.constant(_fmpq(c)))

    @classmethod
    def from_terms(cls, terms: Mapping[tuple[int, ...], object]) -> "Poly":
        full = {}
        for mono, c in terms.items():
            mono = tuple(mono) + (0,) * (len(NAMES) - len(mono))
            if c:
                full[mono] = _fmpq(Fraction(c))
        return cls(_CTX.from_dict(full))

    def terms(self) -> dict[tuple[int, ...], Fraction]:
        """Exponent tuple -> coefficient, in canonical (deglex) order."""
        return {tuple(m): _frac(c) for m, c in self._p.terms()}

    def is_zero(self) -> bool:
        return self._p.is_zero()

    def is_constant(self) -> bool:
        return self._p.is_constant()

    def constant_value(self) -> Fraction:
        if not self._p.is_constant():
            raise InvalidInput("polynomial is not constant")
        return _frac(self._p.coefficient(0)) if not self._p.is_zero() else Fraction(0)

    def degree(self, name: str) -> int:
        if self._p.is_zero():
            return -1
        return int(self._p.degrees()[_INDEX[name]])

    def __add__(self, other):
        return Poly(self._p + _raw(other))

    __radd__ = __add__

    def __sub__(self, other):
        return Poly(self._p - _raw(other))

    def __rsub__(self, other):
        return Poly(_raw(other) - self._p)

    def __mul__(self, other):
        return Poly(self._p * _raw(other))

    __rmul__ = __mul__

    def __neg__(self):
        return Poly(-self._p)

    def __pow__(self, k: int):
        return Poly(self._p ** k)

    def __eq__(self, other):
        try:
            return self._p == _raw(other)
        except TypeError:
            return NotImplemented

    def __hash__(self):
        return hash(str(self._p))

    def __repr__(self):
        return f"Poly({render(self)})"


def poly_arith(a: Poly, b: Poly, kind: str) -> Poly:
    if kind == "add":
        return a + b
    if kind == "sub":
        return a - b
    if kind == "mul":
        return a * b
    raise InvalidInput(f"unknown polynomial operation {kind!r}")


class RationalFunction:
    """Quotient of two polynomials.

    Values are kept reduced (gcd cancelled, monic denominator) so that the
    printed form is canonical; equality is still decided by
    cross-multiplication.
    """

    __slots__ = ("_num", "_den")

    def __init__(self, num=0, den=1, *, _reduced=False):
        num = _raw(num) if not isinstance(num, flint.fmpq_mpoly) else num
        den = _raw(den) if not isinstance(den, flint.fmpq_mpoly) else den
        if den.is_zero():
            raise InvalidInput("zero denominator")
        if not _reduced:
            num, den = _reduce(num, den)
        self._num = num
        self._den = den

    # constructors -------------------------------------------------------
    @classmethod
    def var(cls, name: str) -> "RationalFunction":
        return cls(_CTX.gen(_INDEX[name]), _ONE, _reduced=True)

    @classmethod
    def coerce(cls, x) -> "RationalFunction":
        if isinstance(x, RationalFunction):
            return x
        if isinstance(x, Poly):
            return cls(x._p, _ONE, _reduced=True)
        if isinstance(x, flint.fmpq_mpoly):
            return cls(x, _ONE, _reduced=True)
        return cls(_CTX.constant(_fmpq(Fraction(x))), _ONE, _reduced=True)

    # accessors ----------------------------------------------------------
    @property
    def num(self) -> Poly:
        return Poly(self._num)

    @property
    def den(self) -> Poly:
        return Poly(self._den)

    def is_zero(self) -> bool:
        return self._num.is_zero()

    def is_polynomial(self) -> bool:
        return self._den.is_one()

    def is_constant(self) -> bool:
        return self._den.is_one() and self._num.is_constant()

    def constant_value(self) -> Fraction:
        if not self.is_constant():
            raise InvalidInput(f"{render(self)} is not a constant")
        return Poly(self._num).constant_value()

    def free_names(self) -> set[str]:
        used = set()
        for p in (self._num, self._den):
            if p.is_zero():
                continue
            for i, d in enumerate(p.degrees()):
                if d > 0:
                    used.add(NAMES[i])
        return used

    # arithmetic ---------------------------------------------------------
    def __add__(self, other):
        o = _coerce_or_none(other)
        if o is None:
            return NotImplemented
        if self._den.is_one() and o._den.is_one():
            return RationalFunction(self._num + o._num, _ONE, _reduced=True)
        return RationalFunction(self._num * o._den + o._num * self._den, self._den * o._den)

    __radd__ = __add__

    def __neg__(self):
        return RationalFunction(-self._num, self._den, _reduced=True)

    def __sub__(self, other):
        o = _coerce_or_none(other)
        if o is None:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = _coerce_or_none(other)
        if o is None:
            return NotImplemented
        if self._den.is_one() and o._den.is_one():
            return RationalFunction(self._num * o._num, _ONE, _reduced=True)
        return RationalFunction(self._num * o._num, self._den * o._den)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = _coerce_or_none(other)
        if o is None:
            return NotImplemented
        if o._num.is_zero():
            raise ZeroDivisionError("division by the zero rational function")
        return RationalFunction(self._num * o._den, self._den * o._num)

    def __rtruediv__(self, other):
        return RationalFunction.coerce(other) / self

    def __pow__(self, k: int):
        if k >= 0:
            return RationalFunction(self._num ** k, self._den ** k, _reduced=True)
        return RationalFunction.coerce(1) / (self ** (-k))

    def __eq__(self, other):
        o = _coerce_or_none(other)
        if o is None:
            return NotImplemented
        return rf_eq(self, o)

    def __hash__(self):
        return hash((str(self._num), str(self._den)))

    def __bool__(self):
        return not self._num.is_zero()

    def __repr__(self):
        return f"RF({render(self)})"

    def __str__(self):
        return render(self)

    # evaluation ---------------------------------------------------------
    def evaluate(self, point: Mapping[str, object]) -> Fraction:
        """Exact value at a point assigning every free indeterminate."""
        vals = {k: _fmpq(Fraction(v)) for k, v in point.items()}
        num = self._num.subs(vals) if vals else self._num
        den = self._den.subs(vals) if vals else self._den
        if not (num.is_constant() and den.is_constant()):
            raise InvalidInput("evaluation point leaves free indeterminates")
        d = Poly(den).constant_value()
        if d == 0:
            raise ZeroDivisionError("denominator vanishes at evaluation point")
        return Poly(num).constant_value() / d

    def float_pair(self):
        """Return float evaluators ``(num, den)``; values are indexed like NAMES."""
        def compile_(poly):
            terms = [(tuple(int(e) for e in m), float(_frac(c))) for m, c in poly.terms()]

            def ev(vals):
                total = 0.0
                for mono, c in terms:
                    t = c
                    for i, e in enumerate(mono):
                        if e:
                            t *= vals[i] ** e
                    total += t
                return total
            return ev

        return compile_(self._num), compile_(self._den)

    def float_evaluator(self):
        """Return ``f(values)`` evaluating at floats; values is indexed like NAMES."""
        num, den = self.float_pair()
        return lambda vals: num(vals) / den(vals)


RF = RationalFunction


def _reduce(num, den):
    if den.is_constant():
        c = den.coefficient(0)
        return num / c, _ONE
    if num.is_zero():
        return _ZERO, _ONE
    g = num.gcd(den)
    if not g.is_one():
        num = _exact_div(num, g)
        den = _exact_div(den, g)
    lc = den.leading_coefficient()
    if lc != 1:
        num = num / lc
        den = den / lc
    if den.is_constant():
        return num / den.coefficient(0), _ONE
    return num, den


def _exact_div(a, b):
    q, r = divmod(a, b)
    if not r.is_zero():
        raise ArithmeticError("inexact division in gcd reduction")
    return q


def _coerce_or_none(x):
    if isinstance(x, RationalFunction):
        return x
    if isinstance(x, (int, Fraction, Poly, flint.fmpq_mpoly)):
        return RationalFunction.coerce(x)
    return None


def rf(x) -> RationalFunction:
    return RationalFunction.coerce(x)


def var(name: str) -> RationalFunction:
    return RationalFunction.var(name)


LAM = var("lam")
NU = var("nu")
N = var("n")
P = var("p")
ONE = rf(1)
ZERO = rf(0)


def u(i: int) -> RationalFunction:
    return var(f"u{i}")


def rf_eq(a: RationalFunction, b: RationalFunction) -> bool:
    """Zero test of num_a*den_b - num_b*den_a."""
    a, b = rf(a), rf(b)
    if a._den.is_zero() or b._den.is_zero():
        raise InvalidInput("zero denominator")
    return (a._num * b._den - b._num * a._den).is_zero()


def substitute(f, bindings: Mapping[str, object]) -> RationalFunction:
    """Replace indeterminates by rational functions."""
    f = rf(f)
    if not bindings:
        return f
    images = {k: rf(v) for k, v in bindings.items()}
    for k in images:
        if k not in _INDEX:
            raise InvalidInput(f"unknown indeterminate {k!r}")
    if all(img._den.is_one() for img in images.values()):
        gens = [images[name]._num if name in images else _CTX.gen(i) for i, name in enumerate(NAMES)]
        num = f._num.compose(*gens)
        den = f._den.compose(*gens)
        if den.is_zero():
            raise InvalidInput("substitution makes the denominator vanish")
        return RationalFunction(num, den)
    num = _subs_general(f._num, images)
    den = _subs_general(f._den, images)
    if den.is_zero():
        raise InvalidInput("substitution makes the denominator vanish")
    return num / den


def _subs_general(poly, images: Mapping[str, RationalFunction]) -> RationalFunction:
    total = ZERO
    for mono, c in poly.terms():
        term = rf(_frac(c))
        for i, e in enumerate(mono):
            if e:
                base = images.get(NAMES[i], None)
                term = term * ((base if base is not None else var(NAMES[i])) ** int(e))
        total = total + term
    return total


def pochhammer(a, m: int) -> RationalFunction:
    """Rising factorial (a)_m = a(a+1)...(a+m-1)."""
    if m < 0:
        raise InvalidInput("Pochhammer length must be nonnegative")
    a = rf(a)
    out = ONE
    for j in range(m):
        out = out * (a + j)
    return out


def double_factorial(m: int) -> int:
    """m!! with the conventions (-1)!! = 0!! = 1."""
    if m < -1:
        raise InvalidInput("double factorial undefined below -1")
    out = 1
    while m > 1:
        out *= m
        m -= 2
    return out


def linear_form(expr, unknowns: Sequence[str]) -> tuple[list[RationalFunction], RationalFunction]:
    """Split an expression affine in ``unknowns`` into (coefficients, constant)."""
    expr = rf(expr)
    if any(expr._den.degrees()[_INDEX[x]] > 0 for x in unknowns if not expr._den.is_zero()):
        raise InvalidInput("unknowns may not appear in a denominator")
    zero = {x: 0 for x in unknowns}
    const = substitute(expr, zero)
    coeffs = []
    for x in unknowns:
        deg = expr._num.degrees()[_INDEX[x]] if not expr._num.is_zero() else 0
        if deg > 1:
            raise InvalidInput(f"expression is not linear in {x}")
        d = RationalFunction(expr._num.derivative(x), expr._den)
        coeffs.append(substitute(d, zero))
    return coeffs, const


# -- linear systems ------------------------------------------------------


@dataclass
class LinSystem:
    rows: list[tuple[list[RationalFunction], RationalFunction]]
    unknowns: list[str]

    def __post_init__(self):
        width = len(self.unknowns)
        for coeffs, _ in self.rows:
            if len(coeffs) != width:
                raise InvalidInput("row width does not match the unknowns")


@dataclass
class LinSolution:
    consistent: bool
    particular: list[RationalFunction] = field(default_factory=list)
    nullspace: list[list[RationalFunction]] = field(default_factory=list)
    rank: int = 0

    @property
    def nullity(self) -> int:
        return len(self.nullspace)

    @property
    def unique(self) -> bool:
        return self.consistent and not self.nullspace


def solve_linear(system: LinSystem) -> LinSolution:
    """Gauss-Jordan elimination over the field of rational functions."""
    width = len(system.unknowns)
    mat = [[rf(c) for c in coeffs] + [rf(rhs)] for coeffs, rhs in system.rows]
    pivots: list[int] = []
    row = 0
    for col in range(width):
        pivot = next((r for r in range(row, len(mat)) if not mat[r][col].is_zero()), None)
        if pivot is None:
            continue
        mat[row], mat[pivot] = mat[pivot], mat[row]
        inv = ONE / mat[row][col]
        mat[row] = [x * inv for x in mat[row]]
        for r in range(len(mat)):
            if r != row and not mat[r][col].is_zero():
                factor = mat[r][col]
                mat[r] = [a - factor * b for a, b in zip(mat[r], mat[row])]
        pivots.append(col)
        row += 1
        if row == len(mat):
            break
    for r in range(row, len(mat)):
        if not mat[r][width].is_zero():
            return LinSolution(consistent=False, rank=len(pivots))
    particular = [ZERO] * width
    for r, col in enumerate(pivots):
        particular[col] = mat[r][width]
    free = [c for c in range(width) if c not in pivots]
    nullspace = []
    for fcol in free:
        vec = [ZERO] * width
        vec[fcol] = ONE
        for r, col in enumerate(pivots):
            vec[col] = -mat[r][fcol]
        nullspace.append(vec)
    return LinSolution(True, particular, nullspace, len(pivots))


def check_solution(system: LinSystem, values: Sequence[RationalFunction]) -> bool:
    for coeffs, rhs in system.rows:
        total = ZERO
        for c, v in zip(coeffs, values):
            total = total + rf(c) * rf(v)
        if not rf_eq(total, rhs):
            return False
    return True


def in_solution_space(sol: LinSolution, values: Sequence[RationalFunction]) -> bool:
    """True when ``values`` = particular + span(nullspace)."""
    if not sol.consistent:
        return False
    diff = [rf(v) - p for v, p in zip(values, sol.particular)]
    if not sol.nullspace:
        return all(d.is_zero() for d in diff)
    # the nullspace basis is unit on the free columns, so the weights are read off there
    free_cols = [next(i for i, c in enumerate(vec) if c == ONE and all(
        other[i].is_zero() for other in sol.nullspace if other is not vec)) for vec in sol.nullspace]
    weights = [diff[c] for c in free_cols]
    for i in range(len(diff)):
        combo = ZERO
        for w, vec in zip(weights, sol.nullspace):
            combo = combo + w * vec[i]
        if not rf_eq(combo, diff[i]):
            return False
    return True


# -- rendering -------------------------------------------------------------


def _mono_text(mono: Iterable[int], latex: bool) -> list[str]:
    parts = []
    for i, e in enumerate(mono):
        if not e:
            continue
        name = NAMES[i]
        sym = (_LATEX if latex else _DISPLAY).get(name, name)
        if latex and name.startswith("u"):
            sym = f"u_{{{name[1:]}}}"
        if e == 1:
            parts.append(sym)
        else:
            parts.append(f"{sym}^{{{e}}}" if latex else f"{sym}^{e}")
    return parts


def _poly_text(raw, latex: bool = False) -> str:
    if raw.is_zero():
        return "0"
    out = []
    for mono, c in raw.terms():
        c = _frac(c)
        sign = "-" if c < 0 else "+"
        mag = abs(c)
        factors = _mono_text(mono, latex)
        if not factors:
            body = _rat_text(mag, latex)
        elif mag == 1:
            body = (" " if latex else "*").join(factors)
        else:
            body = _rat_text(mag, latex) + ("" if latex else "*") + (" " if latex else "*").join(factors)
        out.append((sign, body))
    text = ("-" if out[0][0] == "-" else "") + out[0][1]
    for sign, body in out[1:]:
        text += f" {sign} {body}"
    return text


def _rat_text(q: Fraction, latex: bool) -> str:
    if q.denominator == 1:
        return str(q.numerator)
    if latex:
        return rf"\frac{{{q.numerator}}}{{{q.denominator}}}"
    return f"{q.numerator}/{q.denominator}"


def render(x, latex: bool = False) -> str:
    """Canonical text of a Poly or RationalFunction (bit-stable across runs)."""
    if isinstance(x, Poly):
        return _poly_text(x._p, latex)
    x = rf(x)
    num = _poly_text(x._num, latex)
    if x._den.is_one():
        return num
    den = _poly_text(x._den, latex)
    if latex:
        return rf"\frac{{{num}}}{{{den}}}"
    return f"({num})/({den})"


def render_factored(x, latex: bool = False) -> str:
    """Human-oriented rendering as a product of irreducible factors."""
    x = rf(x)
    if x.is_zero():
        return "0"

    def fac(raw):
        const, factors = raw.factor()
        pieces = []
        for f, e in factors:
            t = _poly_text(f, latex)
            t = t if len(f) == 1 else f"({t})"
            pieces.append(t if e == 1 else (f"{t}^{{{e}}}" if latex else f"{t}^{e}"))
        return _frac(const), pieces

    c_num, num = fac(x._num)
    c_den, den = fac(x._den) if not x._den.is_one() else (Fraction(1), [])
    c = c_num / c_den
    head = "" if c == 1 and num else ("-" if c == -1 and num else _rat_text(c, latex))
    sep = "" if latex else "*"
    body = head + (sep if head and head != "-" and num else "") + sep.join(num)
    if den:
        if latex:
            return rf"\frac{{{body}}}{{{sep.join(den)}}}"
        return f"{body}/{den[0]}" if len(den) == 1 else f"{body}/({sep.join(den)})"
    return body
