"""Exact rational affine forms over a small symbol table.

Every Gamma argument, exponent and solved summation index in the engine is an
``AffineForm``: a rational constant plus a rational linear combination of
symbols.  Coefficients are ``fractions.Fraction`` throughout; floats only
appear in :func:`affine_eval`.
"""
from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Union

from .errors import UnassignedSymbol, UnresolvedIndex

Rational = Fraction
Number = Union[int, Fraction]


class Kind(enum.IntEnum):
    # value doubles as the canonical ordering rank
    DIMENSION = 0
    PROPAGATOR = 1
    PARAM = 2
    INDEX = 3
    SCALE = 4


@dataclass(frozen=True)
class Symbol:
    kind: Kind
    ordinal: int = 0
    label: str = ""

    @property
    def name(self) -> str:
        if self.kind is Kind.DIMENSION:
            return "D"
        if self.kind is Kind.PROPAGATOR:
            return f"a{self.ordinal}"
        if self.kind is Kind.INDEX:
            return f"n{self.ordinal}"
        return self.label

    def sort_key(self):
        return (int(self.kind), self.ordinal, self.label)

    def __str__(self):
        return self.name

    def __repr__(self):
        return f"Symbol({self.name})"


DIM = Symbol(Kind.DIMENSION)


def a(i: int) -> Symbol:
    if i < 1:
        raise ValueError("propagator ordinals start at 1")
    return Symbol(Kind.PROPAGATOR, i)


def n(j: int) -> Symbol:
    if j < 1:
        raise ValueError("index ordinals start at 1")
    return Symbol(Kind.INDEX, j)


def param(name: str) -> Symbol:
    return Symbol(Kind.PARAM, 0, name)


def scale(name: str) -> Symbol:
    return Symbol(Kind.SCALE, 0, name)


_PROP_RE = re.compile(r"a([1-9][0-9]*)$")
_INDEX_RE = re.compile(r"n([1-9][0-9]*)$")


def symbol_from_name(name: str) -> Symbol:
    """Default name resolution: ``D``, ``a<i>``, ``n<j>``, anything else a parameter."""
    if name == "D":
        return DIM
    m = _PROP_RE.match(name)
    if m:
        return a(int(m.group(1)))
    m = _INDEX_RE.match(name)
    if m:
        return n(int(m.group(1)))
    return param(name)


def _frac(x: Number) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    raise TypeError(f"exact coefficient expected, got {type(x).__name__}")


@dataclass(frozen=True)
class AffineForm:
    """``constant + sum(coeff * symbol)``, canonical: sorted, no zero coefficients."""

    constant: Fraction = Fraction(0)
    terms: tuple = ()

    @classmethod
    def build(cls, constant: Number = 0, coeffs: Mapping[Symbol, Number] | None = None) -> "AffineForm":
        items = []
        for sym, c in (coeffs or {}).items():
            c = _frac(c)
            if c:
                items.append((sym, c))
        items.sort(key=lambda t: t[0].sort_key())
        return cls(_frac(constant), tuple(items))

    @classmethod
    def const(cls, value: Number) -> "AffineForm":
        return cls(_frac(value), ())

    @classmethod
    def sym(cls, symbol: Symbol, coeff: Number = 1) -> "AffineForm":
        return cls.build(0, {symbol: coeff})

    # -- queries --------------------------------------------------------
    def coeff(self, symbol: Symbol) -> Fraction:
        for s, c in self.terms:
            if s == symbol:
                return c
        return Fraction(0)

    def as_dict(self) -> dict:
        return dict(self.terms)

    def symbols(self) -> tuple:
        return tuple(s for s, _ in self.terms)

    def indices(self) -> tuple:
        return tuple(s for s, _ in self.terms if s.kind is Kind.INDEX)

    def is_constant(self) -> bool:
        return not self.terms

    def is_zero(self) -> bool:
        return not self.terms and self.constant == 0

    def without_indices(self) -> "AffineForm":
        return AffineForm(self.constant, tuple(t for t in self.terms if t[0].kind is not Kind.INDEX))

    # -- arithmetic -----------------------------------------------------
    def __add__(self, other):
        if isinstance(other, (int, Fraction)):
            return AffineForm(self.constant + other, self.terms)
        if not isinstance(other, AffineForm):
            return NotImplemented
        coeffs = self.as_dict()
        for s, c in other.terms:
            coeffs[s] = coeffs.get(s, 0) + c
        return AffineForm.build(self.constant + other.constant, coeffs)

    __radd__ = __add__

    def __neg__(self):
        return AffineForm(-self.constant, tuple((s, -c) for s, c in self.terms))

    def __sub__(self, other):
        if isinstance(other, (int, Fraction)):
            return self + (-other)
        if not isinstance(other, AffineForm):
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, k):
        if not isinstance(k, (int, Fraction)):
            return NotImplemented
        k = _frac(k)
        if k == 0:
            return ZERO
        return AffineForm(self.constant * k, tuple((s, c * k) for s, c in self.terms))

    __rmul__ = __mul__

    def __truediv__(self, k):
        if not isinstance(k, (int, Fraction)):
            return NotImplemented
        return self * (1 / _frac(k))

    def subs(self, mapping: Mapping[Symbol, "AffineForm | Number"]) -> "AffineForm":
        """Replace any symbol present in ``mapping``; others are kept."""
        out = AffineForm.const(self.constant)
        for s, c in self.terms:
            if s in mapping:
                v = mapping[s]
                out = out + (v if isinstance(v, AffineForm) else AffineForm.const(v)) * c
            else:
                out = out + AffineForm.sym(s, c)
        return out

    def sort_key(self):
        return tuple((s.sort_key(), c) for s, c in self.terms) + (((9,), self.constant),)

    def __str__(self):
        return render_affine(self)

    def __repr__(self):
        return f"AffineForm({render_affine(self)!r})"


ZERO = AffineForm()


def affine_combine(terms: Iterable[tuple[Number, AffineForm]]) -> AffineForm:
    out = ZERO
    for r, f in terms:
        out = out + f * r
    return out


def _lookup(assignment: Mapping, sym: Symbol):
    if sym in assignment:
        return assignment[sym]
    if sym.name in assignment:
        return assignment[sym.name]
    raise UnassignedSymbol(sym)


def affine_eval(form: AffineForm, assignment: Mapping) -> float:
    """Float value of ``form``; ``assignment`` may be keyed by Symbol or by name."""
    total = float(form.constant)
    for s, c in form.terms:
        total += float(c) * float(_lookup(assignment, s))
    return total


def affine_substitute(form: AffineForm, solution: Mapping[Symbol, AffineForm]) -> AffineForm:
    """Replace every summation index in ``form`` by its solved value."""
    missing = [s for s in form.indices() if s not in solution]
    if missing:
        raise UnresolvedIndex(missing[0])
    return form.subs({s: solution[s] for s in form.indices()})


# -- rendering ------------------------------------------------------------

def _num(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def _term(sym: Symbol | None, mag: Fraction, style: str) -> str:
    if sym is None:
        return _num(mag)
    if mag == 1:
        return sym.name
    if style == "fraction" and mag.denominator != 1:
        head = sym.name if mag.numerator == 1 else f"{mag.numerator}*{sym.name}"
        return f"{head}/{mag.denominator}"
    return f"{_num(mag)}*{sym.name}"


def render_affine(form: AffineForm, style: str = "canonical") -> str:
    """Positive terms first, then negative ones, each group in symbol order.

    ``canonical`` writes rational coefficients as ``1/2*D``; ``fraction``
    writes them as ``D/2`` (used for phases and DSL exponents).
    """
    items = list(form.terms)
    if form.constant:
        items.append((None, form.constant))
    if not items:
        return "0"
    ordered = [t for t in items if t[1] > 0] + [t for t in items if t[1] < 0]
    parts = []
    for i, (sym, c) in enumerate(ordered):
        text = _term(sym, abs(c), style)
        if i == 0:
            parts.append(text if c > 0 else "-" + text)
        else:
            parts.append((" + " if c > 0 else " - ") + text)
    return "".join(parts)


# -- parsing --------------------------------------------------------------

class AffineSyntaxError(ValueError):
    def __init__(self, pos: int, expected: str, found: str | None = None):
        self.pos = pos
        self.expected = expected
        self.found = found
        super().__init__(f"at offset {pos}: expected {expected}" + (f", found {found!r}" if found else ""))


_TOKEN_RE = re.compile(r"\s*(?:(\d+(?:\.\d+)?)|([A-Za-z_][A-Za-z_0-9]*)|(.))")


def _tokenize(text: str):
    toks = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m.group(1):
            toks.append(("num", m.group(1), m.start(1)))
        elif m.group(2):
            toks.append(("id", m.group(2), m.start(2)))
        elif m.group(3):
            toks.append(("op", m.group(3), m.start(3)))
        pos = m.end()
    toks.append(("end", "", len(text)))
    return toks


class AffineParser:
    """Recursive-descent parser over ``(kind, value, pos)`` tokens.

    Shared with the problem DSL, which feeds its own token stream and reads
    back the cursor ``i`` when the expression ends.
    """

    def __init__(self, tokens, resolve, start=0):
        self.toks = tokens
        self.i = start
        self.resolve = resolve

    def peek(self):
        return self.toks[self.i]

    def take(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def expr(self):
        out = self.term()
        while self.peek()[:2] in (("op", "+"), ("op", "-")):
            op = self.take()[1]
            rhs = self.term()
            out = out + rhs if op == "+" else out - rhs
        return out

    def term(self):
        out = self.unary()
        while self.peek()[:2] in (("op", "*"), ("op", "/")):
            tok = self.take()
            rhs = self.unary()
            if tok[1] == "*":
                if out.is_constant():
                    out = rhs * out.constant
                elif rhs.is_constant():
                    out = out * rhs.constant
                else:
                    raise AffineSyntaxError(tok[2], "a constant factor (product of two symbols is not affine)")
            else:
                if not rhs.is_constant() or rhs.constant == 0:
                    raise AffineSyntaxError(tok[2], "a nonzero constant divisor")
                out = out / rhs.constant
        return out

    def unary(self):
        if self.peek()[:2] == ("op", "-"):
            self.take()
            return -self.unary()
        if self.peek()[:2] == ("op", "+"):
            self.take()
            return self.unary()
        return self.primary()

    def primary(self):
        kind, val, pos = self.take()
        if kind == "num":
            return AffineForm.const(Fraction(val))
        if kind == "id":
            return AffineForm.sym(self.resolve(val, pos))
        if (kind, val) == ("op", "("):
            inner = self.expr()
            k2, v2, p2 = self.take()
            if (k2, v2) != ("op", ")"):
                raise AffineSyntaxError(p2, "')'", v2 or "end of input")
            return inner
        raise AffineSyntaxError(pos, "a number, symbol or '('", val or "end of input")


def parse_affine(text: str, resolve: Callable[[str, int], Symbol] | None = None) -> AffineForm:
    """Parse a rational-affine expression such as ``3*D/2 - a1 - 2*a2``."""
    if resolve is None:
        resolve = lambda name, pos: symbol_from_name(name)  # noqa: E731
    p = AffineParser(_tokenize(text), resolve)
    out = p.expr()
    kind, val, pos = p.peek()
    if kind != "end":
        raise AffineSyntaxError(pos, "end of expression", val)
    return out
