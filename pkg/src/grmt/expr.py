"""Problem DSL: expression trees for parametric integrands, parser and renderer.

A problem file looks like::

    problem "bubble" {
      vars = [x1, x2]
      loops = 1
      scales = [p2]
      let U = x2 + x1
      integrand = exp(-p2*x1*x2/U) * U^(-D/2)
    }

Grouping inside sums is semantic: the expansion engine consumes the tree
exactly as written, and the last summand of every sum absorbs the residual
exponent of its multinomial expansion.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Optional, Union

import numpy as np

from .errors import CyclicAlias, DSLSyntaxError, DuplicateAlias, UnknownVariable
from .exact import (
    DIM,
    AffineForm,
    AffineParser,
    AffineSyntaxError,
    a,
    affine_eval,
    n,
    param,
    render_affine,
)

# -- tree ----------------------------------------------------------------


@dataclass(frozen=True)
class Var:
    index: int  # 1-based


@dataclass(frozen=True)
class SumOf:
    children: tuple

    def __post_init__(self):
        if len(self.children) < 2:
            raise ValueError("SumOf needs at least two summands")


@dataclass(frozen=True)
class ProductOf:
    children: tuple


@dataclass(frozen=True)
class PowerOf:
    base: object
    exponent: AffineForm


@dataclass(frozen=True)
class ExpOf:
    """``exp(sign * scale * numerator / denominator)``; ``scale`` is a name or a literal."""

    sign: int
    scale: Union[str, Fraction]
    numerator: object
    denominator: Optional[object] = None


@dataclass(frozen=True)
class AliasRef:
    name: str


@dataclass(frozen=True)
class _Name:
    # unresolved identifier; never escapes the parser
    name: str
    line: int = field(compare=False, default=0)
    col: int = field(compare=False, default=0)


ExprNode = Union[Var, SumOf, ProductOf, PowerOf, ExpOf, AliasRef]


@dataclass(frozen=True)
class SeriesBlock:
    """Directly supplied series data: exponent per variable, Gamma factors, scale powers."""

    exponents: tuple  # AffineForm per variable
    gammas: tuple = ()  # (AffineForm, +1 | -1)
    scales: tuple = ()  # ((base, negated), AffineForm); base is a name or Fraction


@dataclass(frozen=True)
class ProblemSpec:
    name: str
    variables: tuple
    loops: int = 0
    scales: tuple = ()
    params: tuple = ()
    measure: tuple = ()
    normalize: bool = True
    aliases: tuple = ()  # ((name, node), ...) in declaration order
    integrand: Optional[object] = None
    series: Optional[SeriesBlock] = None

    @property
    def n_vars(self) -> int:
        return len(self.variables)

    @property
    def phase(self) -> AffineForm:
        return AffineForm.sym(DIM, Fraction(-self.loops, 2))

    @property
    def alias_table(self) -> dict:
        return dict(self.aliases)


def default_measure(n_vars: int) -> tuple:
    return tuple(AffineForm.sym(a(i)) for i in range(1, n_vars + 1))


# -- tokenizer -------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""(?P<ws>[ \t\r]+)|(?P<nl>\n)|(?P<comment>\#[^\n]*)
    |(?P<str>"[^"\n]*")|(?P<num>\d+(?:\.\d+)?)|(?P<id>[A-Za-z_][A-Za-z_0-9]*)
    |(?P<op>[{}\[\]()=,+\-*/^])""",
    re.VERBOSE,
)


def tokenize(text: str):
    toks = []
    line, line_start, pos = 1, 0, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise DSLSyntaxError(line, pos - line_start + 1, "a valid token", text[pos])
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind not in ("ws", "comment"):
            toks.append((kind, m.group(), (line, m.start() - line_start + 1)))
        pos = m.end()
    toks.append(("end", "", (line, pos - line_start + 1)))
    return toks


# -- parser ----------------------------------------------------------------

_KEYWORDS = {"problem", "vars", "loops", "scales", "params", "measure", "normalize",
             "let", "integrand", "series", "exp"}


class _Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.i = 0
        self.variables: list[str] = []
        self.scales: list[str] = []
        self.params: list[str] = []
        self.in_series = False

    # token helpers
    def peek(self, k=0):
        return self.toks[self.i + k]

    def take(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def fail(self, expected, tok=None):
        tok = tok or self.peek()
        line, col = tok[2]
        raise DSLSyntaxError(line, col, expected, tok[1] or "end of input")

    def expect(self, value, kind=None):
        tok = self.peek()
        if tok[1] != value or (kind and tok[0] != kind) or tok[0] == "str":
            self.fail(repr(value))
        return self.take()

    def ident(self):
        tok = self.peek()
        if tok[0] != "id":
            self.fail("an identifier")
        return self.take()

    def at(self, value):
        tok = self.peek()
        return tok[0] in ("op", "id") and tok[1] == value

    # affine expressions share the token stream
    def resolve_symbol(self, name, pos):
        if name == "D":
            return DIM
        if name in self.params:
            return param(name)
        m = re.fullmatch(r"a([1-9][0-9]*)", name)
        if m and (not self.variables or int(m.group(1)) <= len(self.variables)):
            return a(int(m.group(1)))
        m = re.fullmatch(r"n([1-9][0-9]*)", name)
        if m and self.in_series:
            return n(int(m.group(1)))
        raise UnknownVariable(name, *pos)

    def affine(self) -> AffineForm:
        p = AffineParser(self.toks, self.resolve_symbol, self.i)
        try:
            out = p.expr()
        except AffineSyntaxError as err:
            line, col = err.pos
            raise DSLSyntaxError(line, col, err.expected, err.found) from None
        self.i = p.i
        return out

    def ident_list(self):
        self.expect("[")
        names = [self.ident()[1]]
        while self.at(","):
            self.take()
            names.append(self.ident()[1])
        self.expect("]")
        return names

    # grammar
    def problem(self) -> ProblemSpec:
        self.expect("problem")
        tok = self.peek()
        if tok[0] != "str":
            self.fail("a quoted problem name")
        name = self.take()[1][1:-1]
        self.expect("{")
        loops = 0
        measure = None
        normalize = None
        aliases: dict = {}
        integrand = None
        series = None
        while not self.at("}"):
            tok = self.peek()
            key = tok[1] if tok[0] == "id" else None
            if key == "vars":
                self.take(); self.expect("=")
                self.variables = self.ident_list()
                if len(set(self.variables)) != len(self.variables):
                    self.fail("distinct variable names", tok)
            elif key == "loops":
                self.take(); self.expect("=")
                t = self.peek()
                if t[0] != "num" or not t[1].isdigit():
                    self.fail("a non-negative integer")
                loops = int(self.take()[1])
            elif key == "scales":
                self.take(); self.expect("=")
                self.scales = self.ident_list()
            elif key == "params":
                self.take(); self.expect("=")
                self.params = self.ident_list()
            elif key == "measure":
                self.take(); self.expect("=")
                self.expect("[")
                measure = [self.affine()]
                while self.at(","):
                    self.take()
                    measure.append(self.affine())
                self.expect("]")
            elif key == "normalize":
                self.take(); self.expect("=")
                t = self.ident()
                if t[1] not in ("true", "false"):
                    self.fail("true or false", t)
                normalize = t[1] == "true"
            elif key == "let":
                self.take()
                name_tok = self.ident()
                if name_tok[1] in aliases:
                    raise DuplicateAlias(name_tok[1])
                self.expect("=")
                aliases[name_tok[1]] = self.sum()
            elif key == "integrand":
                self.take(); self.expect("=")
                integrand = self.product()
            elif key == "series":
                self.take()
                series = self.series_block()
            else:
                self.fail("a declaration (vars, loops, scales, params, measure, normalize, let, integrand, series)")
        self.expect("}")
        if self.peek()[0] != "end":
            self.fail("end of input")
        if not self.variables:
            raise DSLSyntaxError(1, 1, "a vars declaration")
        if (integrand is None) == (series is None):
            raise DSLSyntaxError(*self.peek()[2], "exactly one of integrand or series")
        nv = len(self.variables)
        if measure is None:
            measure_t = default_measure(nv)
            normalize = True if normalize is None else normalize
        else:
            if len(measure) != nv:
                raise DSLSyntaxError(*self.peek()[2], f"{nv} measure powers")
            measure_t = tuple(measure)
            normalize = False if normalize is None else normalize
        if series is not None and len(series.exponents) != nv:
            raise DSLSyntaxError(*self.peek()[2], f"one series exponent per variable ({nv})")
        resolved_aliases = tuple((k, self.bind(v, aliases)) for k, v in aliases.items())
        body = self.bind(integrand, aliases) if integrand is not None else None
        return ProblemSpec(
            name=name,
            variables=tuple(self.variables),
            loops=loops,
            scales=tuple(self.scales),
            params=tuple(self.params),
            measure=measure_t,
            normalize=normalize,
            aliases=resolved_aliases,
            integrand=body,
            series=series,
        )

    def sum(self):
        terms = [self.product()]
        while self.at("+"):
            self.take()
            terms.append(self.product())
        return terms[0] if len(terms) == 1 else SumOf(tuple(terms))

    def product(self):
        factors = [self.factor()]
        while self.at("*"):
            self.take()
            factors.append(self.factor())
        return factors[0] if len(factors) == 1 else ProductOf(tuple(factors))

    def factor(self):
        if self.at("exp") and self.peek(1)[1] == "(":
            return self.exponential()
        base = self.atom()
        if self.at("^"):
            self.take()
            t = self.peek()
            if t[0] == "num":
                self.take()
                expo = AffineForm.const(Fraction(t[1]))
            else:
                self.expect("(")
                expo = self.affine()
                self.expect(")")
            return PowerOf(base, expo)
        return base

    def atom(self):
        tok = self.peek()
        if tok[0] == "id" and tok[1] not in _KEYWORDS:
            self.take()
            return _Name(tok[1], *tok[2])
        if self.at("("):
            self.take()
            inner = self.sum()
            self.expect(")")
            return inner
        self.fail("an identifier or '('")

    def exponential(self):
        self.take(); self.expect("(")
        sign = -1
        if self.at("-"):
            self.take()
        elif self.at("+"):
            self.take()
            sign = 1
        else:
            self.fail("'+' or '-' (explicit sign of the exponent)")
        factors = []
        scale = Fraction(1)
        first = True
        while True:
            t = self.peek()
            if first and t[0] == "num":
                self.take()
                scale = Fraction(t[1])
            else:
                factors.append(self.factor())
            first = False
            if not self.at("*"):
                break
            self.take()
        denominator = None
        if self.at("/"):
            self.take()
            denominator = self.atom()
        self.expect(")")
        kept = []
        for f in factors:
            if isinstance(f, _Name) and f.name in self.scales:
                if scale != 1:
                    self.fail("at most one scale factor in an exponential")
                scale = f.name
            else:
                kept.append(f)
        numerator = kept[0] if len(kept) == 1 else ProductOf(tuple(kept))
        return ExpOf(sign, scale, numerator, denominator)

    def series_block(self):
        self.expect("{")
        self.in_series = True
        exponents: dict = {}
        gammas = []
        scales = []
        while not self.at("}"):
            tok = self.ident()
            key = tok[1]
            if key == "exponent":
                var = self.ident()
                if var[1] not in self.variables:
                    raise UnknownVariable(var[1], *var[2])
                self.expect("=")
                exponents[var[1]] = self.affine()
            elif key in ("gamma", "inv_gamma"):
                self.expect("(")
                gammas.append((self.affine(), 1 if key == "gamma" else -1))
                self.expect(")")
            elif key == "pow":
                self.expect("(")
                negated = False
                if self.at("-"):
                    self.take()
                    negated = True
                b = self.take()
                if b[0] == "num":
                    base = Fraction(b[1])
                    if base <= 0:
                        self.fail("a positive literal base", b)
                elif b[0] == "id" and b[1] in self.scales:
                    base = b[1]
                else:
                    self.fail("a declared scale or a positive literal", b)
                self.expect(",")
                scales.append(((base, negated), self.affine()))
                self.expect(")")
            else:
                self.fail("exponent, gamma, inv_gamma or pow", tok)
        self.expect("}")
        self.in_series = False
        missing = [v for v in self.variables if v not in exponents]
        if missing:
            raise DSLSyntaxError(*self.peek()[2], f"a series exponent for {missing[0]}")
        return SeriesBlock(tuple(exponents[v] for v in self.variables), tuple(gammas), tuple(scales))

    # identifier binding after all declarations are known
    def bind(self, node, aliases):
        if isinstance(node, _Name):
            if node.name in self.variables:
                return Var(self.variables.index(node.name) + 1)
            if node.name in aliases:
                return AliasRef(node.name)
            raise UnknownVariable(node.name, node.line, node.col)
        if isinstance(node, SumOf):
            return SumOf(tuple(self.bind(c, aliases) for c in node.children))
        if isinstance(node, ProductOf):
            return ProductOf(tuple(self.bind(c, aliases) for c in node.children))
        if isinstance(node, PowerOf):
            return PowerOf(self.bind(node.base, aliases), node.exponent)
        if isinstance(node, ExpOf):
            den = None if node.denominator is None else self.bind(node.denominator, aliases)
            return ExpOf(node.sign, node.scale, self.bind(node.numerator, aliases), den)
        return node


def parse_problem(text: str) -> ProblemSpec:
    return _Parser(text).problem()


# -- alias resolution ------------------------------------------------------

def resolve_aliases(spec: ProblemSpec, node=None):
    """Inline every alias, keeping the authored grouping of sums and products."""
    table = spec.alias_table
    done: dict = {}

    def expand(name, chain):
        if name in chain:
            raise CyclicAlias(chain[chain.index(name):] + [name])
        if name not in done:
            done[name] = walk(table[name], chain + [name])
        return done[name]

    def walk(nd, chain):
        if isinstance(nd, AliasRef):
            if nd.name not in table:
                raise UnknownVariable(nd.name)
            return expand(nd.name, chain)
        if isinstance(nd, SumOf):
            return SumOf(tuple(walk(c, chain) for c in nd.children))
        if isinstance(nd, ProductOf):
            return ProductOf(tuple(walk(c, chain) for c in nd.children))
        if isinstance(nd, PowerOf):
            return PowerOf(walk(nd.base, chain), nd.exponent)
        if isinstance(nd, ExpOf):
            den = None if nd.denominator is None else walk(nd.denominator, chain)
            return ExpOf(nd.sign, nd.scale, walk(nd.numerator, chain), den)
        return nd

    for name in table:
        expand(name, [])
    target = spec.integrand if node is None else node
    return None if target is None else walk(target, [])


# -- rendering -------------------------------------------------------------

def _fmt_exponent(e: AffineForm) -> str:
    return render_affine(e, style="fraction")


def render_expr(node, names=None) -> str:
    """Canonical DSL text of a tree; sums are parenthesized."""

    def vname(i):
        return names[i - 1] if names else f"x{i}"

    def atom(nd):
        if isinstance(nd, Var):
            return vname(nd.index)
        if isinstance(nd, AliasRef):
            return nd.name
        return "(" + inner(nd) + ")"

    def factor(nd):
        if isinstance(nd, PowerOf):
            return f"{atom(nd.base)}^({_fmt_exponent(nd.exponent)})"
        if isinstance(nd, ExpOf):
            return exponential(nd)
        if isinstance(nd, ProductOf):
            return atom(nd)
        return atom(nd)

    def product(nd):
        if isinstance(nd, ProductOf) and nd.children:
            return "*".join(factor(c) for c in nd.children)
        return factor(nd)

    def inner(nd):
        # body of a parenthesized atom: a sum or a single product
        if isinstance(nd, SumOf):
            return " + ".join(product(c) for c in nd.children)
        return product(nd)

    def exponential(nd):
        parts = []
        if isinstance(nd.scale, str):
            parts.append(nd.scale)
        elif nd.scale != 1:
            parts.append(str(nd.scale))
        if not (isinstance(nd.numerator, ProductOf) and not nd.numerator.children):
            parts.append(product(nd.numerator))
        body = "*".join(parts) if parts else "1"
        den = "" if nd.denominator is None else "/" + atom(nd.denominator)
        return f"exp({'+' if nd.sign > 0 else '-'}{body}{den})"

    if isinstance(node, SumOf):
        return "(" + inner(node) + ")"
    return product(node)


def render_problem(spec: ProblemSpec) -> str:
    names = list(spec.variables)
    lines = [f'problem "{spec.name}" {{', f"  vars = [{', '.join(names)}]", f"  loops = {spec.loops}"]
    if spec.scales:
        lines.append(f"  scales = [{', '.join(spec.scales)}]")
    if spec.params:
        lines.append(f"  params = [{', '.join(spec.params)}]")
    lines.append(f"  measure = [{', '.join(_fmt_exponent(m) for m in spec.measure)}]")
    lines.append(f"  normalize = {'true' if spec.normalize else 'false'}")
    for name, body in spec.aliases:
        text = render_expr(body, names)
        if isinstance(body, SumOf):
            text = text[1:-1]
        lines.append(f"  let {name} = {text}")
    if spec.integrand is not None:
        lines.append(f"  integrand = {render_expr(spec.integrand, names)}")
    else:
        s = spec.series
        lines.append("  series {")
        for v, e in zip(names, s.exponents):
            lines.append(f"    exponent {v} = {_fmt_exponent(e)}")
        for arg, k in s.gammas:
            lines.append(f"    {'gamma' if k > 0 else 'inv_gamma'}({_fmt_exponent(arg)})")
        for (base, neg), e in s.scales:
            lines.append(f"    pow({'-' if neg else ''}{base}, {_fmt_exponent(e)})")
        lines.append("  }")
    lines.append("}")
    return "\n".join(lines) + "\n"


# -- numeric evaluation ----------------------------------------------------

def log_eval(node, logx, assignment: Mapping):
    """Natural log of a positive integrand tree at ``x = exp(logx)``.

    ``logx`` is a sequence (one entry per variable) of floats or numpy arrays.
    Exponentials contribute their argument directly, so nothing overflows
    before the final ``exp``.
    """
    if isinstance(node, Var):
        return logx[node.index - 1]
    if isinstance(node, SumOf):
        out = log_eval(node.children[0], logx, assignment)
        for c in node.children[1:]:
            out = np.logaddexp(out, log_eval(c, logx, assignment))
        return out
    if isinstance(node, ProductOf):
        out = 0.0
        for c in node.children:
            out = out + log_eval(c, logx, assignment)
        return out
    if isinstance(node, PowerOf):
        return affine_eval(node.exponent, assignment) * log_eval(node.base, logx, assignment)
    if isinstance(node, ExpOf):
        s = float(assignment[node.scale]) if isinstance(node.scale, str) else float(node.scale)
        arg = log_eval(node.numerator, logx, assignment)
        if node.denominator is not None:
            arg = arg - log_eval(node.denominator, logx, assignment)
        return node.sign * s * np.exp(arg)
    raise TypeError(f"cannot evaluate {type(node).__name__}; resolve aliases first")


def evaluate(node, xs, assignment: Mapping):
    return np.exp(log_eval(node, [np.log(x) for x in xs], assignment))
