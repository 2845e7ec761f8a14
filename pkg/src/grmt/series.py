"""Expansion of a resolved integrand tree into one multi-index series template.

The template stands for

    sum_{n_1..n_M >= 0} prod_j (-1)^{n_j}/n_j! * coefficient * prod_i x_i^{exponent_i}

where the coefficient is a product of Gamma factors and scale powers.  The
exponentials are expanded first, then every pending power of a sum is
expanded with the multinomial theorem, outermost sums first.
"""
from __future__ import annotations

import math
from collections import OrderedDict
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product as iproduct
from typing import Iterable, Mapping, NamedTuple, Union

from .errors import GRMTError, NonPolynomialDenominator, UnsupportedShape
from .exact import DIM, ZERO, AffineForm, Kind, a, affine_eval, n, render_affine
from .expr import AliasRef, ExpOf, PowerOf, ProblemSpec, ProductOf, SumOf, Var, resolve_aliases


class GammaFactor(NamedTuple):
    arg: AffineForm
    power: int  # > 0 numerator, < 0 denominator


class ScalePower(NamedTuple):
    base: Union[str, Fraction]
    negated: bool
    exponent: AffineForm


def gamma_sort_key(arg: AffineForm):
    """Order by the coefficient of D, then the remaining terms, then the constant."""
    rest = tuple((s.sort_key(), c) for s, c in arg.terms if s != DIM)
    return (arg.coeff(DIM), rest, arg.constant)


def scale_sort_key(base, negated):
    if isinstance(base, str):
        return (0, base, Fraction(0), negated)
    return (1, "", base, negated)


def merge_gammas(factors: Iterable) -> tuple:
    acc: dict = {}
    for arg, k in factors:
        acc[arg] = acc.get(arg, 0) + k
    out = [GammaFactor(arg, k) for arg, k in acc.items() if k]
    out.sort(key=lambda g: gamma_sort_key(g.arg))
    return tuple(out)


def merge_scales(factors: Iterable) -> tuple:
    acc: dict = {}
    for base, neg, e in factors:
        acc[(base, neg)] = acc.get((base, neg), ZERO) + e
    # a literal base of 1 contributes nothing
    out = [ScalePower(b, ng, e) for (b, ng), e in acc.items() if not e.is_zero() and not (b == 1 and not ng)]
    out.sort(key=lambda s: scale_sort_key(s.base, s.negated))
    return tuple(out)


def pochhammer_to_gamma(base: AffineForm, shift: AffineForm) -> tuple:
    """(base)_shift as the ratio Gamma(base + shift) / Gamma(base)."""
    return GammaFactor(base + shift, 1), GammaFactor(base, -1)


@dataclass(frozen=True)
class TermTemplate:
    n_indices: int
    exponents: tuple  # integrand exponent of each variable, measure excluded
    measure: tuple
    gammas: tuple = ()
    scales: tuple = ()
    phase: AffineForm = ZERO
    prefactor: Fraction = Fraction(1)
    normalization: tuple = ()

    @property
    def n_vars(self) -> int:
        return len(self.exponents)

    @property
    def indices(self) -> tuple:
        return tuple(n(j) for j in range(1, self.n_indices + 1))

    @property
    def rows(self) -> tuple:
        """Total exponent of each variable under ``dx/x``: integrand plus measure."""
        return tuple(e + m for e, m in zip(self.exponents, self.measure))

    def check(self) -> None:
        used = set()
        for form in self.exponents:
            used.update(form.indices())
        for g in self.gammas:
            used.update(g.arg.indices())
        for s in self.scales:
            used.update(s.exponent.indices())
        if used != set(self.indices):
            raise GRMTError(
                f"template indices {sorted(x.name for x in used)} do not match n1..n{self.n_indices}"
            )


def render_template(t: TermTemplate, names=None) -> str:
    lines = [f"indices: {', '.join(s.name for s in t.indices)}"]
    for i, row in enumerate(t.rows, 1):
        label = names[i - 1] if names else f"x{i}"
        lines.append(f"{label}: {render_affine(row)}")
    if not t.phase.is_zero():
        lines.append(f"phase: (-1)^({render_affine(t.phase, 'fraction')})")
    if t.prefactor != 1:
        lines.append(f"prefactor: {t.prefactor}")
    for s in t.scales:
        lines.append(f"scale: ({'-' if s.negated else ''}{s.base})^({render_affine(s.exponent)})")
    for g in t.gammas:
        tag = "num" if g.power > 0 else "den"
        power = "" if abs(g.power) == 1 else f"^{abs(g.power)}"
        lines.append(f"{tag}: G[{render_affine(g.arg)}]{power}")
    for g in t.normalization:
        lines.append(f"norm: G[{render_affine(g.arg)}]^({g.power})")
    return "\n".join(lines) + "\n"


# -- expansion ---------------------------------------------------------------

@dataclass
class Fragment:
    """What one expansion step contributes to the template."""

    indices: list = field(default_factory=list)
    var_exponents: dict = field(default_factory=dict)  # variable ordinal -> AffineForm
    pending: "OrderedDict" = field(default_factory=OrderedDict)  # SumOf -> AffineForm
    gammas: list = field(default_factory=list)
    scales: list = field(default_factory=list)


def _contains(tree, target) -> bool:
    if isinstance(tree, (SumOf, ProductOf)):
        return any(c == target or _contains(c, target) for c in tree.children)
    if isinstance(tree, PowerOf):
        return tree.base == target or _contains(tree.base, target)
    return False


def _has_exp(tree) -> bool:
    if isinstance(tree, ExpOf):
        return True
    if isinstance(tree, (SumOf, ProductOf)):
        return any(_has_exp(c) for c in tree.children)
    if isinstance(tree, PowerOf):
        return _has_exp(tree.base)
    return False


def _mul_exponents(c: AffineForm, e: AffineForm) -> AffineForm:
    if c.is_constant():
        return e * c.constant
    if e.is_constant():
        return c * e.constant
    raise UnsupportedShape(f"exponent ({c}) * ({e}) is not affine")


def distribute(node, e: AffineForm, frag: Fragment) -> None:
    """Raise ``node`` to the power ``e`` and record the result in ``frag``."""
    if e.is_zero():
        return
    if isinstance(node, Var):
        frag.var_exponents[node.index] = frag.var_exponents.get(node.index, ZERO) + e
    elif isinstance(node, ProductOf):
        for c in node.children:
            distribute(c, e, frag)
    elif isinstance(node, PowerOf):
        distribute(node.base, _mul_exponents(node.exponent, e), frag)
    elif isinstance(node, SumOf):
        frag.pending[node] = frag.pending.get(node, ZERO) + e
    elif isinstance(node, ExpOf):
        raise UnsupportedShape("exponentials are only expanded as top-level factors")
    elif isinstance(node, AliasRef):
        raise UnsupportedShape(f"unresolved alias {node.name}")
    else:
        raise UnsupportedShape(f"cannot expand {type(node).__name__}")


def expand_exponential(node: ExpOf, next_index: int) -> Fragment:
    frag = Fragment()
    if not isinstance(node.scale, str) and node.scale == 0:
        return frag
    num = node.numerator
    if _has_exp(num):
        raise UnsupportedShape("nested exponential in numerator")
    if isinstance(num, ProductOf) and not num.children:
        raise UnsupportedShape("exponential numerator has no integration variables")
    if node.denominator is not None:
        if _has_exp(node.denominator):
            raise NonPolynomialDenominator("exponential inside an exponential's denominator")
        if isinstance(node.denominator, PowerOf) and not node.denominator.exponent.is_constant():
            raise NonPolynomialDenominator("symbolic power in an exponential's denominator")
    idx = n(next_index)
    k = AffineForm.sym(idx)
    frag.indices.append(idx)
    # exp(-s z) = sum (-1)^k/k! s^k z^k ;  exp(+s z) = sum (-1)^k/k! (-s)^k z^k
    frag.scales.append(ScalePower(node.scale, node.sign > 0, k))
    distribute(num, k, frag)
    if not frag.var_exponents and not frag.pending:
        raise UnsupportedShape("exponential numerator is not a monomial in the variables")
    if node.denominator is not None:
        distribute(node.denominator, -k, frag)
    return frag


def expand_power_of_sum(summands: tuple, exponent: AffineForm, next_index: int) -> Fragment:
    """Multinomial expansion; the last summand absorbs the residual exponent."""
    frag = Fragment()
    if len(summands) < 2:
        raise UnsupportedShape("a power of a single term needs no series")
    ms = [n(next_index + r) for r in range(len(summands) - 1)]
    total = ZERO
    for idx, term in zip(ms, summands[:-1]):
        m = AffineForm.sym(idx)
        frag.indices.append(idx)
        distribute(term, m, frag)
        total = total + m
    distribute(summands[-1], exponent - total, frag)
    frag.gammas.extend(pochhammer_to_gamma(-exponent, total))
    return frag


def _merge(state: Fragment, frag: Fragment) -> None:
    state.indices.extend(frag.indices)
    for i, e in frag.var_exponents.items():
        state.var_exponents[i] = state.var_exponents.get(i, ZERO) + e
    for s, e in frag.pending.items():
        total = state.pending.get(s, ZERO) + e
        if total.is_zero():
            state.pending.pop(s, None)
        else:
            state.pending[s] = total
    state.gammas.extend(frag.gammas)
    state.scales.extend(frag.scales)


def _top_factors(tree) -> list:
    if isinstance(tree, ProductOf):
        out = []
        for c in tree.children:
            out.extend(_top_factors(c))
        return out
    return [tree]


def expand_tree(tree, n_vars: int) -> Fragment:
    state = Fragment()
    factors = _top_factors(tree)
    for f in factors:
        if isinstance(f, ExpOf):
            _merge(state, expand_exponential(f, len(state.indices) + 1))
    rest = Fragment()
    for f in factors:
        if not isinstance(f, ExpOf):
            if _has_exp(f):
                raise UnsupportedShape("exponentials must be top-level factors of the integrand")
            distribute(f, AffineForm.const(1), rest)
    _merge(state, rest)

    queue: list = []
    while state.pending:
        for s in state.pending:
            if s in queue:
                continue
            if not any(o is not s and o != s and _contains(o, s) for o in state.pending):
                queue.append(s)
        target = queue.pop(0)
        exponent = state.pending.pop(target)
        _merge(state, expand_power_of_sum(target.children, exponent, len(state.indices) + 1))
    for i in state.var_exponents:
        if not 1 <= i <= n_vars:
            raise UnsupportedShape(f"variable ordinal {i} out of range")
    return state


def _series_template(spec: ProblemSpec) -> TermTemplate:
    s = spec.series
    used = set()
    for e in s.exponents:
        used.update(e.indices())
    for g, _ in s.gammas:
        used.update(g.indices())
    for _, e in s.scales:
        used.update(e.indices())
    m = max((x.ordinal for x in used), default=0)
    return TermTemplate(
        n_indices=m,
        exponents=tuple(s.exponents),
        measure=tuple(spec.measure),
        gammas=merge_gammas(s.gammas),
        scales=merge_scales((b, neg, e) for (b, neg), e in s.scales),
        phase=spec.phase,
        normalization=_normalization(spec),
    )


def _normalization(spec: ProblemSpec) -> tuple:
    if not spec.normalize:
        return ()
    return tuple(GammaFactor(AffineForm.sym(a(i)), -1) for i in range(1, spec.n_vars + 1))


def expand_all(spec: ProblemSpec, tree=None) -> TermTemplate:
    """Series template of a problem (integrand path or direct series block)."""
    if spec.series is not None and tree is None:
        t = _series_template(spec)
        t.check()
        return t
    if tree is None:
        tree = resolve_aliases(spec)
    state = expand_tree(tree, spec.n_vars)
    exps = tuple(state.var_exponents.get(i, ZERO) for i in range(1, spec.n_vars + 1))
    t = TermTemplate(
        n_indices=len(state.indices),
        exponents=exps,
        measure=tuple(spec.measure),
        gammas=merge_gammas(state.gammas),
        scales=merge_scales(state.scales),
        phase=spec.phase,
        normalization=_normalization(spec),
    )
    t.check()
    return t


# -- numeric partial sums ------------------------------------------------------

def _poch(x: float, m: int) -> float:
    out = 1.0
    if m >= 0:
        for i in range(m):
            out *= x + i
    else:
        for i in range(1, -m + 1):
            out /= x - i
    return out


def _pair_gammas(gammas: tuple):
    """Split into Pochhammer pairs (num, den) whose arguments differ by indices only."""
    units = []
    for g in gammas:
        units.extend([(g.arg, 1 if g.power > 0 else -1)] * abs(g.power))
    nums = [u for u in units if u[1] > 0]
    dens = [u for u in units if u[1] < 0]
    pairs, single = [], []
    for arg, _ in nums:
        for j, (darg, _) in enumerate(dens):
            diff = arg - darg
            if all(s.kind is Kind.INDEX for s in diff.symbols()) and diff.constant.denominator == 1:
                pairs.append((darg, diff))
                dens.pop(j)
                break
        else:
            single.append((arg, 1))
    single.extend(dens)
    return pairs, single


def partial_sum(t: TermTemplate, x, assignment: Mapping, max_index: int = 12) -> float:
    """Sum of the template's terms with every index in 0..max_index (measure, phase
    and normalization excluded)."""
    pairs, single = _pair_gammas(t.gammas)
    idx = t.indices
    total = 0.0
    for values in iproduct(range(max_index + 1), repeat=len(idx)):
        env = dict(assignment)
        env.update({s: v for s, v in zip(idx, values)})
        term = 1.0
        for v in values:
            term *= (-1) ** v / math.factorial(v)
        for base, diff in pairs:
            term *= _poch(affine_eval(base, env), round(affine_eval(diff, env)))
        for arg, k in single:
            g = math.gamma(affine_eval(arg, env))
            term *= g if k > 0 else 1.0 / g
        for s in t.scales:
            b = float(env[s.base]) if isinstance(s.base, str) else float(s.base)
            if s.negated:
                b = -b
            term *= b ** affine_eval(s.exponent, env)
        for xi, e in zip(x, t.exponents):
            term *= xi ** affine_eval(e, env)
        total += term
    return total
