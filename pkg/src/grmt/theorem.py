"""Multidimensional master theorem: exponent system, exact solve, Gamma-product assembly.

For a template in normal form, the integral over ``prod dx_i/x_i`` equals

    1/|det A| * prod_j Gamma(-l_j*) * phi(l*)

where ``l*`` solves ``A l + b = 0`` (row ``i`` of ``A``/``b`` is the total
exponent of ``x_i``).  Everything here is exact rational arithmetic.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from itertools import permutations
from typing import Iterable, Mapping, Sequence

from .errors import GRMTError, InvalidPairing, NonSquare, SingularSystem
from .exact import ZERO, AffineForm, affine_substitute, n, parse_affine, render_affine
from .expr import ProblemSpec
from .series import (
    GammaFactor,
    ScalePower,
    TermTemplate,
    expand_all,
    merge_gammas,
    merge_scales,
)


@dataclass(frozen=True)
class LinearSystem:
    matrix: tuple  # rows of Fractions
    rhs: tuple  # AffineForm per row, equal to -b_i

    @property
    def size(self) -> int:
        return len(self.matrix)


@dataclass(frozen=True)
class IndexSolution:
    values: tuple  # ((Symbol, AffineForm), ...) ordered by index
    det: Fraction

    def as_dict(self) -> dict:
        return dict(self.values)


@dataclass(frozen=True)
class ClosedForm:
    prefactor: Fraction = Fraction(1)
    phase: AffineForm = ZERO
    gammas: tuple = ()
    scales: tuple = ()

    @classmethod
    def canonical(cls, prefactor=Fraction(1), phase=ZERO, gammas=(), scales=()) -> "ClosedForm":
        """Merge equal factors, fold Gamma of positive integers into the prefactor, sort."""
        pref = Fraction(prefactor)
        kept = []
        for g in merge_gammas(gammas):
            arg = g.arg
            if arg.is_constant() and arg.constant.denominator == 1 and arg.constant > 0:
                pref *= Fraction(math.factorial(int(arg.constant) - 1)) ** g.power
            else:
                kept.append(g)
        return cls(pref, phase, tuple(kept), merge_scales(scales))

    def __mul__(self, other: "ClosedForm") -> "ClosedForm":
        return ClosedForm.canonical(
            self.prefactor * other.prefactor,
            self.phase + other.phase,
            self.gammas + other.gammas,
            self.scales + other.scales,
        )

    def symbols(self) -> set:
        out = set(self.phase.symbols())
        for g in self.gammas:
            out.update(g.arg.symbols())
        for s in self.scales:
            out.update(s.exponent.symbols())
        return out

    def scale_bases(self) -> set:
        return {(s.base, s.negated) for s in self.scales}

    def subs(self, mapping: Mapping) -> "ClosedForm":
        return ClosedForm.canonical(
            self.prefactor,
            self.phase.subs(mapping),
            [GammaFactor(g.arg.subs(mapping), g.power) for g in self.gammas],
            [ScalePower(s.base, s.negated, s.exponent.subs(mapping)) for s in self.scales],
        )

    def __str__(self):
        return render_closed_form(self)


def _scale_text(s: ScalePower) -> str:
    return f"{'-' if s.negated else ''}{s.base}"


def render_closed_form(cf: ClosedForm) -> str:
    """Bit-stable text, e.g. ``(-1)^(-D/2) * (p2)^(...) * G[...] / (G[a1] * G[a2])``."""
    num = []
    if not cf.phase.is_zero():
        num.append(f"(-1)^({render_affine(cf.phase, 'fraction')})")
    if cf.prefactor.numerator != 1:
        num.append(str(cf.prefactor.numerator))
    for s in cf.scales:
        num.append(f"({_scale_text(s)})^({render_affine(s.exponent)})")
    den = []
    for g in cf.gammas:
        text = f"G[{render_affine(g.arg)}]" + ("" if abs(g.power) == 1 else f"^{abs(g.power)}")
        (num if g.power > 0 else den).append(text)
    if cf.prefactor.denominator != 1:
        den.insert(0, str(cf.prefactor.denominator))
    out = " * ".join(num) if num else "1"
    if den:
        out += " / (" + " * ".join(den) + ")"
    return out


# -- the linear system -------------------------------------------------------

def build_system(t: TermTemplate) -> LinearSystem:
    if t.n_vars != t.n_indices:
        raise NonSquare(t.n_vars, t.n_indices)
    idx = t.indices
    matrix = tuple(tuple(row.coeff(s) for s in idx) for row in t.rows)
    rhs = tuple(-row.without_indices() for row in t.rows)
    return LinearSystem(matrix, rhs)


def solve_exact(system: LinearSystem) -> IndexSolution:
    """Gauss-Jordan over the rationals; the pivot is the first nonzero entry."""
    size = system.size
    m = [list(r) for r in system.matrix]
    rhs = list(system.rhs)
    det = Fraction(1)
    for col in range(size):
        piv = next((r for r in range(col, size) if m[r][col] != 0), None)
        if piv is None:
            raise SingularSystem()
        if piv != col:
            m[col], m[piv] = m[piv], m[col]
            rhs[col], rhs[piv] = rhs[piv], rhs[col]
            det = -det
        p = m[col][col]
        det *= p
        m[col] = [v / p for v in m[col]]
        rhs[col] = rhs[col] / p
        for r in range(size):
            if r != col and m[r][col] != 0:
                f = m[r][col]
                m[r] = [v - f * w for v, w in zip(m[r], m[col])]
                rhs[r] = rhs[r] - rhs[col] * f
    values = tuple((n(j + 1), rhs[j]) for j in range(size))
    return IndexSolution(values, det)


def residual(system: LinearSystem, solution: IndexSolution) -> tuple:
    """``A l* - rhs`` row by row; identically zero for a correct solution."""
    vals = [v for _, v in solution.values]
    out = []
    for row, r in zip(system.matrix, system.rhs):
        acc = -r
        for c, v in zip(row, vals):
            acc = acc + v * c
        out.append(acc)
    return tuple(out)


def assemble(t: TermTemplate, solution: IndexSolution) -> ClosedForm:
    sol = solution.as_dict()
    gammas = [GammaFactor(affine_substitute(g.arg, sol), g.power) for g in t.gammas]
    gammas += [GammaFactor(-v, 1) for _, v in solution.values]
    gammas += list(t.normalization)
    scales = [ScalePower(s.base, s.negated, affine_substitute(s.exponent, sol)) for s in t.scales]
    return ClosedForm.canonical(t.prefactor / abs(solution.det), t.phase, gammas, scales)


@dataclass(frozen=True)
class Evaluation:
    template: TermTemplate
    system: LinearSystem
    solution: IndexSolution
    closed_form: ClosedForm


def evaluate_spec(spec: ProblemSpec) -> Evaluation:
    template = expand_all(spec)
    system = build_system(template)
    solution = solve_exact(system)
    return Evaluation(template, system, solution, assemble(template, solution))


def grmt_evaluate(spec: ProblemSpec) -> ClosedForm:
    return evaluate_spec(spec).closed_form


# -- one variable at a time --------------------------------------------------

def iterative_rmt(t: TermTemplate, pairing: Sequence[tuple]) -> ClosedForm:
    """Apply the one-dimensional theorem to ``(variable, index)`` pairs in order.

    Ordinals are 1-based.  Validity of a pair is judged on the exponent row as
    it stands after the earlier substitutions.
    """
    rows = dict(enumerate(t.rows, 1))
    gammas = list(t.gammas)
    scales = list(t.scales)
    prefactor = Fraction(t.prefactor)
    seen_idx = set()
    for var, j in pairing:
        if var not in rows or j in seen_idx or not 1 <= j <= t.n_indices:
            raise InvalidPairing(var, j)
        sym = n(j)
        row = rows.pop(var)
        c = row.coeff(sym)
        if c == 0:
            raise InvalidPairing(var, j)
        seen_idx.add(j)
        value = -(row - AffineForm.sym(sym, c)) / c
        sub = {sym: value}
        rows = {k: r.subs(sub) for k, r in rows.items()}
        gammas = [GammaFactor(g.arg.subs(sub), g.power) for g in gammas]
        gammas.append(GammaFactor(-value, 1))
        scales = [ScalePower(s.base, s.negated, s.exponent.subs(sub)) for s in scales]
        prefactor /= abs(c)
    if rows or len(seen_idx) != t.n_indices:
        raise GRMTError("pairing must cover every variable and index exactly once")
    return ClosedForm.canonical(prefactor, t.phase, gammas + list(t.normalization), scales)


def enumerate_pairings(t: TermTemplate, max_vars: int = 4) -> dict:
    """All bijections variable -> index with every variable order that is valid.

    Returns ``{bijection: [ordered pairings, ...]}`` for bijections with at
    least one valid order.
    """
    if t.n_vars != t.n_indices:
        raise NonSquare(t.n_vars, t.n_indices)
    if t.n_vars > max_vars:
        raise GRMTError(f"pairing enumeration limited to {max_vars} variables")
    nv = t.n_vars
    out = {}
    for perm in permutations(range(1, nv + 1)):
        bij = tuple(zip(range(1, nv + 1), perm))
        valid = []
        for order in permutations(bij):
            try:
                iterative_rmt(t, order)
            except InvalidPairing:
                continue
            valid.append(order)
        if valid:
            out[bij] = valid
    return out


# -- structured key/value form -------------------------------------------------

def to_structured(cf: ClosedForm, name: str | None = None, system: LinearSystem | None = None,
                  solution: IndexSolution | None = None) -> str:
    lines = []
    if name is not None:
        lines.append(f"problem = {name}")
    lines.append(f"phase = {render_affine(cf.phase)}")
    lines.append(f"prefactor = {cf.prefactor}")
    if solution is not None:
        lines.append(f"det = {solution.det}")
    for i, s in enumerate(cf.scales):
        lines.append(f"scales[{i}].base = {_scale_text(s)}")
        lines.append(f"scales[{i}].exponent = {render_affine(s.exponent)}")
    num = [g.arg for g in cf.gammas if g.power > 0 for _ in range(g.power)]
    den = [g.arg for g in cf.gammas if g.power < 0 for _ in range(-g.power)]
    lines += [f"gamma_num[{i}] = {render_affine(x)}" for i, x in enumerate(num)]
    lines += [f"gamma_den[{i}] = {render_affine(x)}" for i, x in enumerate(den)]
    if system is not None:
        for i, row in enumerate(system.matrix):
            lines.append(f"matrix[{i}] = {' '.join(str(v) for v in row)}")
            lines.append(f"rhs[{i}] = {render_affine(system.rhs[i])}")
    if solution is not None:
        for i, (sym, v) in enumerate(solution.values):
            lines.append(f"indices[{i}].name = {sym.name}")
            lines.append(f"indices[{i}].value = {render_affine(v)}")
    return "\n".join(lines) + "\n"


_KEY_RE = re.compile(r"^(\w+)(?:\[(\d+)\])?(?:\.(\w+))?$")


def from_structured(text: str) -> ClosedForm:
    """Rebuild the closed form from :func:`to_structured` output."""
    phase = ZERO
    prefactor = Fraction(1)
    gammas = []
    scale_parts: dict = {}
    for line in text.splitlines():
        if not line.strip():
            continue
        key, _, value = line.partition(" = ")
        m = _KEY_RE.match(key.strip())
        if not m:
            raise GRMTError(f"bad structured key {key!r}")
        head, pos, attr = m.group(1), m.group(2), m.group(3)
        value = value.strip()
        if head == "phase":
            phase = parse_affine(value)
        elif head == "prefactor":
            prefactor = Fraction(value)
        elif head == "gamma_num":
            gammas.append(GammaFactor(parse_affine(value), 1))
        elif head == "gamma_den":
            gammas.append(GammaFactor(parse_affine(value), -1))
        elif head == "scales":
            scale_parts.setdefault(int(pos), {})[attr] = value
    scales = []
    for _, part in sorted(scale_parts.items()):
        base = part["base"]
        negated = base.startswith("-")
        base = base.lstrip("-")
        if re.fullmatch(r"\d+(?:/\d+)?", base):
            base = Fraction(base)
        scales.append(ScalePower(base, negated, parse_affine(part["exponent"])))
    return ClosedForm.canonical(prefactor, phase, gammas, scales)


def closed_form_from_text(phase: str = "0", num: Iterable[str] = (), den: Iterable[str] = (),
                           scales: Iterable[tuple] = (), prefactor=Fraction(1)) -> ClosedForm:
    """Build a closed form from factor lists written as affine text."""
    gammas = [GammaFactor(parse_affine(x), 1) for x in num]
    gammas += [GammaFactor(parse_affine(x), -1) for x in den]
    sc = []
    for base, exponent in scales:
        negated = base.startswith("-")
        b = base.lstrip("-")
        sc.append(ScalePower(Fraction(b) if b.isdigit() else b, negated, parse_affine(exponent)))
    return ClosedForm.canonical(prefactor, parse_affine(phase), gammas, sc)
