"""Built-in problems with hand-entered expected closed forms.

The expected forms are typed in factor by factor from the published results,
independently of the engine, so the golden tests compare the engine against
the literature rather than against itself.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .errors import UnknownBuiltin
from .expr import ProblemSpec, parse_problem
from .theorem import ClosedForm, closed_form_from_text

BESSEL = '''\
# x^(beta-1) J_alpha(sqrt x), given directly by its power series
problem "bessel" {
  vars = [x]
  params = [alpha, beta]
  measure = [beta]
  series {
    exponent x = n1 + alpha/2
    inv_gamma(1 + alpha + n1)
    pow(2, -alpha - 2*n1)
  }
}
'''

BUBBLE = '''\
# one-loop massless bubble
problem "bubble" {
  vars = [x1, x2]
  loops = 1
  scales = [p2]
  let U = x2 + x1
  integrand = exp(-p2*x1*x2/U) * U^(-D/2)
}
'''

SUNSET = '''\
# two-loop sunset with one massive line, on shell (p^2 = M^2)
problem "sunset" {
  vars = [x1, x2, x3]
  loops = 2
  scales = [M2]
  let U = x2*x3 + x1*(x3 + x2)
  integrand = exp(+M2*x1*x1*(x3 + x2)/U) * U^(-D/2)
}
'''

LADDER = '''\
# three-loop massless ladder, external legs on shell and s = 0
problem "ladder" {
  vars = [x1, x2, x3, x4, x5, x6, x7, x8, x9, x10]
  loops = 3
  scales = [t]
  let f1 = x8 + x9 + x10
  let f2 = x1 + x2 + x3
  let U = x4*(x7 + f1)*f2 + x5*(x7 + f1)*(x4 + f2) + x6*(x7 + f1)*(x4 + f2) + x7*(x4 + f2)*f1
  integrand = exp(-t*x1*x4*x7*x10/U) * U^(-D/2)
}
'''


def _asum(*ks) -> str:
    """``a_{ijk}`` shorthand expanded to ``a_i + a_j + a_k``."""
    return "(" + " + ".join(f"a{k}" for k in ks) + ")"


def _expected_bessel() -> ClosedForm:
    return closed_form_from_text(
        num=["beta + alpha/2"],
        den=["1 + alpha/2 - beta"],
        scales=[("2", "2*beta")],
    )


def _expected_bubble() -> ClosedForm:
    return closed_form_from_text(
        phase="-D/2",
        num=["a1 + a2 - D/2", "D/2 - a1", "D/2 - a2"],
        den=["a1", "a2", "D - a1 - a2"],
        scales=[("p2", "D/2 - a1 - a2")],
    )


def _expected_sunset() -> ClosedForm:
    return closed_form_from_text(
        phase="-D",
        num=["a1 + a2 + a3 - D", "a2 + a3 - D/2", "D/2 - a2", "D/2 - a3", "2*D - a1 - 2*a2 - 2*a3"],
        den=["a1", "a2", "a3", "3*D/2 - a1 - a2 - a3", "D - a2 - a3"],
        scales=[("-M2", "D - a1 - a2 - a3")],
    )


def _expected_ladder() -> ClosedForm:
    all10 = _asum(*range(1, 11))
    return closed_form_from_text(
        phase="-3*D/2",
        num=[
            f"D/2 - {_asum(8, 9, 10)}",
            f"D/2 - {_asum(1, 2, 3)}",
            f"3*D/2 - {_asum(*range(2, 11))}",
            f"3*D/2 - {_asum(*range(1, 10))}",
            f"{all10} - 3*D/2",
            f"D - {_asum(5, 6, 7, 8, 9, 10)}",
            f"D - {_asum(1, 2, 3, 4, 5, 6)}",
            "D/2 - a7",
            "D/2 - a4",
        ],
        den=[
            "a1", "a4", "a7", "a10",
            f"2*D - {all10}",
            f"D - {_asum(7, 8, 9, 10)}",
            f"D - {_asum(1, 2, 3, 4)}",
            f"3*D/2 - {_asum(*range(1, 8))}",
            f"3*D/2 - {_asum(*range(4, 11))}",
        ],
        scales=[("t", f"3*D/2 - {all10}")],
    )


def _expected_ladder_unit() -> ClosedForm:
    return closed_form_from_text(
        phase="-3*D/2",
        num=["10 - 3*D/2", "D/2 - 3", "D/2 - 3", "3*D/2 - 9", "3*D/2 - 9",
             "D - 6", "D - 6", "D/2 - 1", "D/2 - 1"],
        den=["2*D - 10", "D - 4", "D - 4", "3*D/2 - 7", "3*D/2 - 7"],
        scales=[("t", "3*D/2 - 10")],
    )


@dataclass(frozen=True)
class BuiltinProblem:
    name: str
    source: str
    spec: ProblemSpec
    expected: ClosedForm
    # ladder only: expected form with every propagator power set to 1
    expected_unit: Optional[ClosedForm] = None
    description: str = field(default="", compare=False)


_TABLE = {
    "bessel": (BESSEL, _expected_bessel, None, "Mellin transform of J_alpha(sqrt x)"),
    "bubble": (BUBBLE, _expected_bubble, None, "one-loop massless bubble"),
    "sunset": (SUNSET, _expected_sunset, None, "two-loop on-shell sunset, one massive line"),
    "ladder": (LADDER, _expected_ladder, _expected_ladder_unit, "three-loop massless ladder"),
}

BUILTIN_NAMES = tuple(_TABLE)


def builtin_problem(name: str) -> BuiltinProblem:
    if name not in _TABLE:
        raise UnknownBuiltin(name)
    source, expected, unit, desc = _TABLE[name]
    return BuiltinProblem(name, source, parse_problem(source), expected(),
                          unit() if unit else None, desc)
