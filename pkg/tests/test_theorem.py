from dataclasses import replace
from fractions import Fraction
from itertools import permutations
from pathlib import Path

import pytest
from hypothesis import given, settings, strategies as st

from grmt.errors import InvalidPairing, NonSquare, SingularSystem
from grmt.exact import DIM, AffineForm, a, n, parse_affine
from grmt.expr import parse_problem
from grmt.gammaeval import numeric_equal
from grmt.library import BUILTIN_NAMES, builtin_problem
from grmt.series import GammaFactor, ScalePower, expand_all
from grmt.theorem import (
    ClosedForm,
    LinearSystem,
    assemble,
    build_system,
    enumerate_pairings,
    evaluate_spec,
    from_structured,
    grmt_evaluate,
    iterative_rmt,
    render_closed_form,
    residual,
    solve_exact,
    to_structured,
)

GOLDEN = Path(__file__).parent / "golden"
P = parse_affine


def solution(name):
    return {s.name: str(v) for s, v in evaluate_spec(builtin_problem(name).spec).solution.values}


@pytest.mark.parametrize("name", BUILTIN_NAMES)
def test_golden_text(name):
    cf = grmt_evaluate(builtin_problem(name).spec)
    assert render_closed_form(cf) + "\n" == (GOLDEN / f"{name}.txt").read_text()


@pytest.mark.parametrize("name", BUILTIN_NAMES)
def test_matches_hand_entered_form(name):
    b = builtin_problem(name)
    assert grmt_evaluate(b.spec) == b.expected


def test_bubble_solution():
    assert solution("bubble") == {"n1": "1/2*D - a1 - a2", "n2": "a1 - 1/2*D"}


def test_sunset_solution():
    assert solution("sunset") == {"n1": "D - a1 - a2 - a3", "n2": "1/2*D - a2 - a3", "n3": "a2 - 1/2*D"}


@pytest.mark.parametrize("name", ["bubble", "sunset", "ladder"])
def test_unit_determinant_and_exact_residual(name):
    ev = evaluate_spec(builtin_problem(name).spec)
    assert abs(ev.solution.det) == 1
    assert all(r.is_zero() for r in residual(ev.system, ev.solution))


def test_ladder_unit_powers():
    b = builtin_problem("ladder")
    cf = grmt_evaluate(b.spec).subs({a(i): 1 for i in range(1, 11)})
    assert cf == b.expected_unit
    assert render_closed_form(cf) + "\n" == (GOLDEN / "ladder_unit.txt").read_text()


def test_exponential_gives_gamma_of_measure_power():
    spec = parse_problem('problem "e" { vars = [x]\n params = [nu]\n measure = [nu]\n integrand = exp(-x) }')
    assert render_closed_form(grmt_evaluate(spec)) == "G[nu]"


def test_non_square_rejected():
    spec = parse_problem('problem "q" { vars = [x1, x2]\n integrand = exp(-x1*x2) }')
    with pytest.raises(NonSquare) as info:
        grmt_evaluate(spec)
    assert (info.value.n_vars, info.value.n_indices) == (2, 1)


def test_singular_rejected():
    spec = parse_problem('problem "s" { vars = [x1, x2]\n integrand = exp(-x1*x2) * exp(-x1*x2) }')
    with pytest.raises(SingularSystem):
        grmt_evaluate(spec)


# -- random exact systems ----------------------------------------------------

def det_laplace(m):
    if len(m) == 1:
        return Fraction(m[0][0])
    return sum((-1) ** j * m[0][j] * det_laplace([row[:j] + row[j + 1:] for row in m[1:]])
               for j in range(len(m)) if m[0][j])


coeffs = st.fractions(min_value=-4, max_value=4, max_denominator=3)


@st.composite
def solvable_systems(draw):
    size = draw(st.integers(1, 5))
    matrix = draw(st.lists(st.lists(st.integers(-3, 3), min_size=size, max_size=size), min_size=size, max_size=size))
    truth = [AffineForm.build(draw(coeffs), {DIM: draw(coeffs), a(1): draw(coeffs), a(2): draw(coeffs)})
             for _ in range(size)]
    rhs = []
    for row in matrix:
        acc = AffineForm()
        for c, v in zip(row, truth):
            acc = acc + v * c
        rhs.append(acc)
    return LinearSystem(tuple(tuple(Fraction(c) for c in r) for r in matrix), tuple(rhs)), truth


@settings(max_examples=150, deadline=None)
@given(solvable_systems())
def test_random_systems_solve_exactly(case):
    system, truth = case
    det = det_laplace([list(r) for r in system.matrix])
    if det == 0:
        with pytest.raises(SingularSystem):
            solve_exact(system)
        return
    sol = solve_exact(system)
    assert sol.det == det
    assert [v for _, v in sol.values] == truth
    assert all(r.is_zero() for r in residual(system, sol))


# -- routes and relabelling --------------------------------------------------

def test_bubble_pairings():
    t = expand_all(builtin_problem("bubble").spec)
    found = enumerate_pairings(t)
    assert len(found) == 2
    assert sum(len(orders) for orders in found.values()) == 3


def test_all_routes_agree_numerically():
    spec = builtin_problem("bubble").spec
    t = expand_all(spec)
    reference = grmt_evaluate(spec)
    for orders in enumerate_pairings(t).values():
        for order in orders:
            assert numeric_equal(iterative_rmt(t, order), reference, trials=20, seed=3)


def test_sunset_routes_agree_numerically():
    spec = builtin_problem("sunset").spec
    t = expand_all(spec)
    reference = grmt_evaluate(spec)
    routes = enumerate_pairings(t)
    assert routes
    for orders in routes.values():
        assert numeric_equal(iterative_rmt(t, orders[0]), reference, trials=10, seed=5)


def test_invalid_pairing():
    t = expand_all(builtin_problem("bubble").spec)
    with pytest.raises(InvalidPairing):
        iterative_rmt(t, [(1, 1), (2, 2)])  # n1 is absent from the x1 row


def relabel(t, var_perm, idx_perm):
    """Permute variables and rename index n_j -> n_{idx_perm[j]}."""
    ren = {n(j + 1): AffineForm.sym(n(idx_perm[j] + 1)) for j in range(t.n_indices)}
    sub = lambda f: f.subs(ren)  # noqa: E731
    return replace(
        t,
        exponents=tuple(sub(t.exponents[i]) for i in var_perm),
        measure=tuple(t.measure[i] for i in var_perm),
        gammas=tuple(GammaFactor(sub(g.arg), g.power) for g in t.gammas),
        scales=tuple(ScalePower(s.base, s.negated, sub(s.exponent)) for s in t.scales),
    )


@pytest.mark.parametrize("name", ["bubble", "sunset"])
def test_relabelling_invariance(name):
    t = expand_all(builtin_problem(name).spec)
    reference = assemble(t, solve_exact(build_system(t)))
    k = t.n_vars
    for vp in permutations(range(k)):
        for ip in permutations(range(k)):
            u = relabel(t, vp, ip)
            assert assemble(u, solve_exact(build_system(u))) == reference


# -- structured output ---------------------------------------------------------

@pytest.mark.parametrize("name", BUILTIN_NAMES)
def test_structured_round_trip(name):
    ev = evaluate_spec(builtin_problem(name).spec)
    doc = to_structured(ev.closed_form, name, ev.system, ev.solution)
    assert from_structured(doc) == ev.closed_form
    assert to_structured(ev.closed_form, name, ev.system, ev.solution) == doc


def test_closed_form_product_merges():
    cf = grmt_evaluate(builtin_problem("bubble").spec)
    inverse = ClosedForm(Fraction(1), -cf.phase, tuple(GammaFactor(g.arg, -g.power) for g in cf.gammas),
                         tuple(ScalePower(s.base, s.negated, -s.exponent) for s in cf.scales))
    assert render_closed_form(cf * inverse) == "1"


def test_positive_integer_gammas_fold_into_prefactor():
    cf = ClosedForm.canonical(gammas=[GammaFactor(P("4"), 1), GammaFactor(P("3"), -2), GammaFactor(P("D"), 1)])
    assert cf.prefactor == Fraction(6, 4)
    assert render_closed_form(cf) == "3 * G[D] / (2)"
