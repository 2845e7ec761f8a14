from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from grmt.errors import NonPolynomialDenominator, UnsupportedShape
from grmt.exact import n, parse_affine
from grmt.expr import ExpOf, PowerOf, ProductOf, SumOf, Var, evaluate, parse_problem, resolve_aliases
from grmt.library import builtin_problem
from grmt.series import (
    GammaFactor,
    ScalePower,
    expand_all,
    expand_exponential,
    expand_power_of_sum,
    merge_gammas,
    merge_scales,
    partial_sum,
    pochhammer_to_gamma,
    render_template,
)

P = parse_affine


def rows(name):
    return [str(r) for r in expand_all(builtin_problem(name).spec).rows]


def test_index_budget():
    assert [expand_all(builtin_problem(k).spec).n_indices for k in ("bubble", "sunset", "ladder")] == [2, 3, 10]


def test_bubble_rows():
    assert rows("bubble") == ["a1 - 1/2*D - n2", "a2 + n1 + n2"]


def test_sunset_rows():
    assert rows("sunset") == ["a1 + n1 - 1/2*D - n2", "a2 - 1/2*D - n3", "a3 + n2 + n3"]


def test_ladder_rows():
    expected = [
        "a1 + n1 + n9", "a2 + n10", "a3 - 1/2*D - n1 - n6 - n9 - n10", "a4 + n1 + n2 + n6",
        "a5 + n3", "a6 + n4", "a7 + n5 - 1/2*D - n2 - n3 - n4", "a8 + n7", "a9 + n8",
        "a10 - 1/2*D - n5 - n7 - n8",
    ]
    assert rows("ladder") == expected


def test_exponential_fragment():
    node = ExpOf(-1, "p2", ProductOf((Var(1), Var(2))), SumOf((Var(2), Var(1))))
    frag = expand_exponential(node, 1)
    assert frag.indices == [n(1)]
    assert frag.scales == [ScalePower("p2", False, P("n1"))]
    assert frag.var_exponents == {1: P("n1"), 2: P("n1")}
    assert list(frag.pending.values()) == [P("-n1")]


def test_growing_exponential_flips_scale_sign():
    frag = expand_exponential(ExpOf(1, "M2", ProductOf((Var(1), Var(1))), None), 1)
    assert frag.scales == [ScalePower("M2", True, P("n1"))]
    assert frag.var_exponents == {1: P("2*n1")}


def test_zero_scale_exponential_is_unit():
    frag = expand_exponential(ExpOf(-1, 0, Var(1), None), 1)
    assert frag.indices == [] and frag.scales == []


def test_exponential_shape_errors():
    with pytest.raises(UnsupportedShape):
        expand_exponential(ExpOf(-1, "s", ProductOf(()), None), 1)
    with pytest.raises(NonPolynomialDenominator):
        expand_exponential(ExpOf(-1, "s", Var(1), PowerOf(Var(2), P("D"))), 1)


def test_binomial_gives_pochhammer_ratio():
    frag = expand_power_of_sum((Var(1), Var(2)), P("-D/2 - n1"), 2)
    assert frag.indices == [n(2)]
    assert frag.var_exponents == {1: P("n2"), 2: P("-D/2 - n1 - n2")}
    assert merge_gammas(frag.gammas) == merge_gammas([GammaFactor(P("D/2 + n1 + n2"), 1), GammaFactor(P("D/2 + n1"), -1)])


def test_trinomial_indices_attach_to_leading_summands():
    frag = expand_power_of_sum((Var(8), Var(9), Var(10)), P("-D/2 - n1 - n5"), 7)
    assert frag.indices == [n(7), n(8)]
    assert frag.var_exponents[8] == P("n7")
    assert frag.var_exponents[9] == P("n8")
    assert frag.var_exponents[10] == P("-D/2 - n1 - n5 - n7 - n8")


def test_pochhammer_to_gamma():
    assert pochhammer_to_gamma(P("D/2 + n1"), P("n2")) == (GammaFactor(P("D/2 + n1 + n2"), 1), GammaFactor(P("D/2 + n1"), -1))
    assert merge_gammas(pochhammer_to_gamma(P("a1"), P("0"))) == ()
    num, den = pochhammer_to_gamma(P("1"), P("3"))
    assert num.arg == P("4") and den.arg == P("1")


gamma_lists = st.lists(
    st.tuples(st.sampled_from(["D", "a1", "D/2 - a1", "a1 + a2 - D/2", "3", "2*D - a2"]),
              st.sampled_from([1, -1, 2])),
    max_size=8,
)


@given(gamma_lists, st.randoms(use_true_random=False))
def test_merge_is_order_independent(items, rnd):
    factors = [GammaFactor(P(t), k) for t, k in items]
    shuffled = list(factors)
    rnd.shuffle(shuffled)
    assert merge_gammas(factors) == merge_gammas(shuffled)
    assert all(g.power != 0 for g in merge_gammas(factors))


def test_scale_merge_is_additive():
    merged = merge_scales([("t", False, P("n1")), ("t", False, P("D - n1")), (Fraction(2), False, P("1"))])
    assert merged == (ScalePower("t", False, P("D")), ScalePower(Fraction(2), False, P("1")))


def test_render_template_bubble():
    text = render_template(expand_all(builtin_problem("bubble").spec))
    assert text.splitlines()[:4] == ["indices: n1, n2", "x1: a1 - 1/2*D - n2", "x2: a2 + n1 + n2", "phase: (-1)^(-D/2)"]


def test_grouping_order_is_semantic():
    # authoring the same polynomial with the summands swapped relabels the expansion
    a = parse_problem('problem "a" { vars = [x1, x2]\n integrand = (x1 + x2)^(-D/2) * exp(-x1*x2) }')
    b = parse_problem('problem "b" { vars = [x1, x2]\n integrand = (x2 + x1)^(-D/2) * exp(-x1*x2) }')
    assert expand_all(a).rows != expand_all(b).rows


# convergence domain of the truncated series: the absorbing summand dominates
DOMAINS = {
    "bubble": ({"D": 3.3, "a1": 0.8, "a2": 1.1, "p2": 0.9}, lambda x: x[1] / x[0] < 0.25),
    "sunset": ({"D": 3.3, "a1": 0.8, "a2": 1.1, "a3": 1.2, "M2": -0.9},
               lambda x: x[1] * x[2] / (x[0] * (x[1] + x[2])) < 0.25 and x[2] / x[1] < 0.25),
}


def domain_points(name, count, seed):
    rng = np.random.default_rng(seed)
    _, inside = DOMAINS[name]
    n_vars = builtin_problem(name).spec.n_vars
    out = []
    while len(out) < count:
        x = rng.uniform(0.05, 0.3, n_vars)
        if inside(x):
            out.append(x)
    return out


@pytest.mark.parametrize("name", ["bubble", "sunset"])
def test_truncated_series_reconstructs_integrand(name):
    spec = builtin_problem(name).spec
    point, _ = DOMAINS[name]
    template = expand_all(spec)
    tree = resolve_aliases(spec)
    for x in domain_points(name, 5, seed=11):
        exact = float(evaluate(tree, list(x), point))
        assert partial_sum(template, x, point) == pytest.approx(exact, rel=1e-6)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.05, 3.0))
def test_single_exponential_series(s):
    spec = parse_problem('problem "e" { vars = [x]\n scales = [s]\n measure = [1]\n integrand = exp(-s*x) }')
    t = expand_all(spec)
    assert partial_sum(t, [0.3], {"s": s}, max_index=30) == pytest.approx(np.exp(-0.3 * s), rel=1e-12)
