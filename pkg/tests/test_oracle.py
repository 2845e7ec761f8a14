import math

import pytest

from grmt.errors import DivergenceSuspected, NonNumericParameter, UnsupportedOracle
from grmt.exact import parse_affine
from grmt.expr import parse_problem
from grmt.library import builtin_problem
from grmt.oracle import OracleConfig, compare_to_closed_form, integrate_parametric
from grmt.theorem import ClosedForm, grmt_evaluate

EXP = parse_problem('problem "e" { vars = [x]\n measure = [1]\n integrand = exp(-x) }')
BUBBLE_AT = {"D": 3, "a1": 1, "a2": 1, "p2": 1}
SUNSET_AT = {"D": 3, "a1": 1, "a2": 1.2, "a3": 1.2, "M2": -1}


def test_exponential_adaptive():
    assert integrate_parametric(EXP, {}).value == pytest.approx(1.0, abs=1e-8)


def test_exponential_rational_map():
    est = integrate_parametric(EXP, {}, OracleConfig(method="adaptive", transform="rational"))
    assert est.value == pytest.approx(1.0, abs=1e-8)


@pytest.mark.parametrize("power", [1.0, 12.0])
def test_exponential_montecarlo(power):
    est = integrate_parametric(EXP, {}, OracleConfig(method="montecarlo", samples=200_000, power=power, seed=4))
    assert abs(est.value - 1.0) <= 3 * est.stderr


def test_gamma_measure():
    spec = parse_problem('problem "g" { vars = [x]\n params = [nu]\n measure = [nu]\n integrand = exp(-x) }')
    assert integrate_parametric(spec, {"nu": 2.5}).value == pytest.approx(math.gamma(2.5), rel=1e-10)


def test_bubble_adaptive():
    est = integrate_parametric(builtin_problem("bubble").spec, BUBBLE_AT)
    assert est.method == "adaptive"
    assert est.value == pytest.approx(math.pi ** 1.5, rel=1e-9)


def test_bubble_compare_passes_and_catches_deleted_factor():
    b = builtin_problem("bubble")
    cf = grmt_evaluate(b.spec)
    assert compare_to_closed_form(b.spec, cf, BUBBLE_AT).passed
    dropped = ClosedForm.canonical(cf.prefactor, cf.phase,
                                   [g for g in cf.gammas if g.arg != parse_affine("D/2 - a1")], cf.scales)
    report = compare_to_closed_form(b.spec, dropped, BUBBLE_AT)
    assert report.status == "fail"


def test_bubble_generic_point():
    b = builtin_problem("bubble")
    point = {"D": 3.4, "a1": 0.9, "a2": 1.3, "p2": 0.7}
    assert compare_to_closed_form(b.spec, grmt_evaluate(b.spec), point).rel_diff < 1e-9


def test_sunset_montecarlo_within_two_percent():
    s = builtin_problem("sunset")
    cfg = OracleConfig(method="montecarlo", samples=10_000_000, seed=42)
    report = compare_to_closed_form(s.spec, grmt_evaluate(s.spec), SUNSET_AT, cfg)
    assert report.closed_value == pytest.approx(81.5405655, rel=1e-8)
    assert report.estimate.samples >= 10_000_000
    assert report.rel_diff < 0.02
    assert report.passed


def test_ladder_skipped():
    b = builtin_problem("ladder")
    point = {"D": 3, "t": 1, **{f"a{i}": 1 for i in range(1, 11)}}
    report = compare_to_closed_form(b.spec, grmt_evaluate(b.spec), point)
    assert report.status == "skipped"
    with pytest.raises(UnsupportedOracle):
        integrate_parametric(b.spec, point)


def test_series_problem_unsupported():
    with pytest.raises(UnsupportedOracle):
        integrate_parametric(builtin_problem("bessel").spec, {"alpha": 1, "beta": 0.5})


def test_missing_parameter():
    with pytest.raises(NonNumericParameter):
        integrate_parametric(builtin_problem("bubble").spec, {"D": 3, "a1": 1, "a2": 1})
    with pytest.raises(NonNumericParameter):
        integrate_parametric(builtin_problem("bubble").spec, {**BUBBLE_AT, "p2": "x"})


def test_divergent_integral_flagged():
    # x^(-1/2) e^(+x) has no finite integral
    spec = parse_problem('problem "d" { vars = [x]\n measure = [1/2]\n integrand = exp(+x) }')
    with pytest.raises(DivergenceSuspected):
        integrate_parametric(spec, {})
    with pytest.raises(DivergenceSuspected):
        integrate_parametric(spec, {}, OracleConfig(method="montecarlo", samples=100_000))


def test_scale_free_integral_flagged():
    # dx/x diverges logarithmically at both ends
    spec = parse_problem('problem "d" { vars = [x]\n measure = [1]\n integrand = x^(-1) }')
    with pytest.raises(DivergenceSuspected):
        integrate_parametric(spec, {})


def test_seed_determinism_independent_of_threads():
    spec = builtin_problem("bubble").spec
    runs = [integrate_parametric(spec, BUBBLE_AT, OracleConfig(method="montecarlo", samples=300_000, seed=8, workers=w))
            for w in (1, 1, 4)]
    assert runs[0] == runs[1] == runs[2]
    other = integrate_parametric(spec, BUBBLE_AT, OracleConfig(method="montecarlo", samples=300_000, seed=9))
    assert other.value != runs[0].value


def test_stderr_shrinks_by_root_two_when_samples_double():
    spec = builtin_problem("bubble").spec
    small = integrate_parametric(spec, BUBBLE_AT, OracleConfig(method="montecarlo", samples=2_000_000, seed=1))
    large = integrate_parametric(spec, BUBBLE_AT, OracleConfig(method="montecarlo", samples=4_000_000, seed=1))
    assert large.stderr / small.stderr == pytest.approx(1 / math.sqrt(2), rel=0.2)


def test_config_validation():
    with pytest.raises(ValueError):
        OracleConfig(method="montecarlo", samples=100)
    with pytest.raises(ValueError):
        OracleConfig(target=0.5)
