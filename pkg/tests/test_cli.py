import io
from dataclasses import replace
from pathlib import Path

import pytest

from grmt.cli import EXIT_ERROR, EXIT_FAIL, EXIT_OK, EXIT_SKIPPED, EXIT_USAGE, main, parse_assignment, UsageError
from grmt.library import BUILTIN_NAMES, LADDER, UnknownBuiltin, builtin_problem
from grmt.theorem import ClosedForm, from_structured, render_closed_form

GOLDEN = Path(__file__).parent / "golden"


def run(*argv):
    out = io.StringIO()
    code = main(list(argv), out=out)
    return code, out.getvalue()


@pytest.mark.parametrize("name", BUILTIN_NAMES)
def test_eval_golden(name):
    code, out = run("eval", name)
    assert code == EXIT_OK
    assert out == (GOLDEN / f"{name}.txt").read_text()


@pytest.mark.parametrize("name", BUILTIN_NAMES)
def test_eval_matches_stored_expected(name):
    _, out = run("eval", name)
    assert out.strip() == render_closed_form(builtin_problem(name).expected)


def test_eval_numeric_bubble():
    code, out = run("eval", "bubble", "--at", "D=3,a1=1,a2=1,p2=1", "--phase", "strip")
    assert code == EXIT_OK
    lines = out.splitlines()
    assert lines[1:4] == ["sign: +1", "modulus: 5.56832799683", "log-modulus: 1.71709482877"]


def test_eval_principal_phase():
    code, out = run("eval", "bubble", "--at", "D=3,a1=1,a2=1,p2=1", "--phase", "principal")
    assert code == EXIT_OK and "phase: " in out


def test_structured_round_trip():
    code, out = run("eval", "sunset", "--format", "structured")
    assert code == EXIT_OK
    assert "det = 1" in out and "indices[0].value = D - a1 - a2 - a3" in out
    spec = builtin_problem("sunset")
    assert from_structured(out) == spec.expected
    assert run("eval", "sunset", "--format", "structured")[1] == out


def test_eval_from_file(tmp_path):
    path = tmp_path / "ladder.grmt"
    path.write_text(LADDER)
    code, out = run("eval", str(path))
    assert code == EXIT_OK
    assert out == (GOLDEN / "ladder.txt").read_text()


def test_ladder_pole_exit_code(capsys):
    at = "D=4," + ",".join(f"a{i}=1" for i in range(1, 11)) + ",t=1"
    code, _ = run("eval", "ladder", "--at", at)
    assert code == EXIT_ERROR
    assert "PoleEncountered" in capsys.readouterr().err


def test_options_bubble():
    code, out = run("options", "bubble", "--pairings", "all")
    assert code == EXIT_OK
    assert out.splitlines()[-1] == "2 valid pairings; all numerically equal"


def test_expand_bubble():
    code, out = run("expand", "bubble")
    assert code == EXIT_OK
    assert out.startswith("indices: n1, n2\nx1: a1 - 1/2*D - n2\n")


def test_verify_exit_codes():
    assert run("verify", "bubble", "--at", "D=3,a1=1,a2=1,p2=1")[0] == EXIT_OK
    at = "D=3,t=1," + ",".join(f"a{i}=1" for i in range(1, 11))
    code, out = run("verify", "ladder", "--at", at)
    assert code == EXIT_SKIPPED and "skipped" in out


def test_verify_reports_failure(monkeypatch):
    # drop one Gamma factor from the closed form; the oracle must notice
    import grmt.cli as cli
    real = cli.evaluate_spec

    def broken(spec):
        ev = real(spec)
        cf = ev.closed_form
        bad = ClosedForm.canonical(cf.prefactor, cf.phase, cf.gammas[1:], cf.scales)
        return replace(ev, closed_form=bad)

    monkeypatch.setattr(cli, "evaluate_spec", broken)
    code, out = run("verify", "bubble", "--at", "D=3,a1=1.2,a2=1,p2=1")
    assert code == EXIT_FAIL and "status: fail" in out


def test_verify_sunset_seeded():
    code, out = run("verify", "sunset", "--at", "D=3,a1=1,a2=6/5,a3=6/5,M2=-1", "--samples", "1e7", "--seed", "42")
    assert code == EXIT_OK
    assert "status: pass" in out


def test_list():
    code, out = run("list")
    assert code == EXIT_OK
    assert [line.split()[0] for line in out.splitlines()] == list(BUILTIN_NAMES)


@pytest.mark.parametrize("argv", [["eval", "box"], ["frobnicate"], [], ["eval", "bubble", "--at", "D"],
                                  ["verify", "bubble"], ["eval", "bubble", "--phase", "none"]])
def test_usage_errors(argv, capsys):
    assert run(*argv)[0] == EXIT_USAGE


def test_parse_error_is_computation_error(tmp_path, capsys):
    path = tmp_path / "broken.grmt"
    path.write_text('problem "x" {\n  vars = [x]\n  integrand = exp(x)\n}\n')
    assert run("eval", str(path))[0] == EXIT_ERROR
    assert "line 3" in capsys.readouterr().err


def test_parse_assignment():
    assert parse_assignment("D=3, a1=6/5,p2=-1") == {"D": 3.0, "a1": 1.2, "p2": -1.0}
    with pytest.raises(UsageError):
        parse_assignment("D=three")


def test_unknown_builtin():
    with pytest.raises(UnknownBuiltin):
        builtin_problem("box")
