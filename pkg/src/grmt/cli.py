"""Command-line interface: ``grmt {eval,expand,verify,options,list}``."""
from __future__ import annotations

import argparse
import os
import sys
import time
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import GRMTError, UnknownBuiltin
from .expr import parse_problem
from .gammaeval import eval_closed_form, numeric_equal
from .library import BUILTIN_NAMES, builtin_problem
from .oracle import OracleConfig, compare_to_closed_form
from .series import expand_all, render_template
from .theorem import enumerate_pairings, evaluate_spec, iterative_rmt, render_closed_form, to_structured

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_FAIL = 2
EXIT_SKIPPED = 3
EXIT_USAGE = 64

VALIDITY = "valid by analytic continuation; verified numerically only in the oracle's convergent region"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


@dataclass
class RunReport:
    name: str
    text: str
    structured: str
    timings: dict = field(default_factory=dict)


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def parse_assignment(text: str | None) -> dict:
    """``D=3,a1=1,p2=6/5`` -> ``{"D": 3.0, "a1": 1.0, "p2": 1.2}``."""
    out = {}
    if not text:
        return out
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        key, sep, value = item.partition("=")
        if not sep or not key.strip():
            raise UsageError(f"bad assignment {item!r}, expected name=value")
        try:
            out[key.strip()] = float(Fraction(value.strip()))
        except (ValueError, ZeroDivisionError):
            raise UsageError(f"bad numeric value in {item!r}") from None
    return out


def load_problem(ref: str):
    """A builtin name or a path to a problem file; returns ``(spec, builtin or None)``."""
    if ref in BUILTIN_NAMES:
        b = builtin_problem(ref)
        return b.spec, b
    if os.path.isfile(ref):
        with open(ref, encoding="utf-8") as fh:
            return parse_problem(fh.read()), None
    raise UnknownBuiltin(ref)


def run_eval(spec) -> RunReport:
    t0 = time.perf_counter()
    ev = evaluate_spec(spec)
    t1 = time.perf_counter()
    text = render_closed_form(ev.closed_form)
    structured = to_structured(ev.closed_form, spec.name, ev.system, ev.solution)
    structured += f"validity = {VALIDITY}\n"
    return RunReport(spec.name, text, structured, {"evaluate": t1 - t0})


def cmd_eval(args, out) -> int:
    spec, _ = load_problem(args.problem)
    report = run_eval(spec)
    point = parse_assignment(args.at)
    lines = [report.text] if args.format == "text" else [report.structured.rstrip("\n")]
    if point:
        ev = evaluate_spec(spec)
        r = eval_closed_form(ev.closed_form, point, args.phase)
        if args.format == "text":
            lines += [f"sign: {r.sign:+d}", f"modulus: {_fmt(r.modulus)}", f"log-modulus: {_fmt(r.log_modulus)}"]
            if r.phase is not None:
                lines.append(f"phase: {_fmt(r.phase.real)} {'+' if r.phase.imag >= 0 else '-'} {_fmt(abs(r.phase.imag))}i")
            lines.append(f"note: {VALIDITY}")
        else:
            lines += [f"value.sign = {r.sign}", f"value.modulus = {_fmt(r.modulus)}",
                      f"value.log_modulus = {_fmt(r.log_modulus)}"]
            if r.phase is not None:
                lines += [f"value.phase.re = {_fmt(r.phase.real)}", f"value.phase.im = {_fmt(r.phase.imag)}"]
    if args.timings:
        print(f"evaluate: {report.timings['evaluate'] * 1e3:.2f} ms", file=sys.stderr)
    print("\n".join(lines), file=out)
    return EXIT_OK


def cmd_expand(args, out) -> int:
    spec, _ = load_problem(args.problem)
    print(render_template(expand_all(spec), list(spec.variables)), file=out)
    return EXIT_OK


def cmd_verify(args, out) -> int:
    spec, _ = load_problem(args.problem)
    point = parse_assignment(args.at)
    try:
        samples = int(float(args.samples))
    except ValueError:
        raise UsageError(f"bad sample count {args.samples!r}") from None
    try:
        cfg = OracleConfig(method=args.method, samples=samples, seed=args.seed,
                           target=args.target, workers=args.workers)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    cf = evaluate_spec(spec).closed_form
    report = compare_to_closed_form(spec, cf, point, cfg)
    print(f"problem: {spec.name}", file=out)
    print("\n".join(report.lines()), file=out)
    if report.status == "skipped":
        return EXIT_SKIPPED
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_options(args, out) -> int:
    spec, _ = load_problem(args.problem)
    template = expand_all(spec)
    reference = evaluate_spec(spec).closed_form
    pairings = enumerate_pairings(template)
    names = list(spec.variables)
    all_equal = True
    for bij, orders in pairings.items():
        cf = iterative_rmt(template, orders[0])
        eq = numeric_equal(cf, reference, trials=args.trials, seed=args.seed)
        all_equal &= eq.equal
        label = ", ".join(f"{names[v - 1]}<->n{j}" for v, j in bij)
        print(f"pairing {label}: {len(orders)} valid order(s); "
              f"{'equal' if eq.equal else 'DIFFERENT'} (max log diff {eq.max_log_diff:.2e})", file=out)
        print(f"  {render_closed_form(cf)}", file=out)
    verdict = "all numerically equal" if all_equal else "NOT all numerically equal"
    print(f"{len(pairings)} valid pairings; {verdict}", file=out)
    return EXIT_OK if all_equal else EXIT_FAIL


def cmd_list(args, out) -> int:
    for name in BUILTIN_NAMES:
        b = builtin_problem(name)
        print(f"{name:8s} {b.spec.n_vars:2d} vars  {b.description}", file=out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="grmt", description="Exact evaluation of parametric integrals by the multidimensional master theorem.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    e = sub.add_parser("eval", help="closed form of a builtin or problem file")
    e.add_argument("problem")
    e.add_argument("--at", help="numeric point, e.g. D=3,a1=1,a2=1,p2=1")
    e.add_argument("--phase", choices=("strip", "principal"), default="strip")
    e.add_argument("--format", choices=("text", "structured"), default="text")
    e.add_argument("--timings", action="store_true")
    e.set_defaults(func=cmd_eval)

    x = sub.add_parser("expand", help="print the series term template")
    x.add_argument("problem")
    x.set_defaults(func=cmd_expand)

    v = sub.add_parser("verify", help="compare the closed form with direct integration")
    v.add_argument("problem")
    v.add_argument("--at", required=True)
    v.add_argument("--samples", default="1e6")
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--method", choices=("auto", "adaptive", "montecarlo"), default="auto")
    v.add_argument("--target", type=float, default=0.02)
    v.add_argument("--workers", type=int, default=1)
    v.set_defaults(func=cmd_verify)

    o = sub.add_parser("options", help="evaluate along every valid one-variable-at-a-time route")
    o.add_argument("problem")
    o.add_argument("--pairings", choices=("all",), default="all")
    o.add_argument("--trials", type=int, default=20)
    o.add_argument("--seed", type=int, default=0)
    o.set_defaults(func=cmd_options)

    ls = sub.add_parser("list", help="list builtin problems")
    ls.set_defaults(func=cmd_list)
    return p


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    try:
        args = build_parser().parse_args(argv)
        return args.func(args, out)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except UnknownBuiltin as exc:
        print(f"usage error: {exc}; try 'grmt list'", file=sys.stderr)
        return EXIT_USAGE
    except GRMTError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
