"""Numeric evaluation of closed forms in log space with explicit sign tracking."""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Mapping, NamedTuple, Optional

import numpy as np

from .errors import NegativeScaleBase, PoleEncountered, TooManyPoles, UnassignedSymbol
from .exact import Kind, affine_eval, render_affine

POLE_TOL = 1e-12


class SignedLogValue(NamedTuple):
    sign: int
    log_abs: float
    pole: bool = False


def log_gamma_signed(x: float) -> SignedLogValue:
    """``(sign, log|Gamma(x)|)`` for real ``x``; nonpositive integers flag a pole."""
    if x <= 0 and abs(x - round(x)) <= POLE_TOL:
        return SignedLogValue(0, math.inf, True)
    if x > 0:
        return SignedLogValue(1, math.lgamma(x))
    # between poles: Gamma changes sign at every nonpositive integer
    sign = -1 if math.floor(x) % 2 else 1
    return SignedLogValue(sign, math.lgamma(x))


@dataclass(frozen=True)
class NumericResult:
    sign: int
    log_modulus: float
    phase_exponent: float = 0.0
    phase: Optional[complex] = None  # set in principal mode only

    @property
    def modulus(self) -> float:
        return math.exp(self.log_modulus)

    @property
    def value(self):
        """Real signed value (strip mode) or complex value (principal mode)."""
        v = self.sign * self.modulus
        return v if self.phase is None else v * self.phase


def eval_closed_form(cf, assignment: Mapping, phase: str = "strip") -> NumericResult:
    """Evaluate at numeric parameter values; ``assignment`` is keyed by symbol name."""
    if phase not in ("strip", "principal"):
        raise ValueError(f"unknown phase mode {phase!r}")
    sign = 1 if cf.prefactor > 0 else -1
    log_mod = math.log(abs(cf.prefactor))
    for g in cf.gammas:
        x = affine_eval(g.arg, assignment)
        v = log_gamma_signed(x)
        if v.pole:
            raise PoleEncountered(render_affine(g.arg), x, "numerator" if g.power > 0 else "denominator")
        sign *= v.sign ** abs(g.power)
        log_mod += g.power * v.log_abs
    for s in cf.scales:
        if isinstance(s.base, str):
            if s.base not in assignment:
                raise UnassignedSymbol(s.base)
            b = float(assignment[s.base])
        else:
            b = float(s.base)
        if s.negated:
            b = -b
        if not b > 0:
            raise NegativeScaleBase(("-" if s.negated else "") + str(s.base), b)
        log_mod += affine_eval(s.exponent, assignment) * math.log(b)
    pe = affine_eval(cf.phase, assignment) if not cf.phase.is_zero() else 0.0
    ph = cmath.exp(1j * math.pi * pe) if phase == "principal" else None
    return NumericResult(sign, log_mod, pe, ph)


# -- sampling equality ---------------------------------------------------------

@dataclass
class EqualityReport:
    equal: bool
    trials: int
    max_log_diff: float = 0.0
    failures: list = field(default_factory=list)

    def __bool__(self):
        return self.equal


def _near_small_rational(x: float, max_den: int = 12, tol: float = 1e-3) -> bool:
    return any(abs(x * q - round(x * q)) < tol for q in range(1, max_den + 1))


def sample_assignment(rng: np.random.Generator, symbols, scale_tags) -> dict:
    """Random generic parameter point: D in [2.1, 6.9], a_i and parameters in
    [0.3, 1.7], scale magnitudes in [0.5, 2] (signed so tagged bases stay positive)."""
    out = {}
    for s in sorted(symbols, key=lambda s: s.sort_key()):
        if s.kind is Kind.DIMENSION:
            while True:
                d = rng.uniform(2.1, 6.9)
                if not _near_small_rational(d):
                    break
            out[s.name] = d
        elif s.kind in (Kind.PROPAGATOR, Kind.PARAM):
            out[s.name] = rng.uniform(0.3, 1.7)
    for base, negated in sorted(scale_tags, key=lambda t: (str(t[0]), t[1])):
        if isinstance(base, str):
            u = rng.uniform(0.5, 2.0)
            out.setdefault(base, -u if negated else u)
    return out


def numeric_equal(cf1, cf2, trials: int = 20, seed: int = 0, rel_tol: float = 1e-9,
                  max_retries: int = 10) -> EqualityReport:
    """Compare two closed forms at random generic points (sign and log-modulus)."""
    symbols = cf1.symbols() | cf2.symbols()
    tags = cf1.scale_bases() | cf2.scale_bases()
    report = EqualityReport(True, trials)
    for k, child in enumerate(np.random.SeedSequence(seed).spawn(trials)):
        rng = np.random.default_rng(child)
        for _ in range(max_retries + 1):
            point = sample_assignment(rng, symbols, tags)
            try:
                r1 = eval_closed_form(cf1, point)
                r2 = eval_closed_form(cf2, point)
            except PoleEncountered:
                continue
            break
        else:
            raise TooManyPoles(f"trial {k}: {max_retries} resamples all hit Gamma poles")
        diff = abs(r1.log_modulus - r2.log_modulus)
        report.max_log_diff = max(report.max_log_diff, diff)
        dphase = (r1.phase_exponent - r2.phase_exponent) % 2.0
        phase_ok = min(dphase, 2.0 - dphase) <= rel_tol * max(1.0, abs(r1.phase_exponent))
        if r1.sign != r2.sign or diff > rel_tol * max(1.0, abs(r1.log_modulus)) or not phase_ok:
            report.equal = False
            report.failures.append((k, point, r1, r2))
    return report
