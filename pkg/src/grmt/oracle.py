"""Direct numerical integration of parametric integrands.

Each axis ``x in (0, inf)`` is mapped from ``t in (0, 1)`` by
``x = (t/(1-t))^p``, so that ``dx/x = p dt / (t(1-t))``.  ``p = 1`` is the
plain rational map used by the adaptive quadrature.  Monte Carlo uses a
larger ``p`` by default: it spreads the heavy power-law tails of Feynman
parametric integrands over the whole unit interval, which keeps the
sample variance finite where the plain map does not.
"""
from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, Optional

import numpy as np
from scipy import integrate
from scipy.special import logsumexp

from .errors import DivergenceSuspected, NonNumericParameter, UnsupportedOracle
from .exact import affine_eval
from .expr import ExpOf, PowerOf, ProblemSpec, ProductOf, SumOf, log_eval, resolve_aliases
from .gammaeval import eval_closed_form, log_gamma_signed

MAX_VARS = 6


@dataclass
class OracleConfig:
    method: str = "auto"  # auto | adaptive | montecarlo
    samples: int = 1_000_000
    seed: int = 0
    target: float = 0.02
    power: Optional[float] = None  # axis map exponent; None picks per method
    chunk_size: int = 1 << 16
    workers: int = 1
    transform: str = "expsinh"  # adaptive only: expsinh | rational
    rtol: float = 1e-10  # adaptive only
    span: float = 7.0  # expsinh half-width in s
    epsabs: float = 1e-13  # rational transform only

    def __post_init__(self):
        if self.method not in ("auto", "adaptive", "montecarlo"):
            raise ValueError(f"unknown oracle method {self.method!r}")
        if not 0 < self.target <= 0.1:
            raise ValueError("target relative error must lie in (0, 0.1]")
        if self.transform not in ("expsinh", "rational"):
            raise ValueError(f"unknown transform {self.transform!r}")
        if self.method == "montecarlo" and self.samples < 10_000:
            raise ValueError("Monte Carlo needs at least 1e4 samples")


@dataclass(frozen=True)
class Estimate:
    value: float
    stderr: float
    samples: int
    method: str
    divergent: bool = False


def _required_names(spec: ProblemSpec, tree) -> set:
    names = set()
    for m in spec.measure:
        names.update(s.name for s in m.symbols())

    def walk(nd):
        if isinstance(nd, (SumOf, ProductOf)):
            for c in nd.children:
                walk(c)
        elif isinstance(nd, PowerOf):
            names.update(s.name for s in nd.exponent.symbols())
            walk(nd.base)
        elif isinstance(nd, ExpOf):
            if isinstance(nd.scale, str):
                names.add(nd.scale)
            walk(nd.numerator)
            if nd.denominator is not None:
                walk(nd.denominator)

    walk(tree)
    if spec.normalize:
        names.update(f"a{i}" for i in range(1, spec.n_vars + 1))
    return names


class _LogIntegrand:
    """``log`` of the full integrand in the unit-cube coordinates."""

    def __init__(self, spec: ProblemSpec, assignment: Mapping, power: float):
        if spec.integrand is None:
            raise UnsupportedOracle(f"{spec.name}: series-only problems have no integrand to sample")
        if spec.n_vars > MAX_VARS:
            raise UnsupportedOracle(f"{spec.name}: {spec.n_vars}-dimensional integral is beyond the oracle (max {MAX_VARS})")
        self.tree = resolve_aliases(spec)
        point = {}
        for name in sorted(_required_names(spec, self.tree)):
            if name not in assignment:
                raise NonNumericParameter(f"{spec.name}: parameter {name} needs a numeric value")
            try:
                point[name] = float(assignment[name])
            except (TypeError, ValueError):
                raise NonNumericParameter(f"{spec.name}: {name}={assignment[name]!r} is not numeric") from None
        self.point = point
        self.nu = np.array([affine_eval(m, point) for m in spec.measure])
        self.power = float(power)
        log_norm = 0.0
        if spec.normalize:
            for i in range(1, spec.n_vars + 1):
                g = log_gamma_signed(point[f"a{i}"])
                if g.pole or g.sign < 0:
                    raise DivergenceSuspected(f"a{i} = {point[f'a{i}']} gives no convergent measure")
                log_norm -= g.log_abs
        self.log_norm = log_norm
        self.n = spec.n_vars

    def at_logx(self, logx):
        """``log`` of ``f(x) prod x^nu / norm`` for ``logx`` of shape ``(n, m)``."""
        val = log_eval(self.tree, list(logx), self.point)
        return val + (self.nu[:, None] * logx).sum(axis=0) + self.log_norm

    def __call__(self, t):
        """Unit-cube form: ``t`` has shape ``(n, m)``; includes the map Jacobian."""
        log_t = np.log(t)
        log_1mt = np.log1p(-t)
        logx = self.power * (log_t - log_1mt)
        jac = self.n * math.log(self.power) - (log_t + log_1mt).sum(axis=0)
        return self.at_logx(logx) + jac


def _expsinh(f: _LogIntegrand, cfg: OracleConfig) -> Estimate:
    """Tensor trapezoid rule in ``s`` with ``x = exp(pi/2 sinh s)``.

    The double-exponential map turns power-law behaviour at 0 and infinity
    into doubly exponential decay, so the trapezoid sum converges
    geometrically as the step halves; the error estimate is the change
    between the last two step sizes.
    """
    span = cfg.span
    prev = None
    h = 0.5
    while h >= 2.0 ** -9:
        s = np.arange(-span, span + h / 2, h)
        logx1 = 0.5 * math.pi * np.sinh(s)
        logw1 = np.log(0.5 * math.pi * np.cosh(s)) + math.log(h)
        grids = np.meshgrid(*([logx1] * f.n), indexing="ij")
        logx = np.stack([g.ravel() for g in grids])
        logw = sum(g.ravel() for g in np.meshgrid(*([logw1] * f.n), indexing="ij"))
        with np.errstate(over="ignore", under="ignore", invalid="ignore"):
            vals = f.at_logx(logx) + logw
        if np.any(np.isnan(vals)) or np.any(vals == np.inf):
            raise DivergenceSuspected("integrand is not finite on the quadrature grid")
        total = float(np.exp(logsumexp(vals)))
        if prev is not None and abs(total - prev) <= cfg.rtol * abs(total):
            # mass on the outermost nodes measures truncation of the s range
            edge = np.zeros(vals.shape, bool)
            for g in grids:
                gr = g.ravel()
                edge |= (gr == logx1[0]) | (gr == logx1[-1])
            edge_mass = float(np.exp(logsumexp(vals[edge]))) if edge.any() else 0.0
            if edge_mass > cfg.rtol * total:
                raise DivergenceSuspected("integrand decays too slowly at 0 or infinity")
            err = max(abs(total - prev), 1e-15 * abs(total))
            return Estimate(total, err, logx.shape[1], "adaptive")
        prev = total
        h /= 2
    raise DivergenceSuspected("quadrature did not settle under step refinement")


def _rational(f: _LogIntegrand, cfg: OracleConfig) -> Estimate:
    """Nested QUADPACK over the plain ``x = t/(1-t)`` map."""

    def g(*ts):
        t = np.array(ts, dtype=float)[:, None]
        with np.errstate(divide="ignore", over="ignore", under="ignore"):
            v = float(f(t)[0])
        return math.exp(v) if v > -math.inf else 0.0

    opts = {"limit": 200, "epsabs": cfg.epsabs, "epsrel": cfg.rtol}
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        value, err = integrate.nquad(g, [(0.0, 1.0)] * f.n, opts=[opts] * f.n)
    if not (math.isfinite(value) and math.isfinite(err)) or err > cfg.target * abs(value):
        raise DivergenceSuspected("adaptive quadrature did not converge")
    return Estimate(value, err, 0, "adaptive")


def _chunk_sum(f: _LogIntegrand, seq: np.random.SeedSequence, m: int):
    """Latin-hypercube block of ``m`` points; returns (sum, max term)."""
    rng = np.random.default_rng(seq)
    t = np.empty((f.n, m))
    for k in range(f.n):
        t[k] = (rng.permutation(m) + rng.random(m)) / m
    np.clip(t, 1e-300, 1 - 1e-16, out=t)
    with np.errstate(over="ignore", under="ignore", invalid="ignore"):
        w = np.exp(f(t))
    if not np.all(np.isfinite(w)):
        raise DivergenceSuspected("integrand is not finite at sampled points")
    return float(w.sum()), float(w.max())


def _montecarlo(f: _LogIntegrand, cfg: OracleConfig) -> Estimate:
    m = cfg.chunk_size
    n_chunks = max(2, -(-cfg.samples // m))
    seqs = np.random.SeedSequence(cfg.seed).spawn(n_chunks)
    if cfg.workers > 1:
        with ThreadPoolExecutor(cfg.workers) as pool:
            parts = list(pool.map(lambda s: _chunk_sum(f, s, m), seqs))
    else:
        parts = [_chunk_sum(f, s, m) for s in seqs]
    # chunk order is fixed, so the float reduction is reproducible
    means = np.array([s for s, _ in parts]) / m
    biggest = max(mx for _, mx in parts)
    value = float(means.mean())
    stderr = float(means.std(ddof=1) / math.sqrt(n_chunks))
    _check_growth(means, biggest, n_chunks * m)
    return Estimate(value, stderr, n_chunks * m, "montecarlo")


def _check_growth(means: np.ndarray, biggest: float, total: int) -> None:
    """Flag runs whose estimate keeps climbing as samples double."""
    k = len(means)
    prefixes = []
    size = max(1, k // 16)
    while size <= k:
        prefixes.append(means[:size].mean())
        size *= 2
    grows = len(prefixes) >= 4 and all(b > 1.25 * a for a, b in zip(prefixes, prefixes[1:]))
    # one sample carrying most of the total is the other classic symptom
    dominated = biggest > 0.5 * means.sum() * (total // k)
    if grows or dominated:
        raise DivergenceSuspected("Monte Carlo estimate does not settle as samples double")


def integrate_parametric(spec: ProblemSpec, assignment: Mapping, config: OracleConfig | None = None) -> Estimate:
    """Integrate ``prod dx_i x_i^(nu_i-1) f(x) / norm`` at a numeric point."""
    cfg = config or OracleConfig()
    method = cfg.method
    if method == "auto":
        method = "adaptive" if spec.n_vars <= 2 else "montecarlo"
    if method == "adaptive" and spec.n_vars > 2:
        raise UnsupportedOracle("adaptive quadrature is limited to two variables")
    power = cfg.power if cfg.power is not None else (1.0 if method == "adaptive" else 12.0)
    f = _LogIntegrand(spec, assignment, power)
    if method == "montecarlo":
        return _montecarlo(f, cfg)
    return _expsinh(f, cfg) if cfg.transform == "expsinh" else _rational(f, cfg)


@dataclass
class CompareReport:
    status: str  # pass | fail | skipped
    estimate: Optional[Estimate] = None
    closed_value: Optional[float] = None
    z: Optional[float] = None
    rel_diff: Optional[float] = None
    reason: str = ""
    extra: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    def lines(self) -> list:
        if self.status == "skipped":
            return ["status: skipped", f"reason: {self.reason}"]
        e = self.estimate
        return [
            f"oracle: {e.value:.12g} +- {e.stderr:.3g} ({e.method}, {e.samples} samples)",
            f"closed form: {self.closed_value:.12g}",
            f"z: {self.z:.3g}",
            f"relative difference: {self.rel_diff:.3g}",
            f"status: {self.status}",
        ]


def compare_to_closed_form(spec: ProblemSpec, cf, assignment: Mapping,
                           config: OracleConfig | None = None) -> CompareReport:
    """Oracle estimate against the strip-mode closed-form value."""
    cfg = config or OracleConfig()
    try:
        est = integrate_parametric(spec, assignment, cfg)
    except UnsupportedOracle as exc:
        return CompareReport("skipped", reason=str(exc))
    closed = eval_closed_form(cf, assignment, "strip").value
    diff = est.value - closed
    rel = abs(diff) / abs(closed) if closed else math.inf
    z = diff / est.stderr if est.stderr > 0 else (0.0 if diff == 0 else math.copysign(math.inf, diff))
    ok = abs(z) <= 3 or rel <= cfg.target
    return CompareReport("pass" if ok else "fail", est, closed, z, rel)

