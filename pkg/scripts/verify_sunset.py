"""Monte Carlo check of the two-loop sunset at the Euclidean point.

Runs the oracle over several seeds and sample counts and prints the
estimate, its standard error and the distance to the closed form.

    python scripts/verify_sunset.py --samples 1e6 1e7 --seeds 0 1 2
"""
import argparse
import time
from dataclasses import dataclass, field

from grmt.library import builtin_problem
from grmt.oracle import OracleConfig, compare_to_closed_form
from grmt.theorem import grmt_evaluate


@dataclass
class SweepConfig:
    samples: list = field(default_factory=lambda: [1_000_000, 10_000_000])
    seeds: list = field(default_factory=lambda: [0, 1, 2])
    power: float = 12.0
    workers: int = 1
    # m^2 = 1 in Euclidean signature; the source carries exp(+M2 ...)
    point: dict = field(default_factory=lambda: {"D": 3, "a1": 1, "a2": 1.2, "a3": 1.2, "M2": -1})


def run(cfg: SweepConfig):
    spec = builtin_problem("sunset").spec
    cf = grmt_evaluate(spec)
    print(f"{'samples':>10} {'seed':>4} {'estimate':>12} {'stderr':>9} {'z':>7} {'rel':>9} {'sec':>6}")
    for n in cfg.samples:
        for seed in cfg.seeds:
            oc = OracleConfig(method="montecarlo", samples=n, seed=seed, power=cfg.power, workers=cfg.workers)
            t0 = time.perf_counter()
            r = compare_to_closed_form(spec, cf, cfg.point, oc)
            dt = time.perf_counter() - t0
            e = r.estimate
            print(f"{e.samples:>10} {seed:>4} {e.value:>12.6f} {e.stderr:>9.3g} {r.z:>7.2f} {r.rel_diff:>9.2e} {dt:>6.2f}")
    print(f"closed form: {r.closed_value:.10f}")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--samples", nargs="+", type=float, default=[1e6, 1e7])
    ap.add_argument("--seeds", nargs="+", type=int, default=[0, 1, 2])
    ap.add_argument("--power", type=float, default=12.0)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()
    run(SweepConfig([int(s) for s in args.samples], args.seeds, args.power, args.workers))


if __name__ == "__main__":
    main()
