"""Truncation study: how fast the expanded series converges back to the
integrand at small x, as a function of the index cutoff."""
import argparse

import numpy as np

from grmt.expr import evaluate, resolve_aliases
from grmt.library import builtin_problem
from grmt.series import expand_all, partial_sum

POINTS = {
    "bubble": {"D": 3.3, "a1": 0.8, "a2": 1.1, "p2": 0.9},
    "sunset": {"D": 3.3, "a1": 0.8, "a2": 1.1, "a3": 1.2, "M2": -0.9},
}
# the summand that absorbs the residual power has to dominate
INSIDE = {
    "bubble": lambda x: x[1] / x[0] < 0.25,
    "sunset": lambda x: x[1] * x[2] / (x[0] * (x[1] + x[2])) < 0.25 and x[2] / x[1] < 0.25,
}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("problem", choices=sorted(POINTS), nargs="?", default="bubble")
    ap.add_argument("--points", type=int, default=3)
    ap.add_argument("--cutoffs", type=int, nargs="+", default=[2, 4, 6, 8, 12])
    ap.add_argument("--seed", type=int, default=11)
    args = ap.parse_args()

    spec = builtin_problem(args.problem).spec
    t = expand_all(spec)
    tree = resolve_aliases(spec)
    point = POINTS[args.problem]
    rng = np.random.default_rng(args.seed)
    done = 0
    print("x".ljust(30) + "".join(f"N={k:<9}" for k in args.cutoffs))
    while done < args.points:
        x = rng.uniform(0.05, 0.3, spec.n_vars)
        if not INSIDE[args.problem](x):
            continue
        exact = float(evaluate(tree, list(x), point))
        errs = [abs(partial_sum(t, x, point, max_index=k) / exact - 1) for k in args.cutoffs]
        print(np.array2string(x, precision=3).ljust(30) + "".join(f"{e:<11.2e}" for e in errs))
        done += 1


if __name__ == "__main__":
    main()
