"""Compare the bubble closed form with the adaptive oracle over random
generic points in the convergent region."""
import argparse
import time

import numpy as np

from grmt.errors import DivergenceSuspected
from grmt.library import builtin_problem
from grmt.oracle import compare_to_closed_form
from grmt.theorem import grmt_evaluate


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--points", type=int, default=10)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    spec = builtin_problem("bubble").spec
    cf = grmt_evaluate(spec)
    rng = np.random.default_rng(args.seed)
    worst = 0.0
    for _ in range(args.points):
        # convergence needs a1, a2 < D/2 and D/2 < a1 + a2
        d = rng.uniform(2.6, 3.8)
        a1, a2 = rng.uniform(d / 4 + 0.1, d / 2 - 0.05, 2)
        point = {"D": d, "a1": a1, "a2": a2, "p2": rng.uniform(0.5, 2)}
        t0 = time.perf_counter()
        try:
            r = compare_to_closed_form(spec, cf, point)
        except DivergenceSuspected as exc:
            print(f"D={d:.3f} a1={a1:.3f} a2={a2:.3f}: divergent ({exc})")
            continue
        worst = max(worst, r.rel_diff)
        print(f"D={d:.3f} a1={a1:.3f} a2={a2:.3f}  closed={r.closed_value:.12g}  "
              f"rel={r.rel_diff:.1e}  {time.perf_counter() - t0:.2f}s")
    print(f"worst relative difference: {worst:.2e}")


if __name__ == "__main__":
    main()
