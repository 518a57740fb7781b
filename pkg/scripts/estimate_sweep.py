"""Estimate / optimum ratios of the matching-size estimators on random graphs.

    python scripts/estimate_sweep.py --n 12 24 --trials 5 --p 0 2
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from _instances import FAMILIES, edges_of, optimum, stream_of
from semistream.estimate import EstimateConfig, estimate_mcm, estimate_mwm


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, nargs="+", default=[12, 24])
    ap.add_argument("--trials", type=int, default=3)
    ap.add_argument("--eps", type=float, default=0.2)
    ap.add_argument("--p", type=int, nargs="+", default=[0])
    ap.add_argument("--weighted", action="store_true")
    a = ap.parse_args()
    print(f"{'family':10} {'n':>4} {'p':>2} {'min ratio':>9} {'max ratio':>9} {'passes':>6} {'sec':>6}")
    for kind in FAMILIES:
        for n in a.n:
            for p in a.p:
                ratios, passes, t0 = [], [], time.perf_counter()
                for t in range(a.trials):
                    edges = edges_of(kind, n, t)
                    w = None
                    if a.weighted:
                        w = np.random.default_rng(t).integers(1, 11, len(edges)).astype(float)
                        res = estimate_mwm(stream_of(n, edges, w), a.eps, p=p, config=EstimateConfig(seed=t))
                    else:
                        res = estimate_mcm(stream_of(n, edges), a.eps, p=p, config=EstimateConfig(seed=t))
                    ratios.append(res.value / optimum(n, edges, w))
                    passes.append(res.ledger.passes)
                dt = (time.perf_counter() - t0) / a.trials
                print(f"{kind:10} {n:4d} {p:2d} {min(ratios):9.4f} {max(ratios):9.4f} {max(passes):6d} {dt:6.2f}")


if __name__ == "__main__":
    main()
