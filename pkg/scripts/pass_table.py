"""Passes and peak memory of the estimator in simple and compressed mode.

Prints the normalized constants passes * delta^2 / ln n (simple) and
passes * delta / p (compressed), plus the peak-memory ratio between modes.

    python scripts/pass_table.py --n 64 256 --p 2 --seeds 3
"""

from __future__ import annotations

import argparse
import math

from _instances import FAMILIES, edges_of, stream_of
from semistream.estimate import EstimateConfig, estimate_mcm


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, nargs="+", default=[64, 256])
    ap.add_argument("--eps", type=float, default=0.2)
    ap.add_argument("--p", type=int, default=2)
    ap.add_argument("--seeds", type=int, default=3)
    a = ap.parse_args()
    print(f"{'family':10} {'n':>4} {'simple':>10} {'c1':>7} {'k':>4} {'compressed':>10} {'c2':>6} {'peak x':>7}")
    for n in a.n:
        for kind in FAMILIES:
            edges = edges_of(kind, n, 0)
            simple = [estimate_mcm(stream_of(n, edges), a.eps, config=EstimateConfig(seed=s)) for s in range(a.seeds)]
            comp = [estimate_mcm(stream_of(n, edges), a.eps, p=a.p, config=EstimateConfig(seed=s))
                    for s in range(a.seeds)]
            d, k = simple[0].delta, comp[0].k
            sp = [r.ledger.passes for r in simple]
            cp = [r.ledger.passes for r in comp]
            growth = max(r.ledger.peak_words for r in comp) / min(r.ledger.peak_words for r in simple)
            print(f"{kind:10} {n:4d} {str(sorted(set(sp))):>10} {max(sp) * d * d / math.log(n):7.4f} {k:4d} "
                  f"{str(sorted(set(cp))):>10} {max(cp) * d / a.p:6.3f} {growth:7.1f}")


if __name__ == "__main__":
    main()
