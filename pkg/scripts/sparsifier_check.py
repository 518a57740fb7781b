"""Cut error and edge retention of the connectivity-based sparsifier.

With the default constants every probability saturates at 1 on small
graphs; lower --c0 and --C to see real sampling.

    python scripts/sparsifier_check.py --n 40 --c0 16 0.5 0.05 --C 1 --eps 0.3
"""

from __future__ import annotations

import argparse

import numpy as np

from _instances import edges_of
from semistream.sparsify import C0, sparsify_stream


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=40)
    ap.add_argument("--eps", type=float, default=0.3)
    ap.add_argument("--c0", type=float, nargs="+", default=[C0, 0.5, 0.05])
    ap.add_argument("--C", type=float, default=1.0, help="error divisor: sampling uses eps / C")
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--cuts", type=int, default=200)
    a = ap.parse_args()
    rng = np.random.default_rng(0)
    edges = edges_of("gnp", a.n, 0) + edges_of("cliques", a.n, 1)
    edges = sorted(set(edges))
    us = np.array([e[0] for e in edges])
    vs = np.array([e[1] for e in edges])
    y = rng.uniform(0.2, 1.0, len(edges))
    sides = [rng.random(a.n) < 0.5 for _ in range(a.cuts)]
    true = np.array([y[s[us] != s[vs]].sum() for s in sides])
    print(f"{'c0':>6} {'kept':>8} {'p<1':>6} {'max rel err':>11}")
    for c0 in a.c0:
        kept, sampled, worst = [], [], 0.0
        for seed in range(a.seeds):
            sp = sparsify_stream(a.n, us, vs, y, a.eps, seed, C=a.C, c0=c0)
            kept.append(sp.m / len(edges))
            sampled.append(float((sp.prob < 1).mean()) if sp.m else 0.0)
            for s, t in zip(sides, true):
                if t > 0:
                    worst = max(worst, abs(sp.cut_value(np.flatnonzero(s)) - t) / t)
        print(f"{c0:6.2f} {np.mean(kept):8.3f} {np.mean(sampled):6.3f} {worst:11.4f}")


if __name__ == "__main__":
    main()
