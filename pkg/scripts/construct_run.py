"""Run the matching construction on a graph family or an edge-list file.

    python scripts/construct_run.py --family cliques --n 60 --eps 0.2
    python scripts/construct_run.py --file graph.txt
"""

from __future__ import annotations

import argparse

import numpy as np

from _instances import FAMILIES, edges_of, optimum, stream_of
from semistream.construct import audit, stream_match
from semistream.graph import open_stream


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--family", choices=FAMILIES, default="cliques")
    ap.add_argument("--n", type=int, default=40)
    ap.add_argument("--file", default=None)
    ap.add_argument("--eps", type=float, default=0.2)
    ap.add_argument("--weighted", action="store_true")
    ap.add_argument("--seed", type=int, default=0)
    a = ap.parse_args()
    if a.file:
        s = open_stream(a.file, remap=True)
        us, vs, ws = s.peek_arrays()
        n, edges, w = s.n, list(zip(us.tolist(), vs.tolist())), ws
    else:
        n, edges = a.n, edges_of(a.family, a.n, a.seed)
        w = np.random.default_rng(a.seed).integers(1, 11, len(edges)).astype(float) if a.weighted else None
    res = stream_match(stream_of(n, edges, w), a.eps)
    opt = optimum(n, edges, w)
    print(f"nodes {n}, edges {len(edges)}, optimum {opt:g}")
    print(f"matching {res.value:g} ({res.value / opt:.4f} of optimum), fractional {res.fractional_value:.4f}")
    print(f"passes {res.ledger.passes}, peak words {res.ledger.peak_words}, rungs {len(res.rungs)}")
    print(f"violated constraints after scaling: {len(audit(res.y))}")


if __name__ == "__main__":
    main()
