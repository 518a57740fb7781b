"""Cut sparsification by strong-connectivity sampling, and presampled bundles.

An edge of weight y whose strong connectivity is k is kept with
probability min(1, c0 * y * ln n / (eps^2 * k)) and, if kept, reweighted by
the inverse probability.  Any lower bound on k only raises the
probabilities, which never hurts accuracy, so a factor-two estimate from a
threshold decomposition is enough.

``sparsify_stream`` reads its edges once.  Edges are handled in chunks;
the connectivity of a chunk edge is measured in the graph made of the
sample kept so far plus the chunk, which is a prefix of the final graph, so
its connectivity can only underestimate the final one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .flow import CapGraph

C_CUT = 8.0
C0 = 16.0


@njit(cache=True)
def _stoer_wagner_dense(A: np.ndarray) -> tuple[float, np.ndarray]:
    """Global min cut of a dense symmetric matrix; returns (value, side mask)."""
    k = A.shape[0]
    A = A.copy()
    group = np.arange(k)  # group[v]: the merged vertex v now belongs to
    active = np.ones(k, np.bool_)
    best_val = np.inf
    best_side = np.zeros(k, np.bool_)
    for remaining in range(k, 1, -1):
        used = np.zeros(k, np.bool_)
        conn = np.zeros(k)
        prev = -1
        last = -1
        for _ in range(remaining):
            j = -1
            bv = -np.inf
            for v in range(k):
                if active[v] and not used[v] and conn[v] > bv:
                    bv = conn[v]
                    j = v
            used[j] = True
            prev = last
            last = j
            for v in range(k):
                conn[v] += A[j, v]
        cut = 0.0
        for v in range(k):
            if active[v] and v != last:
                cut += A[last, v]
        if cut < best_val:
            best_val = cut
            for v in range(k):
                best_side[v] = group[v] == last
        for v in range(k):
            if group[v] == last:
                group[v] = prev
        for v in range(k):
            A[prev, v] += A[last, v]
            A[v, prev] += A[v, last]
        A[prev, prev] = 0.0
        active[last] = False
    return best_val, best_side


def stoer_wagner(n: int, nodes: list[int], W: np.ndarray) -> tuple[float, list[int]]:
    """Global min cut of the dense weight matrix W restricted to ``nodes``.

    Returns (value, one side as original node ids).
    """
    if len(nodes) < 2:
        return float("inf"), list(nodes)
    A = np.ascontiguousarray(W[np.ix_(nodes, nodes)], dtype=np.float64)
    val, side = _stoer_wagner_dense(A)
    return float(val), [v for v, s in zip(nodes, side.tolist()) if s]


def _components(nodes: list[int], W: np.ndarray) -> list[list[int]]:
    idx = {v: i for i, v in enumerate(nodes)}
    seen = set()
    out = []
    for v in nodes:
        if v in seen:
            continue
        comp, stack = [], [v]
        seen.add(v)
        while stack:
            a = stack.pop()
            comp.append(a)
            for b in np.flatnonzero(W[a] > 0).tolist():
                if b in idx and b not in seen:
                    seen.add(b)
                    stack.append(b)
        out.append(comp)
    return out


def strong_components(nodes: list[int], W: np.ndarray, t: float) -> list[list[int]]:
    """The maximal node sets of size >= 2 whose induced min cut is >= t."""
    return [c for c, _ in _strong_split(nodes, W, t)]


def _strong_split(nodes: list[int], W: np.ndarray, t: float) -> list[tuple[list[int], float]]:
    """Like strong_components, with each component's induced min cut value."""
    out = []
    work = [nodes]
    while work:
        part = work.pop()
        sub = np.zeros_like(W)
        sub[np.ix_(part, part)] = W[np.ix_(part, part)]
        for comp in _components(part, sub):
            if len(comp) < 2:
                continue
            val, side = stoer_wagner(W.shape[0], comp, W)
            if val >= t:
                out.append((comp, val))
            else:
                s = set(side)
                work.append([v for v in comp if v in s])
                work.append([v for v in comp if v not in s])
    return out


def strong_connectivity(g: CapGraph) -> dict[tuple[int, int], float]:
    """Per-edge strong connectivity, rounded down to a power of two.

    For every threshold 2^j the graph is split into its 2^j-strong components
    by repeated global min cuts; an edge gets the largest threshold whose
    component still contains it.  The result is a lower bound within a
    factor of two.  A component whose min cut clears the next threshold is
    carried over without another cut computation.
    """
    if not g.edges:
        return {}
    W = np.zeros((g.n, g.n))
    for (a, b), c in g.edges.items():
        W[a, b] = W[b, a] = c
    wmin = min(g.edges.values())
    wtot = sum(g.edges.values())
    lo = math.floor(math.log2(wmin))
    hi = math.ceil(math.log2(wtot)) + 1
    k = {e: 2.0**lo for e in g.edges}
    regions: list[tuple[list[int], float]] = [(list(range(g.n)), -math.inf)]
    for j in range(lo, hi + 1):
        t = 2.0**j
        nxt: list[tuple[list[int], float]] = []
        for reg, val in regions:
            nxt.extend([(reg, val)] if val >= t else _strong_split(reg, W, t))
        if not nxt:
            break
        for comp, _ in nxt:
            s = set(comp)
            for (a, b) in g.edges:
                if a in s and b in s:
                    k[(a, b)] = t
        regions = nxt
    return k


@dataclass
class Sparsifier:
    n: int
    us: np.ndarray
    vs: np.ndarray
    yhat: np.ndarray
    prob: np.ndarray
    target_error: float
    seed: int

    @property
    def edges(self) -> dict[tuple[int, int], float]:
        return {
            (min(a, b), max(a, b)): w
            for a, b, w in zip(self.us.tolist(), self.vs.tolist(), self.yhat.tolist())
        }

    @property
    def m(self) -> int:
        return len(self.us)

    @property
    def words(self) -> int:
        return 3 * self.m

    def degrees(self) -> np.ndarray:
        d = np.zeros(self.n)
        np.add.at(d, self.us, self.yhat)
        np.add.at(d, self.vs, self.yhat)
        return d

    def cut_value(self, side) -> float:
        s = np.zeros(self.n, bool)
        s[list(side)] = True
        return float(self.yhat[s[self.us] != s[self.vs]].sum())

    def to_capgraph(self, n: int | None = None) -> CapGraph:
        return CapGraph.from_arrays(self.n if n is None else n, self.us, self.vs, self.yhat)

    def to_text(self) -> str:
        return "".join(f"{a} {b} {w:.17g}\n" for a, b, w in zip(self.us.tolist(), self.vs.tolist(), self.yhat.tolist()))


def sampling_probability(y, k, n, eps, c0=C0):
    y = np.asarray(y, float)
    k = np.asarray(k, float)
    with np.errstate(divide="ignore", invalid="ignore"):
        p = c0 * y * math.log(max(n, 2)) / (eps * eps * k)
    p = np.where(y > 0, p, 0.0)
    return np.minimum(1.0, np.nan_to_num(p, nan=1.0, posinf=1.0))


def base_probabilities(
    n: int,
    us: np.ndarray,
    vs: np.ndarray,
    y: np.ndarray,
    eps: float,
    seed: int,
    c0: float = C0,
    chunk: int | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Single-pass probabilities; returns (p, kept mask) for a base sample.

    The connectivity of each chunk edge is measured in (kept sample so far)
    plus (chunk), with kept edges carrying their reweighted values.
    """
    m = len(us)
    rng = np.random.default_rng(seed)
    draws = rng.random(m)
    p = np.zeros(m)
    kept = np.zeros(m, bool)
    if m == 0:
        return p, kept
    chunk = chunk or max(4 * n, 64)
    deg = np.zeros(n)
    sample_u: list[int] = []
    sample_v: list[int] = []
    sample_w: list[float] = []
    for start in range(0, m, chunk):
        sl = slice(start, min(m, start + chunk))
        cu, cv, cy = us[sl], vs[sl], y[sl]
        d = deg.copy()
        np.add.at(d, cu, cy)
        np.add.at(d, cv, cy)
        # connectivity never exceeds the smaller endpoint degree
        k_upper = np.minimum(d[cu], d[cv])
        pc = sampling_probability(cy, k_upper, n, eps, c0)
        need = (pc < 1.0) & (cy > 0)
        if need.any():
            h = CapGraph.from_arrays(
                n,
                np.concatenate([np.asarray(sample_u, np.int64), cu]),
                np.concatenate([np.asarray(sample_v, np.int64), cv]),
                np.concatenate([np.asarray(sample_w), cy]),
            )
            kmap = strong_connectivity(h)
            ks = np.array([kmap[(min(a, b), max(a, b))] for a, b in zip(cu[need].tolist(), cv[need].tolist())])
            pc[need] = sampling_probability(cy[need], ks, n, eps, c0)
        p[sl] = pc
        keep = draws[sl] < pc
        kept[sl] = keep
        for a, b, w, q in zip(cu[keep].tolist(), cv[keep].tolist(), cy[keep].tolist(), pc[keep].tolist()):
            sample_u.append(a)
            sample_v.append(b)
            sample_w.append(w / q)
            deg[a] += w / q
            deg[b] += w / q
    return p, kept


def sparsify_stream(
    n: int,
    us: np.ndarray,
    vs: np.ndarray,
    y: np.ndarray,
    delta: float,
    seed: int,
    C: float = C_CUT,
    c0: float = C0,
) -> Sparsifier:
    """One-pass cut sparsifier with target error delta / C."""
    us = np.asarray(us, np.int64)
    vs = np.asarray(vs, np.int64)
    y = np.asarray(y, float)
    eps = delta / C
    p, kept = base_probabilities(n, us, vs, y, eps, seed, c0)
    return Sparsifier(n, us[kept], vs[kept], y[kept] / p[kept], p[kept], eps, seed)


class PresampleConfigError(ValueError):
    pass


@dataclass
class PresampleBundle:
    """k independent edge samples drawn in one pass for k future iterations."""

    n: int
    k: int
    delta: float
    us: np.ndarray
    vs: np.ndarray
    prob: np.ndarray  # inflated inclusion probabilities, shared by all slots
    masks: list[np.ndarray] = field(default_factory=list)
    target_error: float = 0.0
    seed: int = 0

    @property
    def words(self) -> int:
        return int(sum(2 * int(m.sum()) for m in self.masks))

    def sparsifier(self, slot: int, y_current: np.ndarray) -> Sparsifier:
        """Sparsifier for iteration ``slot`` of the bundle under the current weights."""
        mk = self.masks[slot]
        y_current = np.asarray(y_current, float)
        return Sparsifier(
            self.n,
            self.us[mk],
            self.vs[mk],
            y_current[mk] / self.prob[mk],
            self.prob[mk],
            self.target_error,
            self.seed,
        )


def presample(
    n: int,
    us: np.ndarray,
    vs: np.ndarray,
    y_start: np.ndarray,
    k: int,
    delta: float,
    seed: int,
    C: float = C_CUT,
    c0: float = C0,
) -> PresampleBundle:
    """Draw k sample sets whose probabilities are inflated by exp(k * delta)."""
    if k < 1:
        raise PresampleConfigError("k must be positive")
    # k = ceil(ln n / (p delta)) may overshoot ln n / delta by one step
    if k * delta > math.log(max(n, 2)) + delta + 1e-12:
        raise PresampleConfigError(f"k*delta = {k * delta:.3g} exceeds ln n + delta = {math.log(max(n, 2)) + delta:.3g}")
    us = np.asarray(us, np.int64)
    vs = np.asarray(vs, np.int64)
    y_start = np.asarray(y_start, float)
    eps = delta / C
    base, _ = base_probabilities(n, us, vs, y_start, eps, seed, c0)
    prob = np.minimum(1.0, base * math.exp(k * delta))
    rng = np.random.default_rng([seed, 1])
    masks = [rng.random(len(us)) < prob for _ in range(k)]
    return PresampleBundle(n, k, delta, us, vs, prob, masks, eps, seed)
