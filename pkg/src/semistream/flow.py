"""Max-flow, Gomory-Hu trees (Gusfield) and minimum odd cuts (Padberg-Rao).

Graphs are undirected with real capacities.  The max-flow kernel is Dinic's
algorithm on a forward-star arc list, compiled with numba; every Gomory-Hu
tree costs ``n - 1`` calls to it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np
from numba import njit


class CapGraph:
    """Undirected graph with nonnegative capacities on unordered pairs.

    Zero-capacity edges are dropped, since they cannot change any cut.
    """

    __slots__ = ("n", "edges", "_arrays")

    def __init__(self, n: int, edges: Mapping[tuple[int, int], float] | Iterable = ()):
        self.n = int(n)
        self.edges: dict[tuple[int, int], float] = {}
        items = edges.items() if isinstance(edges, Mapping) else edges
        for key, c in items:
            a, b = key
            if a == b:
                raise ValueError(f"self-loop on node {a}")
            if not (0 <= a < self.n and 0 <= b < self.n):
                raise ValueError(f"edge ({a}, {b}) out of range for n={self.n}")
            if c < 0:
                raise ValueError("capacities must be nonnegative")
            if c == 0:
                continue
            k = (a, b) if a < b else (b, a)
            self.edges[k] = self.edges.get(k, 0.0) + float(c)
        self._arrays = None

    @classmethod
    def from_arrays(cls, n: int, us, vs, caps) -> "CapGraph":
        g = cls(n)
        for a, b, c in zip(np.asarray(us).tolist(), np.asarray(vs).tolist(), np.asarray(caps).tolist()):
            if c > 0:
                k = (a, b) if a < b else (b, a)
                g.edges[k] = g.edges.get(k, 0.0) + c
        return g

    def arrays(self):
        if self._arrays is None:
            m = len(self.edges)
            us = np.empty(m, np.int64)
            vs = np.empty(m, np.int64)
            cs = np.empty(m, np.float64)
            for idx, ((a, b), c) in enumerate(self.edges.items()):
                us[idx], vs[idx], cs[idx] = a, b, c
            self._arrays = _forward_star(self.n, us, vs, cs)
        return self._arrays

    def cut_value(self, side: Iterable[int]) -> float:
        s = set(side)
        return float(sum(c for (a, b), c in self.edges.items() if (a in s) != (b in s)))

    def degree(self, i: int) -> float:
        return float(sum(c for (a, b), c in self.edges.items() if a == i or b == i))


def _forward_star(n, us, vs, cs):
    m = len(us)
    to = np.empty(2 * m, np.int64)
    cap = np.empty(2 * m, np.float64)
    to[0::2], to[1::2] = vs, us
    cap[0::2], cap[1::2] = cs, cs
    head = np.full(n, -1, np.int64)
    nxt = np.empty(2 * m, np.int64)
    tails = np.empty(2 * m, np.int64)
    tails[0::2], tails[1::2] = us, vs
    for e in range(2 * m):
        t = tails[e]
        nxt[e] = head[t]
        head[t] = e
    scale = float(cs.max()) if m else 1.0
    return head, nxt, to, cap, scale


@njit(cache=True)
def _dinic(n, head, nxt, to, cap0, s, t, eps):
    cap = cap0.copy()
    level = np.empty(n, np.int64)
    it = np.empty(n, np.int64)
    queue = np.empty(n, np.int64)
    path = np.empty(n, np.int64)
    flow = 0.0
    while True:
        for i in range(n):
            level[i] = -1
        level[s] = 0
        qh = 0
        qt = 1
        queue[0] = s
        while qh < qt:
            v = queue[qh]
            qh += 1
            e = head[v]
            while e != -1:
                w = to[e]
                if cap[e] > eps and level[w] < 0:
                    level[w] = level[v] + 1
                    queue[qt] = w
                    qt += 1
                e = nxt[e]
        if level[t] < 0:
            break
        for i in range(n):
            it[i] = head[i]
        while True:
            depth = 0
            v = s
            while v != t:
                advanced = False
                while it[v] != -1:
                    e = it[v]
                    w = to[e]
                    if cap[e] > eps and level[w] == level[v] + 1:
                        path[depth] = e
                        depth += 1
                        v = w
                        advanced = True
                        break
                    it[v] = nxt[e]
                if not advanced:
                    if v == s:
                        break
                    level[v] = -1
                    depth -= 1
                    v = to[path[depth] ^ 1]
                    it[v] = nxt[it[v]]
            if v != t:
                break
            b = cap[path[0]]
            for d in range(1, depth):
                if cap[path[d]] < b:
                    b = cap[path[d]]
            for d in range(depth):
                e = path[d]
                cap[e] -= b
                cap[e ^ 1] += b
            flow += b
    # source side of a minimum cut: residual reachability from s
    side = np.zeros(n, np.bool_)
    side[s] = True
    qh = 0
    qt = 1
    queue[0] = s
    while qh < qt:
        v = queue[qh]
        qh += 1
        e = head[v]
        while e != -1:
            w = to[e]
            if cap[e] > eps and not side[w]:
                side[w] = True
                queue[qt] = w
                qt += 1
            e = nxt[e]
    return flow, side


@njit(cache=True)
def _gusfield(n, head, nxt, to, cap, eps):
    parent = np.zeros(n, np.int64)
    fl = np.zeros(n, np.float64)
    for s in range(1, n):
        t = parent[s]
        f, side = _dinic(n, head, nxt, to, cap, s, t, eps)
        fl[s] = f
        for i in range(n):
            if i != s and side[i] and parent[i] == t:
                parent[i] = s
        if side[parent[t]]:
            parent[s] = parent[t]
            parent[t] = s
            fl[s] = fl[t]
            fl[t] = f
    parent[0] = -1
    return parent, fl


def _eps(scale: float) -> float:
    return 1e-12 * max(scale, 1e-300)


def max_flow(g: CapGraph, s: int, t: int) -> tuple[float, set[int]]:
    """Exact s-t max-flow value and the source side of a minimum cut."""
    if s == t:
        raise ValueError("source and sink coincide")
    if not (0 <= s < g.n and 0 <= t < g.n):
        raise ValueError("terminal out of range")
    head, nxt, to, cap, scale = g.arrays()
    f, side = _dinic(g.n, head, nxt, to, cap, s, t, _eps(scale))
    return float(f), set(np.flatnonzero(side).tolist())


@dataclass
class GomoryHuTree:
    """Cut tree rooted at node 0: ``parent[0] == -1``.

    Removing the edge (v, parent[v]) splits the nodes into the subtree of v
    and the rest, which is a minimum cut of value ``flow[v]`` between v and
    ``parent[v]``.
    """

    parent: np.ndarray
    flow: np.ndarray

    @property
    def n(self) -> int:
        return len(self.parent)

    def edges(self) -> list[tuple[int, int, float]]:
        return [(v, int(self.parent[v]), float(self.flow[v])) for v in range(self.n) if self.parent[v] >= 0]

    def preorder(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(order, tin, tout): the subtree of v is order[tin[v]:tout[v]]."""
        n = self.n
        children: list[list[int]] = [[] for _ in range(n)]
        for v in range(n):
            p = self.parent[v]
            if p >= 0:
                children[p].append(v)
        order = np.empty(n, np.int64)
        tin = np.empty(n, np.int64)
        tout = np.empty(n, np.int64)
        pos = 0
        for root in range(n):
            if self.parent[root] >= 0:
                continue
            stack = [(root, False)]
            while stack:
                v, done = stack.pop()
                if done:
                    tout[v] = pos
                    continue
                tin[v] = pos
                order[pos] = v
                pos += 1
                stack.append((v, True))
                for c in reversed(children[v]):
                    stack.append((c, False))
        return order, tin, tout

    def subtree(self, v: int) -> set[int]:
        order, tin, tout = self.preorder()
        return set(order[tin[v]:tout[v]].tolist())

    def path_min(self, a: int, b: int) -> float:
        if a == b:
            return float("inf")
        depth = np.zeros(self.n, np.int64)
        for v in range(self.n):
            d, x = 0, v
            while self.parent[x] >= 0:
                x = self.parent[x]
                d += 1
            depth[v] = d
        best = float("inf")
        while a != b:
            if depth[a] < depth[b]:
                a, b = b, a
            best = min(best, float(self.flow[a]))
            a = int(self.parent[a])
        return best


def gomory_hu(g: CapGraph) -> GomoryHuTree:
    """Gusfield's algorithm: n-1 max-flow calls, no contraction."""
    if g.n < 1:
        raise ValueError("empty graph")
    if g.n == 1:
        return GomoryHuTree(np.array([-1], np.int64), np.zeros(1))
    head, nxt, to, cap, scale = g.arrays()
    parent, fl = _gusfield(g.n, head, nxt, to, cap, _eps(scale))
    return GomoryHuTree(parent, fl)


def odd_tree_edges(tree: GomoryHuTree, odd_mask: np.ndarray) -> list[tuple[float, int]]:
    """Tree edges (by child node) whose subtree meets the odd set oddly, as (flow, child)."""
    order, tin, tout = tree.preorder()
    prefix = np.concatenate([[0], np.cumsum(odd_mask[order].astype(np.int64))])
    out = []
    for v in range(tree.n):
        if tree.parent[v] < 0:
            continue
        if (prefix[tout[v]] - prefix[tin[v]]) % 2 == 1:
            out.append((float(tree.flow[v]), v))
    return out


def min_odd_cut(
    g: CapGraph,
    odd: Iterable[int],
    apex: int | None = None,
    tree: GomoryHuTree | None = None,
    skip: Iterable[frozenset[int]] = (),
) -> tuple[set[int], float]:
    """Minimum cut among those separating the designated set ``odd`` oddly.

    Inspects every Gomory-Hu tree edge whose side has odd intersection with
    ``odd``; ties go to the lowest child index.  With ``apex`` set, the
    returned side is the one that does not contain it.  Sides listed in
    ``skip`` are passed over.  The value is recomputed from the graph.
    """
    odd = set(odd)
    if len(odd) < 2 or len(odd) % 2:
        raise ValueError("the designated set must have even size >= 2")
    if tree is None:
        tree = gomory_hu(g)
    mask = np.zeros(g.n, bool)
    mask[list(odd)] = True
    cands = sorted(odd_tree_edges(tree, mask))
    if not cands:
        raise ValueError("no odd-separating tree edge (disconnected parity classes?)")
    skip = set(skip)
    order, tin, tout = tree.preorder()
    everything = set(range(g.n))
    for _, v in cands:
        side = set(order[tin[v]:tout[v]].tolist())
        if apex is not None and apex in side:
            side = everything - side
        if frozenset(side) in skip:
            continue
        return side, g.cut_value(side)
    raise ValueError("every odd-separating tree edge was skipped")
