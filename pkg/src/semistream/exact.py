"""Exhaustive reference oracles for small instances.

Nothing here is used by the streaming pipelines; these exist so tests can
compare the fast code against answers computed by plain enumeration.  Every
function refuses instances above its size guard instead of silently
running for hours.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Any, Callable, Iterable, Mapping, Sequence

import numpy as np

from .flow import CapGraph


class SizeGuardError(ValueError):
    pass


@dataclass
class ExactResult:
    value: float
    witness: Any
    feasible: bool = True


def _weights(g: CapGraph | Mapping) -> tuple[int, dict[tuple[int, int], float]]:
    if isinstance(g, CapGraph):
        return g.n, dict(g.edges)
    edges = {(min(a, b), max(a, b)): float(w) for (a, b), w in g.items()}
    n = 1 + max((max(k) for k in edges), default=-1)
    return n, edges


def exact_mwm(g: CapGraph, max_n: int = 16) -> ExactResult:
    """Maximum-weight matching by dynamic programming over vertex subsets.

    The state is the set of still-available vertices; the lowest available
    vertex is either left unmatched or matched to an available neighbour.
    """
    n, edges = _weights(g)
    if n > max_n:
        raise SizeGuardError(f"exact_mwm is limited to n <= {max_n}, got {n}")
    nbrs: list[list[tuple[int, float]]] = [[] for _ in range(n)]
    for (a, b), w in edges.items():
        if w > 0:
            nbrs[a].append((b, w))
            nbrs[b].append((a, w))

    @lru_cache(maxsize=None)
    def best(mask: int) -> float:
        if mask == 0:
            return 0.0
        v = (mask & -mask).bit_length() - 1
        rest = mask & ~(1 << v)
        val = best(rest)
        for u, w in nbrs[v]:
            if rest >> u & 1:
                val = max(val, w + best(rest & ~(1 << u)))
        return val

    full = (1 << n) - 1
    total = best(full)
    matching = []
    mask = full
    while mask:
        v = (mask & -mask).bit_length() - 1
        rest = mask & ~(1 << v)
        target = best(mask)
        if best(rest) == target:
            mask = rest
            continue
        for u, w in nbrs[v]:
            if rest >> u & 1 and w + best(rest & ~(1 << u)) == target:
                matching.append((min(u, v), max(u, v)))
                mask = rest & ~(1 << u)
                break
        else:  # pragma: no cover - DP consistency
            raise AssertionError("witness reconstruction failed")
    best.cache_clear()
    value = sum(edges[e] for e in matching)
    return ExactResult(value, sorted(matching))


def exact_min_odd_cut(g: CapGraph, odd: Iterable[int], max_n: int = 12) -> ExactResult:
    """Minimum cut over all U with |U ∩ odd| odd, by subset enumeration."""
    n = g.n
    if n > max_n:
        raise SizeGuardError(f"exact_min_odd_cut is limited to n <= {max_n}, got {n}")
    odd_mask = 0
    for i in odd:
        odd_mask |= 1 << i
    best_val, best_side = float("inf"), None
    items = list(g.edges.items())
    for mask in range(1, 1 << n):
        if bin(mask & odd_mask).count("1") % 2 == 0:
            continue
        val = 0.0
        for (a, b), c in items:
            if (mask >> a & 1) != (mask >> b & 1):
                val += c
        if val < best_val:
            best_val, best_side = val, {i for i in range(n) if mask >> i & 1}
    if best_side is None:
        raise ValueError("no subset has odd intersection with the designated set")
    return ExactResult(best_val, best_side)


def perturbed_bound_value(size: int, delta: float) -> float:
    return (size - 1) / 2 - delta * delta * size * size / 4


def odd_sets(n: int, max_size: int, nodes: Sequence[int] | None = None):
    nodes = list(range(n)) if nodes is None else list(nodes)
    for size in range(3, max_size + 1, 2):
        yield from itertools.combinations(nodes, size)


def set_mass(y: Mapping[tuple[int, int], float], U: Iterable[int]) -> float:
    s = set(U)
    return float(sum(v for (a, b), v in y.items() if a in s and b in s))


def exact_lambda_L(
    y: Mapping[tuple[int, int], float], n: int, delta: float, max_n: int = 12
) -> tuple[float, list[dict]]:
    """max over odd sets 3 <= |U| <= 1/delta of Y_U / b_U, plus the sets within delta^3.

    Returns (lambda_max, table) where the table lists the sets whose ratio is
    within delta^3 of the maximum; the 1+2delta floor is not applied here.
    """
    if n > max_n:
        raise SizeGuardError(f"exact_lambda_L is limited to n <= {max_n}, got {n}")
    top = int(np.floor(1 / delta + 1e-9))
    rows = []
    for U in odd_sets(n, top):
        Y = set_mass(y, U)
        b = perturbed_bound_value(len(U), delta)
        rows.append({"U": frozenset(U), "Y": Y, "b": b, "lam": Y / b})
    if not rows:
        return 0.0, []
    lam = max(r["lam"] for r in rows)
    table = [r for r in rows if r["lam"] >= lam - delta**3]
    return lam, table


def exact_lp_by_enumeration(
    A: np.ndarray,
    b: np.ndarray,
    c: np.ndarray,
    candidates: Iterable[Sequence[float]] | None = None,
    tol: float = 1e-9,
) -> ExactResult:
    """max c.x subject to A x <= b by enumerating basic solutions.

    With ``candidates`` the optimum is taken over that finite set instead.
    Nonnegativity has to be part of (A, b) if it is wanted.  Returns an
    infeasible result (``feasible=False``) when nothing qualifies.
    """
    A = np.atleast_2d(np.asarray(A, float))
    b = np.asarray(b, float)
    c = np.asarray(c, float)
    d = A.shape[1]
    if candidates is None:
        if d > 4:
            raise SizeGuardError("vertex enumeration is limited to 4 variables")
        pts = []
        for rows in itertools.combinations(range(A.shape[0]), d):
            M = A[list(rows)]
            if abs(np.linalg.det(M)) < 1e-12:
                continue
            pts.append(np.linalg.solve(M, b[list(rows)]))
    else:
        pts = [np.asarray(p, float) for p in candidates]
    best, arg = -np.inf, None
    for p in pts:
        if np.all(A @ p <= b + tol * (1 + np.abs(b))):
            val = float(c @ p)
            if val > best:
                best, arg = val, p
    if arg is None:
        return ExactResult(float("nan"), None, feasible=False)
    return ExactResult(best, arg)


def exact_strong_connectivity(g: CapGraph, max_n: int = 10) -> dict[tuple[int, int], float]:
    """Largest min cut of any induced subgraph containing each edge."""
    n = g.n
    if n > max_n:
        raise SizeGuardError(f"exact_strong_connectivity is limited to n <= {max_n}")
    best = {e: 0.0 for e in g.edges}
    for mask in range(1, 1 << n):
        nodes = [i for i in range(n) if mask >> i & 1]
        if len(nodes) < 2:
            continue
        inside = {e: c for e, c in g.edges.items() if mask >> e[0] & 1 and mask >> e[1] & 1}
        if not inside:
            continue
        # global min cut of the induced subgraph: fix nodes[0] on one side
        rest = nodes[1:]
        mc = float("inf")
        for sub in range(0, 1 << len(rest)):
            side = {nodes[0]} | {rest[k] for k in range(len(rest)) if sub >> k & 1}
            if len(side) == len(nodes):
                continue
            val = sum(c for (a, b), c in inside.items() if (a in side) != (b in side))
            mc = min(mc, val)
        for e in inside:
            best[e] = max(best[e], mc)
    return best


def all_cuts(n: int):
    """Every nontrivial cut of n nodes once, as a frozenset side containing node 0."""
    for mask in range(0, (1 << (n - 1)) - 1):
        yield frozenset({0} | {i + 1 for i in range(n - 1) if mask >> i & 1})


def cut_weight(edges: Mapping[tuple[int, int], float], side: frozenset[int]) -> float:
    return float(sum(w for (a, b), w in edges.items() if (a in side) != (b in side)))
