"""Approximate maximum-weight matching via a perturbed odd-set packing LP.

For a guess alpha of the optimum, the packing problem asks for y in

    P = {y >= 0 : sum_j y_ij <= 1 for all i,  sum w_ij y_ij >= alpha}

minimizing lambda = max_U Y_U / b_U over odd sets 3 <= |U| <= 1/delta, where
Y_U is the mass of y inside U and b_U = (|U| - 1)/2 - delta^2 |U|^2 / 4.  The
perturbation makes the sets close to the maximum ratio laminar, so the dual
weights fit in O(n) space.  The maximum ratio and the near-maximal sets are
found with minimum odd cuts in an apex graph, one target size at a time.

If lambda <= 1 the point is feasible for the perturbed LP; scaling by
(1 - delta) then satisfies every odd-set constraint of the matching
polytope, large sets included.  A point in the matching polytope restricted
to its own support is a convex combination of matchings on that support, so
an exact maximum-weight matching on the support is at least as heavy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy import sparse
from scipy.optimize import linear_sum_assignment, linprog

from .flow import CapGraph, GomoryHuTree, gomory_hu, min_odd_cut, odd_tree_edges
from .frameworks import Evaluation, FrameworkInstance, IterationRecord, pack_solve
from .graph import EdgeStream, ResourceLedger


class LaminarityError(AssertionError):
    """Two near-maximal odd sets cross although lambda is above the floor."""


class OracleContractError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# fractional matchings


@dataclass
class FractionalMatching:
    """Sparse edge -> value map with keys (u, v), u < v."""

    n: int
    y: dict[tuple[int, int], float] = field(default_factory=dict)

    @classmethod
    def from_arrays(cls, n: int, us, vs, ys, tol: float = 0.0) -> "FractionalMatching":
        out = {}
        for a, b, v in zip(np.asarray(us).tolist(), np.asarray(vs).tolist(), np.asarray(ys).tolist()):
            if v > tol:
                k = (a, b) if a < b else (b, a)
                out[k] = out.get(k, 0.0) + float(v)
        return cls(n, out)

    def arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        m = len(self.y)
        us = np.fromiter((k[0] for k in self.y), np.int64, m)
        vs = np.fromiter((k[1] for k in self.y), np.int64, m)
        ys = np.fromiter(self.y.values(), float, m)
        return us, vs, ys

    def vertex_sums(self) -> np.ndarray:
        d = np.zeros(self.n)
        for (a, b), v in self.y.items():
            d[a] += v
            d[b] += v
        return d

    def value(self, w: Mapping[tuple[int, int], float]) -> float:
        return float(sum(v * w[k] for k, v in self.y.items()))

    def mass(self, U: Iterable[int]) -> float:
        s = set(U)
        return float(sum(v for (a, b), v in self.y.items() if a in s and b in s))

    def scaled(self, c: float) -> "FractionalMatching":
        return FractionalMatching(self.n, {k: c * v for k, v in self.y.items()})

    def vertex_feasible(self, tol: float = 1e-9) -> bool:
        return bool(np.all(self.vertex_sums() <= 1 + tol))

    def support(self, tol: float = 1e-12) -> list[tuple[int, int]]:
        return sorted(k for k, v in self.y.items() if v > tol)

    def to_text(self) -> str:
        return "".join(f"{a} {b} {v:.17g}\n" for (a, b), v in sorted(self.y.items()))


# ---------------------------------------------------------------------------
# one-pass constant approximation


def greedy_constant_approx(stream: EdgeStream, ledger: ResourceLedger | None = None):
    """One pass; an edge replaces its conflicts when it weighs more than twice them.

    Returns (sorted edge list, value).  The kept matching is within a factor
    six of the optimum.
    """
    mate: dict[int, tuple[int, int, float]] = {}
    for e in stream.next_pass():
        u, v, w = int(e.u), int(e.v), float(e.w)
        conflicts = {mate[x] for x in (u, v) if x in mate}
        if w > 2 * sum(c[2] for c in conflicts):
            for a, b, _ in conflicts:
                mate.pop(a, None)
                mate.pop(b, None)
            mate[u] = mate[v] = (u, v, w)
    edges = sorted({(min(a, b), max(a, b), w) for a, b, w in mate.values()})
    if ledger is not None:
        ledger.passes += 1
        ledger.charge(3 * len(edges))
        ledger.release_all()
    return [(a, b) for a, b, _ in edges], float(sum(w for _, _, w in edges))


# ---------------------------------------------------------------------------
# perturbations and the apex-graph reduction


def _check_size(ell: int, delta: float) -> None:
    if ell % 2 == 0 or ell < 3 or ell > math.floor(1 / delta + 1e-9):
        raise ValueError(f"set size {ell} must be odd and within [3, 1/delta]")


def f_perturb(ell: int, delta: float) -> float:
    return -delta * delta * ell * ell / 4


def g_perturb(ell: int, delta: float) -> float:
    return -delta * delta * ell * ell / 2


def h_perturb(ell: int, delta: float) -> float:
    return delta * delta * ell * ell / 4


def perturbed_bound(ell: int, delta: float) -> float:
    """b = (ell - 1)/2 - delta^2 ell^2 / 4 for an odd set of size ell."""
    _check_size(ell, delta)
    return (ell - 1) / 2 + f_perturb(ell, delta)


def _bound(size: int, delta: float) -> float:
    return (size - 1) / 2 + f_perturb(size, delta)


FORMS = ("balanced", "flipped")


def node_coefficient(ell: int, delta: float, form: str = "balanced") -> float:
    """Per-node multiplier of lambda* in F.

    "balanced" uses 1 + 2g/ell = 1 - delta^2 ell, for which
    F - lambda*(1 - 2h) = 2 b_U (lambda* - lambda_U) when |U| = ell, so the
    threshold test is exactly "lambda_U > lambda*".  "flipped" uses
    1 - 2g/ell = 1 + delta^2 ell; it is kept for comparison only and does
    not make the threshold test sound.
    """
    if form == "balanced":
        return 1 + 2 * g_perturb(ell, delta) / ell
    if form == "flipped":
        return 1 - 2 * g_perturb(ell, delta) / ell
    raise ValueError(f"unknown form {form!r}")


def threshold(lam_star: float, ell: int, delta: float) -> float:
    return lam_star * (1 - 2 * h_perturb(ell, delta))


def F_value(y: FractionalMatching, lam_star: float, ell: int, U: Iterable[int], delta: float, form: str = "balanced") -> float:
    """F(lambda*, ell, U) evaluated directly from its sum form."""
    U = set(U)
    c = node_coefficient(ell, delta, form)
    d = y.vertex_sums()
    inner = sum(lam_star * c - d[i] for i in U)
    out = sum(v for (a, b), v in y.y.items() if (a in U) != (b in U))
    return float(inner + out)


@dataclass
class ApexGraph:
    """Remaining nodes relabelled 0..r-1, then an optional padding node, then the apex."""

    graph: CapGraph
    nodes: list[int]  # local id -> original id, real nodes only
    pad: int | None
    apex: int

    def to_original(self, side: Iterable[int]) -> tuple[frozenset[int], bool]:
        side = set(side)
        has_pad = self.pad is not None and self.pad in side
        real = frozenset(self.nodes[i] for i in side if i < len(self.nodes))
        return real, has_pad


def apex_graph(
    y: FractionalMatching,
    lam_star: float,
    ell: int,
    delta: float,
    excluded: Iterable[int] = (),
    form: str = "balanced",
) -> ApexGraph:
    excluded = set(excluded)
    nodes = [i for i in range(y.n) if i not in excluded]
    if not nodes:
        raise ValueError("every node is excluded; the graph is empty")
    loc = {v: k for k, v in enumerate(nodes)}
    r = len(nodes)
    pad = r if r % 2 == 0 else None
    apex = r + (pad is not None)
    deg = np.zeros(r)
    edges: dict[tuple[int, int], float] = {}
    for (a, b), v in y.y.items():
        if a in loc and b in loc and v > 0:
            deg[loc[a]] += v
            deg[loc[b]] += v
            edges[(loc[a], loc[b])] = v
    c = lam_star * node_coefficient(ell, delta, form)
    slack = c - deg
    if slack.min() < -1e-9:
        raise ValueError(
            f"negative apex capacity {slack.min():.3g}: lambda* = {lam_star} is too small for this form"
        )
    for k in range(r):
        edges[(k, apex)] = max(float(slack[k]), 0.0)
    if pad is not None:
        edges[(pad, apex)] = c
    return ApexGraph(CapGraph(apex + 1, edges), nodes, pad, apex)


def _min_F(
    y: FractionalMatching, lam_star: float, ell: int, delta: float, excluded=(), form="balanced"
) -> tuple[frozenset[int], float, bool]:
    ag = apex_graph(y, lam_star, ell, delta, excluded, form)
    side, val = min_odd_cut(ag.graph, range(ag.graph.n), apex=ag.apex)
    U, has_pad = ag.to_original(side)
    return U, val, has_pad


def min_F_odd_set(
    y: FractionalMatching,
    lam_star: float,
    ell: int,
    delta: float,
    excluded: Iterable[int] = (),
    form: str = "balanced",
) -> tuple[frozenset[int], float]:
    """argmin_U F(lambda*, ell, U) over odd sets of the remaining graph, with the value.

    The set may contain the padding node, in which case only its real nodes
    are returned; callers that care use ``min_F_odd_set_padded``.
    """
    U, val, _ = _min_F(y, lam_star, ell, delta, excluded, form)
    return U, val


def min_F_odd_set_padded(y, lam_star, ell, delta, excluded=(), form="balanced"):
    return _min_F(y, lam_star, ell, delta, excluded, form)


# ---------------------------------------------------------------------------
# lambda and the near-maximal family


def _sizes(n_real: int, delta: float) -> list[int]:
    top = min(int(math.floor(1 / delta + 1e-9)), n_real)
    return list(range(3, top + 1, 2))


def _valid(U: frozenset[int], has_pad: bool, delta: float) -> bool:
    return (not has_pad) and len(U) % 2 == 1 and 3 <= len(U) <= math.floor(1 / delta + 1e-9)


def lambda_search(y: FractionalMatching, delta: float, form: str = "balanced") -> tuple[float, list[frozenset[int]]]:
    """compute_lambda plus every set that raised lambda* along the way."""
    lam = 1 + 2 * delta
    seen: list[frozenset[int]] = []
    for ell in _sizes(y.n, delta):
        while True:
            U, _, has_pad = _min_F(y, lam, ell, delta, (), form)
            if not _valid(U, has_pad, delta):
                break
            lam_U = y.mass(U) / _bound(len(U), delta)
            if lam_U <= lam * (1 + 1e-12):
                break
            lam = lam_U
            seen.append(U)
    return lam, seen


def compute_lambda(y: FractionalMatching, delta: float, form: str = "balanced") -> float:
    """max(1 + 2 delta, max_U Y_U / b_U) over odd sets 3 <= |U| <= 1/delta."""
    return lambda_search(y, delta, form)[0]


@dataclass(frozen=True)
class OddSetRecord:
    U: frozenset[int]
    Y: float
    b: float
    lam: float
    z: float = 0.0


def laminar(A: frozenset, B: frozenset) -> bool:
    return not (A & B) or A <= B or B <= A


class LaminarFamily:
    """Odd sets stored as a forest under inclusion.

    ``q(i, j)`` sums z over the sets containing both endpoints by starting at
    the smallest set containing i and walking up; the chain has at most
    1/delta links because sizes grow by at least two per level.
    """

    def __init__(self, n: int, records: Sequence[OddSetRecord] = (), lam: float = 0.0):
        self.n = n
        self.lam = lam
        self.records = sorted(records, key=lambda r: (len(r.U), sorted(r.U)))
        k = len(self.records)
        self.parent = [-1] * k
        self.deepest = [-1] * n
        for a in range(k):
            for b in range(a + 1, k):
                if self.records[a].U < self.records[b].U:
                    self.parent[a] = b
                    break
        for a in range(k - 1, -1, -1):
            for i in self.records[a].U:
                self.deepest[i] = a

    @property
    def sets(self) -> list[frozenset[int]]:
        return [r.U for r in self.records]

    def __len__(self) -> int:
        return len(self.records)

    def is_laminar(self) -> bool:
        return not self.crossing_pairs()

    def crossing_pairs(self) -> list[tuple[frozenset, frozenset]]:
        S = self.sets
        return [(S[a], S[b]) for a in range(len(S)) for b in range(a + 1, len(S)) if not laminar(S[a], S[b])]

    def with_z(self, z: Sequence[float]) -> "LaminarFamily":
        recs = [OddSetRecord(r.U, r.Y, r.b, r.lam, float(v)) for r, v in zip(self.records, z)]
        return LaminarFamily(self.n, recs, self.lam)

    def q(self, i: int, j: int) -> float:
        a = self.deepest[i]
        total = 0.0
        while a >= 0:
            if j in self.records[a].U:
                total += self.records[a].z
            a = self.parent[a]
        return total

    def q_edges(self, us: np.ndarray, vs: np.ndarray) -> np.ndarray:
        if not self.records:
            return np.zeros(len(us))
        return np.array([self.q(a, b) for a, b in zip(np.asarray(us).tolist(), np.asarray(vs).tolist())])

    def to_text(self) -> str:
        """Nested parenthesized node lists, each followed by its z value."""
        k = len(self.records)
        children: list[list[int]] = [[] for _ in range(k)]
        roots = []
        for a in range(k):
            (children[self.parent[a]] if self.parent[a] >= 0 else roots).append(a)

        def render(a: int) -> str:
            r = self.records[a]
            inner = set().union(*(self.records[c].U for c in children[a])) if children[a] else set()
            parts = [render(c) for c in children[a]] + [str(i) for i in sorted(r.U - inner)]
            return "(" + " ".join(parts) + f"):{r.z:.6g}"

        return "\n".join(render(a) for a in roots) + ("\n" if roots else "")


@dataclass
class FamilyReport:
    family: LaminarFamily
    rounds: dict[int, list[int]]  # size -> sets found per round (fast mode)


def _record(y: FractionalMatching, U: frozenset[int], delta: float) -> OddSetRecord:
    Y = y.mass(U)
    b = _bound(len(U), delta)
    return OddSetRecord(U, Y, b, Y / b)


def compute_L_report(
    y: FractionalMatching, lam: float, delta: float, fast: bool = True, form: str = "balanced", check: bool = True
) -> FamilyReport:
    lam_star = lam - delta**3
    found: list[OddSetRecord] = []
    rounds: dict[int, list[int]] = {}
    for ell in _sizes(y.n, delta):
        excluded: set[int] = set()
        rounds[ell] = []
        while y.n - len(excluded) >= ell:
            if not fast:
                U, _, has_pad = _min_F(y, lam_star, ell, delta, excluded, form)
                if has_pad or len(U) != ell:
                    break
                rec = _record(y, U, delta)
                if rec.lam < lam_star * (1 - 1e-12):
                    break
                found.append(rec)
                excluded |= U
                rounds[ell].append(1)
                continue
            ag = apex_graph(y, lam_star, ell, delta, excluded, form)
            tree = gomory_hu(ag.graph)
            order, tin, tout = tree.preorder()
            thr = threshold(lam_star, ell, delta)
            everything = set(range(ag.graph.n))
            taken: set[int] = set()
            got = 0
            for v in range(ag.graph.n):
                if tree.parent[v] < 0 or tree.flow[v] > thr + 1e-9 * max(1.0, abs(thr)):
                    continue
                side = set(order[tin[v]:tout[v]].tolist())
                if ag.apex in side:
                    side = everything - side
                U, has_pad = ag.to_original(side)
                if has_pad or len(U) != ell or (U & taken):
                    continue
                rec = _record(y, U, delta)
                if rec.lam < lam_star * (1 - 1e-12):
                    continue
                found.append(rec)
                taken |= U
                got += 1
            rounds[ell].append(got)
            if not got:
                break
            excluded |= taken
    fam = LaminarFamily(y.n, found, lam)
    if check and lam > 1 + 2 * delta and not fam.is_laminar():
        raise LaminarityError(f"crossing sets above the floor: {fam.crossing_pairs()[:3]}")
    return FamilyReport(fam, rounds)


def compute_L(y: FractionalMatching, lam: float, delta: float, fast: bool = True, form: str = "balanced") -> LaminarFamily:
    """Every odd set with Y_U / b_U >= lam - delta^3 and 3 <= |U| <= 1/delta."""
    return compute_L_report(y, lam, delta, fast, form).family


def effective_weight(e: tuple[int, int, float], gamma: float, L: LaminarFamily) -> float:
    a, b, w = e
    return float(w - gamma * L.q(a, b))


# ---------------------------------------------------------------------------
# the degree-constrained inner problem and the Lagrangian oracle


def inner_degree_lp(n: int, us, vs, ws) -> tuple[np.ndarray, float]:
    """max sum w y subject to sum_j y_ij <= 1, y >= 0; negative weights are dropped.

    Solved exactly as an assignment problem on the bipartite double cover:
    half the integral optimum there is an optimal half-integral solution.
    Returns (y aligned with the input edges, objective).
    """
    us = np.asarray(us, np.int64)
    vs = np.asarray(vs, np.int64)
    ws = np.asarray(ws, float)
    y = np.zeros(len(us))
    pos = ws > 0
    if n == 0 or not pos.any():
        return y, 0.0
    W = np.zeros((n, n))
    W[us[pos], vs[pos]] = ws[pos]
    W[vs[pos], us[pos]] = ws[pos]
    rows, cols = linear_sum_assignment(W, maximize=True)
    X = np.zeros((n, n))
    X[rows, cols] = (W[rows, cols] > 0).astype(float)
    y[pos] = 0.5 * (X[us[pos], vs[pos]] + X[vs[pos], us[pos]])
    return y, float(ws[pos] @ y[pos])


@dataclass
class OracleAnswer:
    y: np.ndarray
    ok: bool
    objective: float
    load: float  # sum y q
    gamma: tuple[float, float] | None
    solves: int


def lagrangian_oracle(
    n: int,
    us,
    vs,
    ws,
    L: LaminarFamily,
    alpha: float,
    beta: float,
    delta: float,
    search: str = "binary",
    slack: float = 7.0,
    q: np.ndarray | None = None,
) -> OracleAnswer:
    """max sum w y subject to degrees <= 1 and sum y q <= beta, by a gamma grid.

    For gamma = delta*alpha*k/beta the penalized problem has weights
    w - gamma q.  The load sum y^gamma q is nonincreasing in gamma (swap the
    two optimality inequalities), so the straddling pair can be found by
    bisection; ``search="exhaustive"`` scans the whole grid instead.  ``ok``
    is False when the objective falls below (1 - slack*delta) alpha or beta
    is not positive.
    """
    us = np.asarray(us, np.int64)
    vs = np.asarray(vs, np.int64)
    ws = np.asarray(ws, float)
    if q is None:
        q = L.q_edges(us, vs)
    solves = 0
    cache: dict[int, tuple[np.ndarray, float]] = {}
    beta_eff = beta if beta > 0 else 1e-12

    def solve(k: int) -> tuple[np.ndarray, float]:
        nonlocal solves
        if k not in cache:
            gamma = delta * alpha * k / beta_eff
            y, _ = inner_degree_lp(n, us, vs, ws - gamma * q)
            solves += 1
            cache[k] = (y, float(y @ q))
        return cache[k]

    def finish(y, gam):
        obj = float(ws @ y)
        load = float(y @ q)
        ok = beta > 0 and obj >= (1 - slack * delta) * alpha
        return OracleAnswer(y, ok, obj, load, gam, solves)

    y0, load0 = solve(0)
    if load0 <= beta_eff:
        return finish(y0, (0.0, 0.0))
    K = int(math.ceil(9 / delta)) + 18
    if search == "exhaustive":
        loads = [solve(k)[1] for k in range(K + 1)]
        pair = next((k for k in range(K) if loads[k] > beta_eff and loads[k + 1] <= beta_eff), None)
    else:
        if solve(K)[1] > beta_eff:
            pair = None
        else:
            lo, hi = 0, K  # load(lo) > beta, load(hi) <= beta
            while hi - lo > 1:
                mid = (lo + hi) // 2
                if solve(mid)[1] > beta_eff:
                    lo = mid
                else:
                    hi = mid
            pair = lo
    if pair is None:
        raise OracleContractError("no straddling gamma pair although the grid reaches the safe end")
    (ya, la), (yb, lb) = solve(pair), solve(pair + 1)
    a = (beta_eff - lb) / (la - lb)
    y = a * ya + (1 - a) * yb
    g = delta * alpha / beta_eff
    return finish(y, (pair * g, (pair + 1) * g))


# ---------------------------------------------------------------------------
# exact rounding on a small support


def max_weight_matching(n: int, us, vs, ws, max_rounds: int = 200) -> tuple[list[tuple[int, int]], float]:
    """Exact maximum-weight matching by cutting planes over the matching polytope.

    The LP starts with degree constraints; violated odd-set constraints are
    separated with a Gomory-Hu tree of the support plus a slack node (the
    Padberg-Rao reduction).  A simplex vertex of a relaxation that lies in
    the matching polytope is a vertex of it, hence integral.
    """
    us = np.asarray(us, np.int64)
    vs = np.asarray(vs, np.int64)
    ws = np.asarray(ws, float)
    keep = ws > 0
    us, vs, ws = us[keep], vs[keep], ws[keep]
    m = len(us)
    if m == 0:
        return [], 0.0
    rows, cols = [], []
    for e in range(m):
        rows += [us[e], vs[e]]
        cols += [e, e]
    A_deg = sparse.csr_matrix((np.ones(2 * m), (rows, cols)), shape=(n, m))
    cuts: list[frozenset[int]] = []
    x = None
    for _ in range(max_rounds):
        A = A_deg
        b = np.ones(n)
        if cuts:
            cr, cc = [], []
            for k, U in enumerate(cuts):
                inside = np.flatnonzero(np.isin(us, list(U)) & np.isin(vs, list(U)))
                cr += [k] * len(inside)
                cc += inside.tolist()
            A = sparse.vstack([A_deg, sparse.csr_matrix((np.ones(len(cr)), (cr, cc)), shape=(len(cuts), m))])
            b = np.concatenate([b, [(len(U) - 1) / 2 for U in cuts]])
        res = linprog(-ws, A_ub=A, b_ub=b, bounds=(0, 1), method="highs-ds")
        if res.status != 0:  # pragma: no cover - the LP is always feasible and bounded
            raise RuntimeError(res.message)
        x = res.x
        new = _violated_odd_sets(n, us, vs, x)
        new = [U for U in new if U not in cuts]
        if not new:
            break
        cuts.extend(new)
    frac = np.abs(x - np.round(x))
    if frac.max() > 1e-6:  # pragma: no cover - guarded by the vertex argument
        raise RuntimeError("cutting-plane optimum is not integral")
    sel = np.flatnonzero(np.round(x) > 0.5)
    M = sorted((int(min(us[e], vs[e])), int(max(us[e], vs[e]))) for e in sel)
    return M, float(ws[sel].sum())


def _violated_odd_sets(n, us, vs, x, tol=1e-9, cut_tol=1e-7) -> list[frozenset[int]]:
    slack_node = n
    deg = np.zeros(n)
    np.add.at(deg, us, x)
    np.add.at(deg, vs, x)
    edges: dict[tuple[int, int], float] = {}
    for a, b, v in zip(us.tolist(), vs.tolist(), x.tolist()):
        if v > tol:
            k = (a, b) if a < b else (b, a)
            edges[k] = edges.get(k, 0.0) + v
    for i in range(n):
        s = 1 - deg[i]
        if s > tol:
            edges[(i, slack_node)] = s
    g = CapGraph(n + 1, edges)
    tree = gomory_hu(g)
    odd = np.ones(n + 1, bool)
    if n % 2 == 0:
        odd[slack_node] = False
    order, tin, tout = tree.preorder()
    out = []
    everything = set(range(n + 1))
    for val, v in odd_tree_edges(tree, odd):
        if val >= 1 - cut_tol:
            continue
        side = set(order[tin[v]:tout[v]].tolist())
        if slack_node in side:
            side = everything - side
        if len(side) >= 3:
            out.append(frozenset(side))
    return list(dict.fromkeys(out))


# ---------------------------------------------------------------------------
# the streaming pipeline


@dataclass
class ConstructConfig:
    delta: float | None = None  # defaults to eps / 20
    form: str = "balanced"
    fast_L: bool = True
    step: str = "line_search"
    phase_iterations: int = 200
    max_phases: int = 200
    rung_search: str = "binary"  # or "all"
    oracle_search: str = "binary"
    oracle_slack: float = 2.0
    budget_steps: int = 12
    cache_size: int = 64
    check_laminar: bool = True


@dataclass
class RungReport:
    alpha: float
    lam: float
    value: float  # weight of the iterate
    certified: float  # (1 - delta) * value / lam
    status: str
    iterations: int
    phases: int
    laminar_checks: int
    potential_violations: int
    p1_violations: int
    transcript: list[IterationRecord] = field(default_factory=list)


@dataclass
class MatchResult:
    y: FractionalMatching
    matching: list[tuple[int, int]]
    value: float
    fractional_value: float
    alpha: float | None
    lam: float | None
    ledger: ResourceLedger
    rungs: list[RungReport]
    delta: float
    diagnostic: str = ""


def default_delta(eps: float) -> float:
    return eps / 20


def count_odd_sets(n: int, delta: float) -> float:
    """ln of the number of odd sets with 3 <= |U| <= min(n, 1/delta)."""
    terms = [math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1) for k in _sizes(n, delta)]
    if not terms:
        return 0.0
    top = max(terms)
    return top + math.log(sum(math.exp(t - top) for t in terms))


def guess_ladder(A: float, delta: float, upper: float | None = None) -> list[float]:
    """alpha = 6A (1 - delta)^k down to A, dropping rungs above ``upper``."""
    if A <= 0:
        return []
    k_max = int(math.ceil(math.log(6) / -math.log(1 - delta)))
    rungs = [6 * A * (1 - delta) ** k for k in range(k_max + 1)]
    rungs = [a for a in rungs if a > A * (1 + 1e-12)] + [A]
    if upper is not None:
        rungs = [a for a in rungs if a <= upper * (1 + 1e-12)]
    return sorted(rungs)


class _Rung:
    """One packing run for a fixed alpha."""

    def __init__(self, stream: EdgeStream, alpha: float, delta: float, cfg: ConstructConfig, ledger: ResourceLedger, ybip: np.ndarray, B: float):
        self.stream = stream
        self.n = stream.n
        self.us, self.vs, self.ws = stream.peek_arrays()
        self.alpha = alpha
        self.delta = delta
        self.cfg = cfg
        self.ledger = ledger
        self.floor = 1 + 2 * delta
        self.y0 = ybip * (alpha / B)
        self.index = {(min(a, b), max(a, b)): e for e, (a, b) in enumerate(zip(self.us.tolist(), self.vs.tolist()))}
        self.cache: dict[frozenset[int], None] = {}
        self.laminar_checks = 0
        self.oracle_calls = 0
        self.last_lam = None

    def fm(self, yv: np.ndarray) -> FractionalMatching:
        return FractionalMatching.from_arrays(self.n, self.us, self.vs, yv, tol=1e-15)

    def matrix(self, sets: list[frozenset[int]]):
        rows, cols = [], []
        for k, U in enumerate(sets):
            inside = np.flatnonzero(np.isin(self.us, list(U)) & np.isin(self.vs, list(U)))
            rows += [k] * len(inside)
            cols += inside.tolist()
        return sparse.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(len(sets), len(self.us)))

    def evaluate(self, yv: np.ndarray) -> Evaluation:
        y = self.fm(yv)
        lam, seen = lambda_search(y, self.delta, self.cfg.form)
        self.last_lam = lam
        live: list[frozenset[int]] = []
        if lam > self.floor:
            rep = compute_L_report(y, lam, self.delta, self.cfg.fast_L, self.cfg.form, self.cfg.check_laminar)
            self.laminar_checks += 1
            live = rep.family.sets
        for U in list(seen) + live:
            self.cache.pop(U, None)
            self.cache[U] = None
        while len(self.cache) > self.cfg.cache_size:
            self.cache.pop(next(iter(self.cache)))
        fam = list(dict.fromkeys(live + list(self.cache)))
        b = np.array([_bound(len(U), self.delta) for U in fam])
        A = self.matrix(fam)
        family = (fam, A, b, set(live))
        return Evaluation(family, (A @ yv) / b if fam else np.zeros(0), b)

    def ratios_on(self, family, yv):
        fam, A, b, _ = family
        return (A @ yv) / b if fam else np.zeros(0)

    def oracle(self, family, z, yv):
        fam, A, b, live = family
        zl = np.where([U in live for U in fam], z, 0.0) if fam else np.zeros(0)
        recs = [OddSetRecord(U, 0.0, bb, 0.0, float(v)) for U, bb, v in zip(fam, b, zl) if v > 0]
        L = LaminarFamily(self.n, recs, self.last_lam)
        q = np.asarray(A.T @ zl).ravel() if fam else np.zeros(len(self.us))
        lam = float(self.last_lam)
        yAx = float(zl @ (A @ yv)) if fam else 0.0
        beta = (1 - self.delta) * yAx - self.delta * lam * float(zl @ b)
        us, vs, ws = self.stream.read_pass()

        def call(budget: float) -> OracleAnswer:
            return lagrangian_oracle(
                self.n, us, vs, ws, L, self.alpha, budget, self.delta, self.cfg.oracle_search, self.cfg.oracle_slack, q=q
            )

        ans = call(beta)
        if not ans.ok:
            return None
        # An answer that only meets beta leaves the second stopping condition
        # tight; shrink the budget so the answer approximately minimizes load.
        lo, hi = 0.0, beta
        for _ in range(self.cfg.budget_steps):
            mid = 0.5 * (lo + hi)
            trial = call(mid)
            if trial.ok:
                hi, ans = mid, trial
            else:
                lo = mid
        support = int((ans.y > 0).sum())
        self.ledger.charge(3 * support + 2 * self.n)
        self.ledger.charge(-(3 * support + 2 * self.n))
        if ans.objective > 9 * self.alpha * (1 + 1e-9):
            raise OracleContractError("inner objective exceeds 9 alpha")
        self.oracle_calls += 1
        return ans.y

    def run(self) -> tuple[np.ndarray, RungReport]:
        cfg = self.cfg
        y = self.y0
        transcript: list[IterationRecord] = []
        iters = phases = 0
        status = "floor"
        pot_viol = p1_viol = 0
        lam = None
        m_log = count_odd_sets(self.n, self.delta)
        width = 1.5 / _bound(3, self.delta)
        while phases < cfg.max_phases:
            ev = self.evaluate(y)
            lam = self.last_lam
            if lam <= self.floor:
                status = "floor"
                break
            lam0 = lam
            kappa = 4 / (lam0 * self.delta**3) * (m_log + math.log(2 / self.delta))
            inst = FrameworkInstance(
                evaluate=self.evaluate,
                ratios_on=self.ratios_on,
                oracle=self.oracle,
                width=width,
                delta=self.delta,
                m=max(len(ev.ratios), 1),
                kappa=kappa,
                step=cfg.step,
                lambda_floor=self.floor,
                window=self.delta**3,
                max_iter=cfg.phase_iterations,
            )
            res = pack_solve(inst, y)
            phases += 1
            iters += res.iterations
            transcript.extend(res.transcript)
            pot_viol += len(res.potential_violations())
            p1_viol += sum(1 for r in res.transcript if not r.p1)
            y = res.x
            status = res.status
            if res.status != "improved":
                break
        self.evaluate(y)
        lam = self.last_lam
        value = float(self.ws @ y)
        certified = (1 - self.delta) * value / max(1.0, lam)
        rep = RungReport(self.alpha, lam, value, certified, status, iters, phases, self.laminar_checks, pot_viol, p1_viol, transcript)
        return y, rep


def bipartite_bound(stream: EdgeStream, ledger: ResourceLedger) -> tuple[np.ndarray, float]:
    """Optimum of the degree-only relaxation: an upper bound on the matching weight."""
    us, vs, ws = stream.read_pass()
    ledger.charge(3 * len(us))
    y, val = inner_degree_lp(stream.n, us, vs, ws)
    ledger.charge(-3 * len(us))
    return y, val


def stream_match(stream: EdgeStream, eps: float, config: ConstructConfig | None = None) -> MatchResult:
    """(1 - eps)-approximate maximum-weight matching with pass and space accounting."""
    cfg = config or ConstructConfig()
    if not (0 < eps < 1):
        raise ValueError("eps must lie in (0, 1)")
    delta = cfg.delta if cfg.delta is not None else default_delta(eps)
    ledger = ResourceLedger()
    start = stream.pass_count
    n = stream.n
    greedy, A = greedy_constant_approx(stream, ledger)
    empty = FractionalMatching(n)
    if A <= 0:
        return MatchResult(empty, [], 0.0, 0.0, None, None, ledger, [], delta, "empty graph")
    ybip, B = bipartite_bound(stream, ledger)
    ladder = guess_ladder(A, delta, upper=B)
    reports: list[RungReport] = []
    points: dict[float, np.ndarray] = {}

    def run(alpha: float) -> RungReport:
        y, rep = _Rung(stream, alpha, delta, cfg, ledger, ybip, B).run()
        points[alpha] = y
        reports.append(rep)
        return rep

    def passed(rep: RungReport) -> bool:
        return rep.lam <= 1 + 6 * delta

    if cfg.rung_search == "all":
        for a in ladder:
            run(a)
    elif ladder:
        lo, hi = -1, len(ladder)  # ladder[lo] passed, ladder[hi] failed
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if passed(run(ladder[mid])):
                lo = mid
            else:
                hi = mid
    us, vs, ws = stream.peek_arrays()
    best = max(reports, key=lambda r: r.certified, default=None)
    diagnostic = ""
    if best is None or not any(passed(r) for r in reports):
        diagnostic = "no rung reached lambda <= 1 + 6 delta; using the best certified point"
    if best is None:
        y = empty
        frac = 0.0
    else:
        yv = points[best.alpha] * (1 - delta) / max(1.0, best.lam)
        y = FractionalMatching.from_arrays(n, us, vs, yv, tol=1e-12)
        frac = float(ws @ yv)
    ledger.charge(3 * len(y.y))
    wmap = {(min(a, b), max(a, b)): w for a, b, w in zip(us.tolist(), vs.tolist(), ws.tolist())}
    sup = y.support()
    M, val = max_weight_matching(n, [a for a, _ in sup], [b for _, b in sup], [wmap[k] for k in sup])
    if val < A:
        M, val = greedy, A
    ledger.passes = stream.pass_count - start
    return MatchResult(y, M, val, frac, best.alpha if best else None, best.lam if best else None, ledger, reports, delta, diagnostic)


def audit(y: FractionalMatching, tol: float = 1e-7) -> list[frozenset[int]]:
    """Constraints of the matching polytope that y violates by more than tol.

    Vertex violations are reported as singletons; odd sets of every size are
    separated exactly with a Gomory-Hu tree.
    """
    d = y.vertex_sums()
    bad = [frozenset({i}) for i in np.flatnonzero(d > 1 + tol).tolist()]
    if bad or not y.y:
        return bad
    us, vs, ys = y.arrays()
    return [U for U in _violated_odd_sets(y.n, us, vs, ys, cut_tol=tol) if y.mass(U) > (len(U) - 1) / 2 + tol]
