"""Matching-size estimation from a covering dual; no matching is built.

For a budget alpha the covering problem asks for node values x and odd-set
values z with sum x + sum floor(|U|/2) z <= alpha and per-node load
2 x_i + sum_{U ni i} z_U <= cap_i that maximize the smallest edge coverage
(x_i + x_j + sum_{U ni i,j} z_U) / w_ij.  Any such point scaled by its
coverage is a feasible dual of the matching LP, so

    budget / coverage >= maximum matching

for every point.  Each rung certifies this bound for its final point with
one exact pass, and the estimate is the smallest bound over rungs.

The default step is a restricted master: an LP over all node values and the
odd sets named so far, solved on the edges held in memory.  Its edge duals
price a sparsifier through the dual oracle, which either names a violated
node constraint or finds a violated odd-set constraint through a minimum
odd cut in an apex graph; new sets join the master.  In compressed mode the
held edges are a presampled bundle and the master is kept near the previous
point by a trust region, so one pass serves many iterations.

The older exponential-potential step (``step="line_search"``) is kept for
comparison; it can store odd-set mass in a random-projection sketch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .construct import greedy_constant_approx, guess_ladder
from .flow import CapGraph, min_odd_cut
from .frameworks import (
    Evaluation,
    Failure,
    FrameworkInstance,
    MwuInstance,
    MwuResult,
    Witness,
    cover_solve,
    default_kappa,
    mwu_solve,
)
from .graph import EdgeStream, ResourceLedger
from .sketch import NodeSketch
from .sparsify import C0, C_CUT, PresampleBundle, Sparsifier, presample, sparsify_stream


class DegenerateSetError(AssertionError):
    pass


class BudgetExhausted(RuntimeError):
    def __init__(self, message: str, partial: list):
        super().__init__(message)
        self.partial = partial


# ---------------------------------------------------------------------------
# dual points


def _membership(n: int, sets: list[frozenset[int]]) -> np.ndarray:
    M = np.zeros((n, len(sets)), bool)
    for t, U in enumerate(sets):
        M[list(U), t] = True
    return M


@dataclass
class DualCandidate:
    """A point (x, z) of the covering polytope.

    ``sets`` holds z explicitly (oracle answers); ``zsketch`` holds it
    implicitly (the running iterate).  ``budget`` and ``load`` are exact
    accumulators of sum x + sum floor(|U|/2) z and 2 x_i + sum_{U ni i} z_U.
    """

    x: np.ndarray
    zsketch: NodeSketch | None = None
    sets: dict[frozenset[int], float] = field(default_factory=dict)
    budget: float = 0.0
    load: np.ndarray | None = None
    lam: float = float("nan")

    @property
    def n(self) -> int:
        return len(self.x)

    @staticmethod
    def explicit(n: int, x: np.ndarray | None = None, sets: dict | None = None) -> "DualCandidate":
        x = np.zeros(n) if x is None else np.asarray(x, float).copy()
        sets = {} if sets is None else {frozenset(U): float(z) for U, z in sets.items() if z > 0}
        load = 2 * x.copy()
        budget = float(x.sum())
        for U, z in sets.items():
            load[list(U)] += z
            budget += (len(U) // 2) * z
        return DualCandidate(x, None, sets, budget, load)

    def pair_sums(self, us: np.ndarray, vs: np.ndarray) -> np.ndarray:
        out = np.zeros(len(us))
        if self.zsketch is not None:
            out += self.zsketch.pair_sums(us, vs)
        if self.sets:
            keys = list(self.sets)
            M = _membership(self.n, keys)
            z = np.fromiter((self.sets[U] for U in keys), float, len(keys))
            out += (M[us] & M[vs]).astype(float) @ z
        return out

    def coverage(self, us: np.ndarray, vs: np.ndarray) -> np.ndarray:
        return self.x[us] + self.x[vs] + self.pair_sums(us, vs)

    def scaled(self, c: float) -> "DualCandidate":
        """c times the point (explicit points only)."""
        if self.zsketch is not None:
            raise ValueError("only explicit points can be rescaled")
        return DualCandidate(self.x * c, None, {U: z * c for U, z in self.sets.items()}, self.budget * c, self.load * c)

    def combine(self, other: "DualCandidate", s: float) -> "DualCandidate":
        """(1 - s) self + s other, folding other's explicit sets into the sketch."""
        sk = None
        if self.zsketch is not None:
            sk = self.zsketch.copy().scale(1 - s)
            for U, z in other.sets.items():
                sk.add_set(U, s * z)
        sets = {} if sk is not None else {U: (1 - s) * z for U, z in self.sets.items()}
        if sk is None:
            for U, z in other.sets.items():
                sets[U] = sets.get(U, 0.0) + s * z
        return DualCandidate(
            (1 - s) * self.x + s * other.x,
            sk,
            sets,
            (1 - s) * self.budget + s * other.budget,
            (1 - s) * self.load + s * other.load,
        )


# ---------------------------------------------------------------------------
# the inner oracle


@dataclass
class OracleWeights:
    """Weights on the node constraints (zeta) and the budget constraint (zeta_alpha)."""

    zeta: np.ndarray
    zeta_alpha: float
    beta: float

    def normalized(self) -> "OracleWeights":
        """Scale so that sum 3 zeta_i + zeta_alpha = beta."""
        tot = 3 * float(self.zeta.sum()) + self.zeta_alpha
        if tot <= 0:
            return OracleWeights(np.zeros_like(self.zeta), self.beta, self.beta)
        c = self.beta / tot
        return OracleWeights(self.zeta * c, self.zeta_alpha * c, self.beta)

    def value(self) -> float:
        return 3 * float(self.zeta.sum()) + self.zeta_alpha


@dataclass
class DualWitness:
    kind: str  # "x" or "z"
    node: int | None
    U: frozenset[int] | None
    value: float
    weights: OracleWeights  # the normalized weights the answer was computed from
    cut: float | None = None


@dataclass
class DualFailure:
    primal: OracleWeights  # feasible for the dual of the oracle LP, value <= (1 + 5 delta) beta


def apex_weights(ow: OracleWeights, d: np.ndarray, alpha: float, caps: np.ndarray, sign: str = "+") -> np.ndarray:
    """Half of 2 zeta_i' +/- zeta_alpha / alpha - d_i, with zeta_i' = 3 zeta_i / cap_i."""
    zhat = 3 * ow.zeta / caps
    s = 1.0 if sign == "+" else -1.0
    return 0.5 * (2 * zhat + s * ow.zeta_alpha / alpha - d)


def dual_oracle(
    ow: OracleWeights,
    yhat: Sparsifier,
    alpha: float,
    delta: float,
    caps: np.ndarray | None = None,
    sign: Literal["+", "-"] = "+",
    cut_test: Literal["exact", "printed"] = "exact",
    pad: int | None = None,
    check_nodes: bool = True,
    inflate: bool = True,
) -> DualWitness | DualFailure:
    """One oracle step over the dual of the inner LP.

    Node constraint i (scaled to right-hand side 3) has weight zeta_i, the
    budget constraint zeta_alpha.  With ``cut_test="exact"`` the apex graph
    carries half edge weights, so that cut(U) - zeta_alpha / (2 alpha) is
    exactly the violation of odd set U's constraint; a set is returned only
    when it is violated by more than delta beta / alpha.  ``"printed"``
    keeps full edge weights and the threshold (zeta_alpha - delta beta) /
    alpha, for comparison.  ``check_nodes=False`` skips the node test, for
    callers whose weights already satisfy every node constraint.
    """
    n = yhat.n
    if n % 2 == 0:
        raise ValueError("the oracle needs an odd number of nodes; pad first")
    caps = np.full(n, 3.0) if caps is None else np.asarray(caps, float)
    ow = ow.normalized()
    beta = ow.beta
    d = yhat.degrees()
    zhat = 3 * ow.zeta / caps
    lhs = 2 * zhat + ow.zeta_alpha / alpha
    cand = (lhs < d - 1e-9 * max(float(d.max(initial=0.0)), 1e-300)) & (d > delta * beta / alpha)
    if check_nodes and cand.any():
        i = int(np.argmax(np.where(cand, d - lhs, -np.inf)))
        return DualWitness("x", i, None, beta / float(d[i]), ow)
    za = (ow.zeta_alpha + delta * beta) * (1 + 2 * delta) if inflate else ow.zeta_alpha
    mod = OracleWeights(ow.zeta, za, beta)
    if yhat.m:
        a = apex_weights(mod, d, alpha, caps, sign)
        if sign == "+":
            a = np.maximum(a, 0.0)  # nonnegative up to rounding once no node is violated
        elif (a < -1e-12 * max(1.0, beta)).any():
            a = np.maximum(a, 0.0)  # the other sign can go negative; clip and carry on
        half = 0.5 if cut_test == "exact" else 1.0
        s = n
        g = CapGraph.from_arrays(
            n + 1,
            np.concatenate([yhat.us, np.arange(n)]),
            np.concatenate([yhat.vs, np.full(n, s)]),
            np.concatenate([half * yhat.yhat, a]),
        )
        skip = [frozenset({pad})] if pad is not None else []
        side, cut = min_odd_cut(g, range(n + 1), apex=s, skip=skip)
        if cut_test == "exact":
            passes = cut - za / (2 * alpha) < -delta * beta / alpha
        else:
            passes = cut < (za - delta * beta) / alpha
        if not inflate and len(side) > 1 / delta:
            passes = False
        if passes and len(side) >= 3:
            U = frozenset(side)
            mask = np.zeros(n, bool)
            mask[list(U)] = True
            Delta = float(yhat.yhat[mask[yhat.us] & mask[yhat.vs]].sum())
            if Delta <= 0:
                raise DegenerateSetError(f"odd set {sorted(U)} carries no edge weight")
            return DualWitness("z", None, U, beta / Delta, ow, cut)
    return DualFailure(OracleWeights(ow.zeta, za + delta * beta, beta))


def inner_lp_violations(
    ow: OracleWeights, n: int, edges: dict[tuple[int, int], float], alpha: float, caps: np.ndarray | None = None, max_n: int = 9
) -> list:
    """Every constraint of the oracle's dual LP that ``ow`` violates, by enumeration."""
    from .exact import SizeGuardError, odd_sets

    if n > max_n:
        raise SizeGuardError(f"enumeration is limited to n <= {max_n}")
    caps = np.full(n, 3.0) if caps is None else np.asarray(caps, float)
    zhat = 3 * ow.zeta / caps
    d = np.zeros(n)
    for (a, b), w in edges.items():
        d[a] += w
        d[b] += w
    out = []
    tol = 1e-9 * max(1.0, ow.beta)
    for i in range(n):
        if 2 * zhat[i] + ow.zeta_alpha / alpha < d[i] - tol:
            out.append(frozenset({i}))
    for U in odd_sets(n, n):
        s = set(U)
        Y = sum(w for (a, b), w in edges.items() if a in s and b in s)
        if zhat[list(U)].sum() + (len(U) // 2) * ow.zeta_alpha / alpha < Y - tol:
            out.append(frozenset(U))
    return out


# ---------------------------------------------------------------------------
# the inner LP by multiplicative weights


@dataclass
class InnerAnswer:
    point: DualCandidate | None  # scaled into the polytope; None on failure
    objective: float
    mwu: MwuResult
    rho: float
    witnesses: list[DualWitness]
    failure: DualFailure | None
    reached: bool = False  # the loop stopped early with every violation <= 2 delta


def _witness_violation(w: DualWitness, n: int, alpha: float, caps: np.ndarray) -> np.ndarray:
    M = np.full(n + 1, -3.0)
    if w.kind == "x":
        M[w.node] = 3 * 2 * w.value / caps[w.node] - 3
        M[n] = w.value / alpha - 1
    else:
        idx = list(w.U)
        M[idx] = 3 * w.value / caps[idx] - 3
        M[n] = (len(w.U) // 2) * w.value / alpha - 1
    return M


def oracle_width(alpha: float, delta: float, caps: np.ndarray) -> float:
    """Upper end of the violation range of any oracle answer (values are at most alpha / delta)."""
    vmax = alpha / delta
    top = int(math.floor(1 / delta + 1e-9))
    return max(6 * vmax / float(caps.min()) - 3, (top // 2) * vmax / alpha - 1, 2 * alpha / delta)


def solve_inner(
    yhat: Sparsifier,
    alpha: float,
    beta: float,
    delta: float,
    caps: np.ndarray,
    sign: str = "+",
    cut_test: str = "exact",
    pad: int | None = None,
    eps_step: float | None = None,
    max_rounds: int | None = None,
) -> InnerAnswer:
    """Find a point of objective ~beta under yhat, or a certificate that none exists."""
    n = yhat.n
    rho = oracle_width(alpha, delta, caps)
    witnesses: list[DualWitness] = []
    fail: list[DualFailure] = []

    def oracle(p: np.ndarray):
        ow = OracleWeights(p[:n], float(p[n]), beta)
        ans = dual_oracle(ow, yhat, alpha, delta, caps, sign, cut_test, pad)
        if isinstance(ans, DualFailure):
            fail.append(ans)
            return Failure(ans)
        witnesses.append(ans)
        return Witness(ans, _witness_violation(ans, n, alpha, caps), ans.kind)

    inst = MwuInstance(n + 1, oracle, rho=rho, ell=3.0, delta=delta, eps_step=eps_step, early_stop=True, max_rounds=max_rounds)
    res = mwu_solve(inst)
    res.instance = inst
    if res.status != "solved" or not witnesses:
        return InnerAnswer(None, 0.0, res, rho, witnesses, fail[0] if fail else None)
    T = len(witnesses)
    x = np.zeros(n)
    sets: dict[frozenset[int], float] = {}
    for w in witnesses:
        if w.kind == "x":
            x[w.node] += w.value / T
        else:
            sets[w.U] = sets.get(w.U, 0.0) + w.value / T
    pt = DualCandidate.explicit(n, x, sets)
    scale = max(1.0, pt.budget / alpha, float((pt.load / caps).max()))
    pt = pt.scaled(1 / scale)
    obj = float(yhat.yhat @ pt.coverage(yhat.us, yhat.vs))
    reached = bool(res.avg_violation.max() <= 2 * delta + 1e-12)
    return InnerAnswer(pt, obj, res, rho, witnesses, None, reached)


def solve_inner_columns(
    yhat: Sparsifier,
    alpha: float,
    delta: float,
    caps: np.ndarray,
    pool: dict[frozenset[int], None] | None = None,
    sign: str = "+",
    cut_test: str = "exact",
    pad: int | None = None,
    max_columns: int = 200,
) -> tuple[InnerAnswer, list[DualWitness]]:
    """The inner LP by column generation, priced with ``dual_oracle``.

    The restricted LP over all node variables and the odd sets in ``pool``
    is solved exactly; its duals, whose value is the restricted optimum
    beta, are handed to the oracle.  A returned odd set joins the pool and
    the LP is solved again; the loop ends when the oracle names nothing new.
    """
    from scipy.optimize import linprog

    n = yhat.n
    pool = {} if pool is None else pool
    d = yhat.degrees()
    rounds: list[DualWitness] = []
    rho = oracle_width(alpha, delta, caps)
    last = None
    failure = None
    for _ in range(max_columns + 1):
        sets = list(pool)
        k = len(sets)
        mask = _membership(n, sets) if k else np.zeros((n, 0), bool)
        Y = np.array([float(yhat.yhat[mask[yhat.us, t] & mask[yhat.vs, t]].sum()) for t in range(k)])
        c = -np.concatenate([d, Y])
        A = np.zeros((n + 1, n + k))
        A[:n, :n] = 2 * np.eye(n)
        A[:n, n:] = mask
        A[n, :n] = 1.0
        A[n, n:] = [len(U) // 2 for U in sets]
        rhs = np.concatenate([caps, [alpha]])
        lp = linprog(c, A_ub=A, b_ub=rhs, bounds=(0, None), method="highs-ds")
        if lp.status != 0:  # pragma: no cover - the LP is bounded and feasible
            raise RuntimeError(f"inner LP failed: {lp.message}")
        beta = -float(lp.fun)
        mu = -lp.ineqlin.marginals
        last = (lp.x, sets, beta)
        if beta <= 0:
            break
        ow = OracleWeights(mu[:n] * caps / 3, alpha * float(mu[n]), beta)
        # every node variable is in the restricted LP, so only odd sets can price out
        ans = dual_oracle(ow, yhat, alpha, delta, caps, sign, cut_test, pad, check_nodes=False,
                          inflate=False)
        if isinstance(ans, DualFailure):
            failure = ans
            break
        rounds.append(ans)
        if ans.kind != "z" or ans.U in pool:
            break
        pool[ans.U] = None
    xv, sets, beta = last
    pt = DualCandidate.explicit(n, xv[:n], {U: float(z) for U, z in zip(sets, xv[n:]) if z > 1e-15})
    obj = float(yhat.yhat @ pt.coverage(yhat.us, yhat.vs))
    return InnerAnswer(pt, obj, None, rho, rounds, failure, True), rounds


# ---------------------------------------------------------------------------
# configuration and reports


@dataclass
class EstimateConfig:
    delta: float | None = None  # default eps / 4
    p: int = 0  # 0: a fresh sample every iteration; >= 1: presampled bundles
    seed: int = 0
    sign: str = "+"
    cut_test: str = "exact"
    sketch_eps: float | None = None  # default delta
    c_jl: float = 8.0
    C: float = C_CUT
    c0: float = C0
    inner: str = "columns"  # or "mwu"
    zstore: str = "exact"  # or "sketch" (line-search steps only)
    step: str = "corrective"  # or "line_search"
    mwu_eps: float | None = 0.5
    mwu_rounds: int = 4000
    phase_iterations: int = 60
    max_phases: int = 30
    rung_search: str = "all"  # all rungs side by side; "binary" runs them one after another; "single" only the lowest
    beta_steps: int = 8
    pool_size: int = 64
    certify_level: float = 3.0  # a rung passes when lambda >= 1 - certify_level * delta
    kappa_scale: float = 1.0
    keep_failures_n: int = 9  # record oracle failures for audit when n is at most this
    sample_sharpness: float = 1.0  # bundle weights exp(-s ln(2m/delta) (r - lam) / lam), restricted master only


@dataclass
class RungTrace:
    alpha: float
    lam: float
    budget: float
    bound: float
    status: str
    iterations: int
    phases: int
    passes: int
    lam_trace: list[float] = field(default_factory=list)
    witness_M: list[np.ndarray] = field(default_factory=list)
    expected: list[float] = field(default_factory=list)
    set_sizes: list[int] = field(default_factory=list)
    regret: list[float] = field(default_factory=list)
    drift: list[float] = field(default_factory=list)
    inner_rounds: list[int] = field(default_factory=list)
    iterate_bound: float = math.inf
    peak_words: int = 0
    failures: list = field(default_factory=list)  # (oracle output, sparsifier edges, node caps), small n only
    answer_bound: float = math.inf


@dataclass
class EstimateResult:
    value: float
    ledger: ResourceLedger
    alpha: float
    rungs: list[RungTrace]
    delta: float
    epsilon: float
    mode: str
    k: int = 1
    diagnostic: str = ""

    @property
    def iterations(self) -> int:
        return sum(r.iterations for r in self.rungs)

    def trace_lines(self) -> list[str]:
        out = []
        for r in self.rungs:
            for t, lam in enumerate(r.lam_trace):
                out.append(f"{r.alpha:.10g}\t{t}\t{lam:.10g}")
        return out


def default_delta(eps: float) -> float:
    return eps / 4


# ---------------------------------------------------------------------------
# one rung


class _Rung:
    """A covering run for one budget alpha, phase after phase."""

    def __init__(self, stream: EdgeStream, alpha: float, delta: float, cfg: EstimateConfig, ledger: ResourceLedger,
                 b: np.ndarray, caps: np.ndarray, n_pad: int, start: DualCandidate, seed: int):
        self.stream = stream
        self.alpha = alpha
        self.delta = delta
        self.cfg = cfg
        self.ledger = ledger
        self.b = b
        self.caps = caps
        self.n_pad = n_pad
        self.pad = n_pad - 1 if n_pad > stream.n else None
        self.start = start
        self.seed = seed
        self.us, self.vs, _ = stream.peek_arrays()
        self.trace = RungTrace(alpha, 0.0, 0.0, math.inf, "", 0, 0, 0)
        self.calls = 0
        self.kappa = None
        self.k = 1
        self.bundle: PresampleBundle | None = None
        self.slot = 0
        self.bundle_edges: np.ndarray | None = None
        self.bundle_y0: np.ndarray | None = None
        self.pool: dict[frozenset[int], None] = {}
        self.best_bound = math.inf
        self.best_point: DualCandidate | None = None
        self.pending: tuple[float, DualCandidate] | None = None
        self.set_pool: dict[frozenset[int], None] = {}
        self.cur_family = None
        self.anchor: DualCandidate | None = None
        self.anchor_keep = 0.0

    # -- passes --------------------------------------------------------------

    def _full_pass(self) -> tuple[np.ndarray, np.ndarray]:
        us, vs, _ = self.stream.read_pass()
        return np.asarray(us), np.asarray(vs)

    def _weights(self, ratios: np.ndarray, lam: float, b: np.ndarray) -> np.ndarray:
        return np.exp(-self.kappa * (ratios - lam)) / b

    def _new_bundle(self, x: DualCandidate) -> None:
        us, vs = self._full_pass()
        self._certify_pending(us, vs)
        r = x.coverage(us, vs) / self.b
        lam = float(r.min())
        self.bundle_full_lam = lam
        if self.cfg.step == "corrective":
            # sampling only has to catch every edge near the least ratio
            self.kappa = self.cfg.sample_sharpness * math.log(2 * len(r) / self.delta) / lam
        y = self._weights(r, lam, self.b)
        self.bundle = presample(self.n_pad, us, vs, y, self.k, self.delta, self.seed + 7919 * self.calls, self.cfg.C, self.cfg.c0)
        keep = np.zeros(len(us), bool)
        for mk in self.bundle.masks:
            keep |= mk
        self.bundle_edges = np.flatnonzero(keep)
        self.bundle_y0 = y
        # trust region: unsampled edges must not fall below the current least ratio
        r_out = float(r[~keep].min()) if (~keep).any() else math.inf
        self.anchor = x if x.zsketch is None else None
        self.anchor_keep = 0.0 if math.isinf(r_out) else min(1.0, lam / r_out)
        self.slot = 0
        self.ledger.charge(self.bundle.words)
        self.ledger.charge(-self.bundle.words)

    # -- framework hooks -------------------------------------------------------

    def evaluate(self, x: DualCandidate) -> Evaluation:
        if self.cfg.p == 0:
            us, vs = self._full_pass()
            r = x.coverage(us, vs) / self.b
            self.last_ratios = r
            self.cur_family = None
            return Evaluation(None, r, self.b)
        if self.bundle is None or self.slot >= self.k:
            self._new_bundle(x)
        idx = self.bundle_edges
        r = x.coverage(self.us[idx], self.vs[idx]) / self.b[idx]
        self.last_ratios = r
        self.cur_family = idx
        return Evaluation(idx, r, self.b[idx])

    def ratios_on(self, family, x: DualCandidate) -> np.ndarray:
        if family is None:
            us, vs = self._full_pass()
            r = x.coverage(us, vs) / self.b
            self._offer(x, float(r.min()), exact=True)
            return r
        r = x.coverage(self.us[family], self.vs[family]) / self.b[family]
        self._offer(x, float(r.min()), exact=False)
        return r

    # -- restricted master ----------------------------------------------------------

    def _family_ratios(self, x: DualCandidate, family) -> np.ndarray:
        """Ratios of an explicit point on a family already held in memory."""
        idx = slice(None) if family is None else family
        return x.coverage(self.us[idx], self.vs[idx]) / self.b[idx]

    def _master(self, family) -> DualCandidate:
        """Best least ratio on the family over node variables and the pooled odd sets.

        Sets ``master_lam`` and ``master_duals`` (a distribution over the
        family's edges).
        """
        from scipy.optimize import linprog
        from scipy.sparse import coo_matrix, csr_matrix, vstack, hstack

        idx = slice(None) if family is None else family
        us, vs, b = self.us[idx], self.vs[idx], self.b[idx]
        n, m = self.n_pad, len(us)
        sets = list(self.set_pool)
        k = len(sets)
        rows = np.arange(m)
        X = coo_matrix((np.ones(2 * m), (np.concatenate([rows, rows]), np.concatenate([us, vs]))), shape=(m, n))
        mem = _membership(n, sets) if k else np.zeros((n, 0), bool)
        Z = csr_matrix((mem[us] & mem[vs]).astype(float))
        cover = hstack([-X, -Z, csr_matrix(b[:, None])])
        budget = csr_matrix(np.concatenate([np.ones(n), [len(U) // 2 for U in sets], [0.0]])[None, :])
        load = hstack([csr_matrix(2 * np.eye(n)), csr_matrix(mem.astype(float)), csr_matrix((n, 1))])
        A = vstack([cover, budget, load]).tocsr()
        rhs = np.concatenate([np.zeros(m), [self.alpha], self.caps])
        c = np.zeros(n + k + 1)
        c[-1] = -1.0
        lower = np.zeros(n + k)
        if family is not None and self.anchor is not None and self.anchor_keep > 0:
            lower[:n] = self.anchor_keep * self.anchor.x
            lower[n:] = [self.anchor_keep * self.anchor.sets.get(U, 0.0) for U in sets]
        bounds = [(lo, None) for lo in lower] + [(None, None)]
        lp = linprog(c, A_ub=A, b_ub=rhs, bounds=bounds, method="highs")
        if lp.status != 0:  # pragma: no cover - always feasible and bounded
            raise RuntimeError(f"master LP failed: {lp.message}")
        self.master_lam = float(lp.x[-1])
        duals = np.maximum(-lp.ineqlin.marginals[:m], 0.0)
        tot = float(duals @ b)
        self.master_duals = duals / tot if tot > 0 else np.full(m, 1.0 / float(b.sum()))
        z = lp.x[n:n + k]
        self.ledger.charge(A.nnz)
        self.ledger.charge(-A.nnz)
        return DualCandidate.explicit(n, np.maximum(lp.x[:n], 0.0), {U: float(v) for U, v in zip(sets, z) if v > 1e-12})

    def _offer(self, x: DualCandidate, lam: float, exact: bool) -> None:
        """Remember the explicit point with the best budget / coverage bound.

        Bounds measured on a bundle's edges only are provisional; the point is
        re-measured on every edge at the next pass.
        """
        if x.zsketch is not None or lam <= 0:
            return
        bound = x.budget / lam
        if exact and bound < self.best_bound:
            self.best_bound, self.best_point = bound, x
        elif not exact and (self.pending is None or bound < self.pending[0]):
            self.pending = (bound, x)

    def _certify_pending(self, us: np.ndarray, vs: np.ndarray) -> None:
        if self.pending is None:
            return
        _, x = self.pending
        self.pending = None
        r = x.coverage(us, vs) / self.b
        self._offer(x, float(r.min()), exact=True)

    def oracle(self, family, y: np.ndarray, x: DualCandidate):
        self.calls += 1
        if family is None:
            if self.cfg.step == "corrective":
                self._full_pass()  # the weights are known up front, so sampling takes its own pass
            sp = sparsify_stream(self.n_pad, self.us, self.vs, y, self.delta, self.seed + 104729 * self.calls, self.cfg.C, self.cfg.c0)
        else:
            full = np.zeros(len(self.us))
            full[family] = y
            sp = self.bundle.sparsifier(self.slot, full)
            self.trace.drift.append(self._drift(family, y))
            self.slot += 1
        self.ledger.charge(sp.words)
        # objective of the current point and y.b, both under the exact weights
        bb = self.b if family is None else self.b[family]
        cur = float((y * bb) @ self.last_ratios)
        yb = float(y @ bb)
        if self.cfg.inner == "columns":
            ans, _ = solve_inner_columns(sp, self.alpha, self.delta, self.caps, self.pool, self.cfg.sign,
                                         self.cfg.cut_test, self.pad)
            self._record(ans, sp)
            self._trim_pool()
            self.ledger.charge(-sp.words)
            return ans.point
        floor_beta = cur + self.delta * (cur + x.lam * yb)
        best = self._search_beta(sp, floor_beta)
        self.ledger.charge(-sp.words)
        return best

    def _trim_pool(self) -> None:
        extra = len(self.pool) - self.cfg.pool_size
        for U in list(self.pool)[:max(extra, 0)]:
            del self.pool[U]

    def _search_beta(self, sp: Sparsifier, lo: float):
        """Geometric bisection on the inner target; returns the best point found.

        A target is reached when the weights loop settles on a nearly feasible
        average.  Anything above 1.5 alpha max_i d_i is out of reach, since one
        unit of budget buys at most 1.5 max_i d_i of objective.
        """
        cfg = self.cfg
        d = sp.degrees()
        hi = 1.5 * self.alpha * float(d.max()) if len(d) else 0.0
        lo = max(lo, 1e-300)
        if hi <= lo:
            return None
        best, best_obj = None, -math.inf

        def attempt(beta):
            nonlocal best, best_obj
            ans = solve_inner(sp, self.alpha, beta, self.delta, self.caps, cfg.sign, cfg.cut_test, self.pad,
                              cfg.mwu_eps, cfg.mwu_rounds)
            self._record(ans)
            if ans.point is not None and ans.objective > best_obj:
                best, best_obj = ans.point, ans.objective
            return ans.point is not None and ans.reached

        if attempt(hi):
            return best
        a, b = lo, hi
        for _ in range(cfg.beta_steps):
            if b <= a * (1 + self.delta):
                break
            mid = math.sqrt(a * b)
            if attempt(mid):
                a = mid
            else:
                b = mid
        return best

    def _drift(self, family, y: np.ndarray) -> float:
        """Largest |log| change of any bundle edge's normalized weight since the bundle was drawn."""
        y0 = self.bundle_y0[family]
        good = (y0 > 0) & (y > 0)
        if not good.any():
            return 0.0
        lr = np.log(y[good]) - np.log(y0[good])
        return float(0.5 * (lr.max() - lr.min()))

    def _record(self, ans: InnerAnswer, sp: Sparsifier | None = None) -> None:
        from .frameworks import exact_regret_slack

        tr = self.trace
        n = self.n_pad
        if ans.mwu is None:
            tr.inner_rounds.append(len(ans.witnesses))
            for w in ans.witnesses:
                M = _witness_violation(w, n, self.alpha, self.caps)
                ow = w.weights
                probs = np.concatenate([ow.zeta, [ow.zeta_alpha]])
                tot = probs.sum()
                tr.witness_M.append(M)
                tr.expected.append(float(probs @ M / tot) if tot > 0 else 0.0)
                if w.kind == "z":
                    tr.set_sizes.append(len(w.U))
            if ans.failure is not None and sp is not None and n <= self.cfg.keep_failures_n:
                tr.failures.append((ans.failure.primal, sp.edges, self.caps))
            return
        tr.inner_rounds.append(len(ans.mwu.transcript))
        for w, rnd in zip(ans.witnesses, ans.mwu.transcript):
            tr.witness_M.append(rnd.M)
            tr.expected.append(rnd.expected)
            if w.kind == "z":
                tr.set_sizes.append(len(w.U))
        tr.regret.append(exact_regret_slack(ans.mwu.instance, ans.mwu))

    # -- driver ------------------------------------------------------------------

    def run(self) -> RungTrace:
        self.p0 = self.stream.pass_count
        if self.cfg.step == "corrective":
            return self._finish(self._run_corrective())
        return self._finish(self._run_line_search())

    def _run_corrective(self) -> tuple[DualCandidate, str]:
        """Restricted master over node variables and the odd sets named so far.

        Each iteration solves the master on the edges held in memory, hands its
        edge duals to the oracle, and adds the odd sets of the answer.  It stops
        once the answer gains less than a (1 + delta) factor under those duals.
        """
        cfg = self.cfg
        tr = self.trace
        tr.phases = 1
        if cfg.p > 0:
            self.k = max(1, int(math.ceil(math.log(max(self.n_pad, 2)) / (cfg.p * self.delta))))
        x = self.start
        ev = self.evaluate(x)
        if float(ev.ratios.min()) <= 0:
            raise ValueError("the start point leaves an edge uncovered")
        held = 3 * len(ev.ratios)
        self.ledger.charge(held)
        status = "capped"
        settled = False  # the oracle found nothing more on the current bundle
        for it in range(cfg.phase_iterations):
            if cfg.p > 0 and it > 0 and (settled or self.slot >= self.k):
                bundle_lam = self.master_lam
                self.ledger.charge(-held)
                self.slot = self.k
                ev = self.evaluate(x)  # one pass: exact ratios, then a fresh bundle
                held = 3 * len(ev.ratios)
                self.ledger.charge(held)
                if settled and float(self.bundle_full_lam) * (1 + self.delta) >= bundle_lam:
                    status = "converged"
                    break
                settled = False
            family = self.cur_family
            x = self._master(family)
            lam = self.master_lam
            tr.lam_trace.append(lam)
            self.last_ratios = self._family_ratios(x, family)
            bb = self.b if family is None else self.b[family]
            xt = self.oracle(family, self.master_duals / bb, x)
            tr.iterations += 1
            if xt is None:
                status = "oracle_failed"
                break
            rt = self._family_ratios(xt, family)
            gain = float(self.master_duals @ (rt * bb))
            fresh = [U for U in xt.sets if U not in self.set_pool]
            if gain <= (1 + self.delta) * lam or not fresh:
                if cfg.p == 0:
                    status = "converged"
                    break
                settled = True
                continue
            for U in fresh:
                self.set_pool[U] = None
            extra = len(self.set_pool) - cfg.pool_size
            if extra > 0:
                used = set(x.sets) | (set(self.anchor.sets) if self.anchor is not None else set())
                for U in [U for U in self.set_pool if U not in used][:extra]:
                    del self.set_pool[U]
        else:
            x = self._master(self.cur_family)
        self.ledger.charge(-held)
        return x, status

    def _run_line_search(self) -> tuple[DualCandidate, str]:
        cfg = self.cfg
        x = self.start
        tr = self.trace
        p0 = self.stream.pass_count
        if cfg.p > 0:
            self.k = max(1, int(math.ceil(math.log(max(self.n_pad, 2)) / (cfg.p * self.delta))))
        status = "capped"
        for phase in range(cfg.max_phases):
            tr.phases = phase + 1
            ev = self.evaluate(x)
            lam0 = float(ev.ratios.min())
            if lam0 <= 0:
                raise ValueError("the start point leaves an edge uncovered")
            self.kappa = self.cfg.kappa_scale * default_kappa(lam0, self.delta, len(ev.ratios))
            if cfg.p > 0:
                self.slot = self.k  # the next evaluation draws a fresh bundle for the new weights
            cached = [ev]

            def evaluate(pt, _cache=cached):
                if _cache:
                    return _cache.pop()
                e = self.evaluate(pt)
                pt.lam = float(e.ratios.min())
                return e

            x.lam = lam0
            inst = FrameworkInstance(
                evaluate=evaluate,
                ratios_on=self.ratios_on,
                oracle=self.oracle,
                width=4.0,
                delta=self.delta,
                m=len(ev.ratios),
                kappa=self.kappa,
                combine=lambda a, b, s: a.combine(b, s),
                step="line_search",
                max_iter=cfg.phase_iterations,
                check_potential=False,
            )
            res = cover_solve(inst, x)
            x = res.x
            tr.iterations += res.iterations
            tr.lam_trace.extend(r.lam for r in res.transcript)
            status = res.status
            if status != "improved":
                break
        return x, status

    def _finish(self, out: tuple[DualCandidate, str]) -> RungTrace:
        x, status = out
        tr = self.trace
        us, vs = self._full_pass()
        self._certify_pending(us, vs)
        r = x.coverage(us, vs) / self.b
        tr.lam = float(r.min())
        tr.budget = x.budget
        tr.bound = x.budget / tr.lam if tr.lam > 0 else math.inf
        tr.iterate_bound = tr.bound
        tr.answer_bound = self.best_bound
        if self.best_bound < tr.bound:
            tr.bound = self.best_bound
            tr.lam = self.best_point.budget / self.best_bound if self.best_bound > 0 else tr.lam
            tr.budget = self.best_point.budget
        tr.status = status
        tr.passes = self.stream.pass_count - self.p0
        return tr


# ---------------------------------------------------------------------------
# drivers


def _greedy_start(stream_n: int, n_pad: int, us, vs, ws, matched: list[tuple[int, int]], alpha: float, caps: np.ndarray,
                  weighted: bool) -> DualCandidate:
    """Cover every edge from the greedy matching's endpoints, within budget and caps."""
    x = np.zeros(n_pad)
    if weighted:
        phi = np.zeros(n_pad)
        np.maximum.at(phi, us, ws)
        np.maximum.at(phi, vs, ws)
        c = alpha / float(phi.sum())
        x = c * phi
        x = np.minimum(x, caps / 2)
    else:
        ends = sorted({a for e in matched for a in e})
        if ends:
            x[ends] = min(1.5, alpha / len(ends))
    return DualCandidate(x, None, {}, float(x.sum()), 2 * x)


def _estimate(stream: EdgeStream, eps: float, cfg: EstimateConfig, b: np.ndarray, caps_real: np.ndarray, weighted: bool,
              ledger: ResourceLedger) -> EstimateResult:
    delta = cfg.delta if cfg.delta is not None else default_delta(eps)
    n = stream.n
    mode = "simple" if cfg.p == 0 else "compressed"
    if stream.m == 0:
        return EstimateResult(0.0, ledger, 0.0, [], delta, eps, mode)
    n_pad = n if n % 2 == 1 else n + 1
    caps = np.full(n_pad, float(caps_real.min()) if len(caps_real) else 3.0)
    caps[:n] = caps_real
    p0 = stream.pass_count
    matched, A = greedy_constant_approx(stream, None)
    pre_passes = stream.pass_count - p0
    base_words = ledger.current_words
    us, vs, ws = stream.peek_arrays()
    if not weighted:
        A = float(len(matched))
    ladder = guess_ladder(A, delta)
    sk_eps = cfg.sketch_eps if cfg.sketch_eps is not None else delta
    rungs: dict[int, RungTrace] = {}

    def run(j: int) -> RungTrace:
        if j in rungs:
            return rungs[j]
        alpha = ladder[j]
        own = ResourceLedger()
        start = _greedy_start(n, n_pad, us, vs, ws, matched, alpha, caps, weighted)
        if cfg.zstore == "sketch" and cfg.step != "corrective":
            start.zsketch = NodeSketch(n_pad, sk_eps, cfg.seed * 1000003 + j, cfg.c_jl, cap=float(caps.max()))
            own.charge(start.zsketch.words)
        own.charge(2 * n_pad)  # the start point and the running x
        tr = _Rung(stream, alpha, delta, cfg, own, b, caps, n_pad, start, cfg.seed * 7 + 31 * j).run()
        tr.peak_words = own.peak_words
        rungs[j] = tr
        return tr

    def ok(tr: RungTrace) -> bool:
        return tr.lam >= 1 - cfg.certify_level * delta

    if cfg.rung_search == "single":
        run(0)
    elif cfg.rung_search == "all":
        for j in range(len(ladder)):
            run(j)
    else:
        lo, hi = 0, len(ladder) - 1
        if not ok(run(hi)):
            lo = hi
        while lo < hi:
            mid = (lo + hi) // 2
            if ok(run(mid)):
                hi = mid
            else:
                lo = mid + 1
        run(lo)
    done = [rungs[j] for j in sorted(rungs)]
    if cfg.rung_search == "all":
        # the rungs share every pass and hold their state side by side
        ledger.passes += pre_passes + max(r.passes for r in done)
        ledger.peak_words = max(ledger.peak_words, base_words + sum(r.peak_words for r in done))
    else:
        ledger.passes += pre_passes + sum(r.passes for r in done)
        ledger.peak_words = max(ledger.peak_words, base_words + max(r.peak_words for r in done))
    best = min(done, key=lambda r: r.bound)
    return EstimateResult(best.bound, ledger, best.alpha, done, delta, eps, mode)


def estimate_mcm(stream: EdgeStream, eps: float, p: int = 0, config: EstimateConfig | None = None) -> EstimateResult:
    """Estimate the maximum cardinality matching size (weights are ignored)."""
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    cfg = EstimateConfig() if config is None else config
    cfg = EstimateConfig(**{**cfg.__dict__, "p": p if p else cfg.p})
    ledger = ResourceLedger()
    unit = stream.with_weights(np.ones(stream.m))
    res = _estimate(unit, eps, cfg, np.ones(unit.m), np.full(unit.n, 3.0), False, ledger)
    res.k = max(1, int(math.ceil(math.log(max(unit.n + (unit.n % 2 == 0), 2)) / (cfg.p * res.delta)))) if cfg.p else 1
    return res


# ---------------------------------------------------------------------------
# weighted preprocessing


def filter_small_weights(stream: EdgeStream, delta: float) -> tuple[EdgeStream, float, float]:
    """Drop edges lighter than delta A / n and rescale the rest so the lightest is >= 1.

    A is the one-pass greedy value, within a factor six of the optimum.
    Returns (filtered stream, scale, A); original weight = filtered weight * scale.
    """
    _, A = greedy_constant_approx(stream, None)
    if A <= 0 or stream.m == 0:
        return stream, 1.0, 0.0
    us, vs, ws = stream.read_pass()
    thr = delta * A / stream.n
    keep = ws >= thr
    return stream.with_weights(ws / thr, keep), thr, A


@dataclass
class TieredBounds:
    u: np.ndarray
    q: int
    L_tiers: int
    delta: float

    def keeps(self, i: int, j: int, w: float) -> bool:
        lo = self.delta**2 / self.q
        ui, uj = self.u[i], self.u[j]
        return bool(ui > 0 and uj > 0 and lo * ui <= w <= ui and lo * uj <= w <= uj)

    def mask(self, us, vs, ws) -> np.ndarray:
        lo = self.delta**2 / self.q
        ui, uj = self.u[us], self.u[vs]
        return (ui > 0) & (uj > 0) & (lo * ui <= ws) & (ws <= ui) & (lo * uj <= ws) & (ws <= uj)


def _tier_of(w: np.ndarray, delta: float) -> np.ndarray:
    """Smallest k >= 0 with w <= (1 + delta)^k."""
    k = np.ceil(np.log(np.maximum(w, 1.0)) / math.log1p(delta) - 1e-12)
    return np.maximum(k, 0).astype(np.int64)


def tiered_subgraph(stream: EdgeStream, delta: float, q: int) -> TieredBounds:
    """Per weight tier, a maximal matching C_k plus q rounds of maximal matchings
    between C_k and the nodes not yet reached; u_i = (1+delta)^k for the top tier reaching i.

    Tier k uses the edges heavier than (1+delta)^(k-1), so an edge of weight w
    is eligible up to the tier whose bound (1+delta)^k first reaches w.
    All tiers advance together: one pass for the C_k, then one per round.
    """
    n = stream.n
    if stream.m == 0:
        return TieredBounds(np.zeros(n), q, 0, delta)
    us, vs, ws = stream.read_pass()
    top = _tier_of(ws, delta)
    L = int(top.max())
    tiers = range(L + 1)
    eligible = {k: top >= k for k in tiers}
    S = {k: np.zeros(n, bool) for k in tiers}
    C = {}
    for k in tiers:
        used = np.zeros(n, bool)
        for a, b in zip(us[eligible[k]].tolist(), vs[eligible[k]].tolist()):
            if not used[a] and not used[b]:
                used[a] = used[b] = True
        C[k] = used
        S[k] = used.copy()
    for _ in range(q):
        us, vs, ws = stream.read_pass()
        grew = False
        for k in tiers:
            used = np.zeros(n, bool)
            ck, sk = C[k], S[k]
            for a, b in zip(us[eligible[k]].tolist(), vs[eligible[k]].tolist()):
                if ck[a] and not sk[b]:
                    i, j = a, b
                elif ck[b] and not sk[a]:
                    i, j = b, a
                else:
                    continue
                if not used[i] and not used[j]:
                    used[i] = used[j] = True
            new = used & ~sk
            if new.any():
                grew = True
            S[k] = sk | used
        if not grew:
            break
    u = np.zeros(n)
    for k in tiers:
        u[S[k]] = (1 + delta) ** k
    return TieredBounds(u, q, L, delta)


def default_rounds(delta: float) -> int:
    return int(math.ceil(delta**-2 * math.log(1 / delta)))


def estimate_mwm(stream: EdgeStream, eps: float, p: int = 0, config: EstimateConfig | None = None,
                 q: int | None = None) -> EstimateResult:
    """Estimate the maximum weight matching: filter, restrict to the tiered subgraph, then cover."""
    cfg = EstimateConfig() if config is None else config
    cfg = EstimateConfig(**{**cfg.__dict__, "p": p if p else cfg.p})
    delta = cfg.delta if cfg.delta is not None else default_delta(eps)
    ledger = ResourceLedger()
    p0 = stream.pass_count
    filt, scale, A = filter_small_weights(stream, delta)
    if filt.m == 0:
        ledger.passes = stream.pass_count - p0
        return EstimateResult(0.0, ledger, 0.0, [], delta, eps, "simple" if cfg.p == 0 else "compressed")
    qq = default_rounds(delta) if q is None else q
    tb = tiered_subgraph(filt, delta, qq)
    us, vs, ws = filt.peek_arrays()
    keep = tb.mask(us, vs, ws)
    sub = filt.with_weights(ws, keep)
    phi = np.zeros(sub.n)
    su, sv, sw = sub.peek_arrays()
    np.maximum.at(phi, su, sw)
    np.maximum.at(phi, sv, sw)
    caps = np.where(phi > 0, 2 * phi / delta, 3.0)
    res = _estimate(sub, eps, EstimateConfig(**{**cfg.__dict__, "delta": delta}), np.asarray(sw, float), caps, True, ledger)
    res.value *= scale
    res.alpha *= scale
    # filtering and restriction run on the fly, so their passes are passes over the input
    ledger.passes += stream.pass_count - p0 + filt.pass_count
    return res
