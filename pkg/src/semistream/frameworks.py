"""Exponential-potential packing and covering engines, and multiplicative weights.

Packing: minimize lambda = max_i A_i x / b_i over a convex set P that is only
reachable through an oracle.  Each iteration puts weight
y_i = exp(kappa * A_i x / b_i) / b_i on the constraints, asks the oracle for a
point of P that is cheap under y, and moves a step towards it.  Covering is
the mirror image: maximize the minimum ratio, negative exponent, and an
oracle that maximizes.

Constraint families may be implicit.  An instance supplies ``evaluate``,
which returns an opaque handle for the constraints it currently cares
about together with their ratios, and ``ratios_on``, which measures another
point on the same handle.  Exponentials are always taken relative to the
current extreme ratio, so large kappa * lambda never overflows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Optional

import numpy as np
from scipy.special import logsumexp

Point = Any


class OracleContractError(RuntimeError):
    pass


class IterationCapError(RuntimeError):
    pass


class AdmissibilityError(RuntimeError):
    pass


def default_kappa(lam0: float, delta: float, m: int) -> float:
    """Smallest kappa allowed by the potential argument: 4 ln(2m/delta) / (lam0 delta)."""
    return 4.0 / (lam0 * delta) * math.log(2 * max(m, 1) / delta)


def theoretical_iterations(kappa: float, rho: float, delta: float, lam0: float, m: int) -> int:
    """Steps needed for the potential to push the extreme ratio by a factor (1 -/+ delta).

    Each failing step shrinks the potential by at least 1 - kappa*sigma*delta*lambda,
    the potential starts below m exp(kappa lam0) and stays above exp(kappa (1-delta) lam0).
    """
    sigma = delta / (4 * kappa * rho)
    per_step = kappa * sigma * delta * (1 - delta) * lam0
    return int(math.ceil((math.log(max(m, 1)) + kappa * delta * lam0) / per_step)) + 1


@dataclass
class Evaluation:
    family: Any
    ratios: np.ndarray
    b: np.ndarray


@dataclass
class FrameworkInstance:
    """Shared description of a packing or covering problem.

    evaluate(x) -> Evaluation: ratios A_i x / b_i on the current family.
    ratios_on(family, x) -> ratios of x on a fixed family.
    oracle(family, y, x) -> point of P, or None when the oracle gives up.
    """

    evaluate: Callable[[Point], Evaluation]
    ratios_on: Callable[[Any, Point], np.ndarray]
    oracle: Callable[[Any, np.ndarray, Point], Optional[Point]]
    width: float
    delta: float
    m: int
    kappa: float | None = None
    combine: Callable[[Point, Point, float], Point] = lambda x, xt, s: (1 - s) * x + s * xt
    step: str = "fixed"  # or "line_search"
    lambda_floor: float | None = None
    window: float | None = None
    max_iter: int | None = None
    tol: float = 1e-9
    check_potential: bool = True


PackingInstance = FrameworkInstance
CoveringInstance = FrameworkInstance


@dataclass
class IterationRecord:
    iteration: int
    lam: float
    log_potential: float
    p1: bool
    p2: bool
    sigma: float
    potential_ratio: float | None
    bound_ratio: float | None
    oracle_ok: bool

    def as_line(self) -> str:
        return (
            f"{self.iteration}\t{self.lam:.10g}\t{self.log_potential:.10g}\t"
            f"{int(self.p1)}\t{int(self.p2)}\t{self.sigma:.3g}\t{int(self.oracle_ok)}"
        )


@dataclass
class SolveResult:
    x: Point
    lam: float
    status: str  # converged | improved | oracle_failed | capped
    iterations: int
    kappa: float
    sigma: float
    transcript: list[IterationRecord] = field(default_factory=list)

    def potential_violations(self) -> list[IterationRecord]:
        """Iterations where the second condition failed but the potential did not drop enough."""
        out = []
        for r in self.transcript:
            if r.p2 or r.potential_ratio is None or r.bound_ratio is None:
                continue
            if r.potential_ratio > r.bound_ratio * (1 + 1e-9) + 1e-12:
                out.append(r)
        return out


def _golden_min(f: Callable[[float], float], lo: float, hi: float, iters: int = 80) -> float:
    g = (math.sqrt(5) - 1) / 2
    a, b = lo, hi
    c, d = b - g * (b - a), a + g * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - g * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + g * (b - a)
            fd = f(d)
    best = min((f(lo), lo), (f(hi), hi), (fc, c), (fd, d))
    return best[1]


def _solve(inst: FrameworkInstance, x0: Point, sense: int) -> SolveResult:
    """sense = +1 packing (minimize the max ratio), -1 covering (maximize the min)."""
    delta = inst.delta
    ext = np.max if sense > 0 else np.min

    def extreme(r: np.ndarray) -> float:
        lam = float(ext(r)) if len(r) else (-np.inf if sense > 0 else np.inf)
        if inst.lambda_floor is not None:
            lam = max(lam, inst.lambda_floor) if sense > 0 else min(lam, inst.lambda_floor)
        return lam

    x = x0
    ev = inst.evaluate(x)
    lam0 = extreme(ev.ratios)
    if not np.isfinite(lam0) or lam0 <= 0:
        raise ValueError(f"initial lambda must be positive and finite, got {lam0}")
    kappa = inst.kappa if inst.kappa is not None else default_kappa(lam0, delta, inst.m)
    sigma_fixed = delta / (4 * kappa * inst.width)
    cap = inst.max_iter
    if cap is None:
        cap = 10 * theoretical_iterations(kappa, inst.width, delta, lam0, inst.m)
    transcript: list[IterationRecord] = []
    it = 0
    while True:
        r, b = ev.ratios, ev.b
        lam = extreme(r)
        if it > 0 and (lam <= (1 - delta) * lam0 if sense > 0 else lam >= (1 + delta) * lam0):
            return SolveResult(x, lam, "improved", it, kappa, sigma_fixed, transcript)
        if it >= cap:
            if inst.max_iter is None:
                raise IterationCapError(f"no termination after {it} iterations (10x the bound)")
            return SolveResult(x, lam, "capped", it, kappa, sigma_fixed, transcript)
        it += 1
        expo = sense * kappa * (r - lam)  # <= 0 on every in-range constraint
        if inst.window is not None and len(r):
            live = (r >= lam - inst.window) if sense > 0 else (r <= lam + inst.window)
        else:
            live = np.ones(len(r), bool)
        weight = np.where(live, np.exp(expo), 0.0)  # y_i * b_i, rescaled
        y = weight / b if len(b) else weight
        yb = float(weight.sum())
        yAx = float(weight @ r) if len(r) else 0.0
        xt = inst.oracle(ev.family, y, x)
        if xt is None:
            transcript.append(IterationRecord(it, lam, float("nan"), True, False, 0.0, None, None, False))
            return SolveResult(x, lam, "oracle_failed", it, kappa, sigma_fixed, transcript)
        rt = inst.ratios_on(ev.family, xt)
        yAxt = float(weight @ rt) if len(r) else 0.0
        scale = max(abs(yAx), lam * yb, 1e-300)
        if sense > 0:
            p1 = (1 - delta) * lam * yb <= yAx + inst.tol * scale
            p2 = yAx - yAxt <= delta * (yAx + lam * yb) + inst.tol * scale
        else:
            p1 = (1 + delta) * lam * yb >= yAx - inst.tol * scale
            p2 = yAxt - yAx <= delta * (yAx + lam * yb) + inst.tol * scale
        logphi = float(logsumexp(sense * kappa * r)) if len(r) else -np.inf
        if p1 and p2:
            transcript.append(IterationRecord(it, lam, logphi, p1, p2, 0.0, None, None, True))
            return SolveResult(x, lam, "converged", it, kappa, sigma_fixed, transcript)
        if inst.step == "line_search" and len(r):
            def phi(s: float) -> float:
                return float(logsumexp(sense * kappa * ((1 - s) * r + s * rt)))

            sigma = _golden_min(phi, 0.0, 1.0)
        else:
            sigma = sigma_fixed
        x_new = inst.combine(x, xt, sigma)
        ratio = bound = None
        if inst.check_potential and len(r):
            r_new = inst.ratios_on(ev.family, x_new)
            ratio = math.exp(float(logsumexp(sense * kappa * r_new)) - logphi)
            bound = 1 - kappa * sigma_fixed * delta * lam
        transcript.append(IterationRecord(it, lam, logphi, p1, p2, sigma, ratio, bound, True))
        x = x_new
        ev = inst.evaluate(x)


def pack_solve(inst: PackingInstance, x0: Point) -> SolveResult:
    return _solve(inst, x0, +1)


def cover_solve(inst: CoveringInstance, x0: Point) -> SolveResult:
    return _solve(inst, x0, -1)


# ---------------------------------------------------------------------------
# multiplicative weights


@dataclass
class Witness:
    """An oracle answer: a point and its violation M(i, y) of every constraint."""

    point: Any
    M: np.ndarray
    kind: str = ""


@dataclass
class Failure:
    certificate: Any


@dataclass
class MwuInstance:
    n_constraints: int
    oracle: Callable[[np.ndarray], "Witness | Failure"]
    rho: float
    ell: float
    delta: float
    eps_step: float | None = None
    T: int | None = None
    early_stop: bool = False
    max_rounds: int | None = None
    tol: float = 1e-9

    def __post_init__(self):
        if self.ell > self.rho + 1e-12:
            raise ValueError("the lower width must not exceed the upper width")
        if self.eps_step is None:
            self.eps_step = min(self.delta / (4 * self.ell), 0.5) if self.ell > 0 else 0.5
        if self.T is None:
            self.T = int(math.ceil(2 * self.rho * math.log(self.n_constraints) / (self.delta * self.eps_step)))


@dataclass
class MwuRound:
    probs: np.ndarray
    M: np.ndarray
    kind: str

    @property
    def expected(self) -> float:
        return float(self.probs @ self.M)


@dataclass
class MwuResult:
    witnesses: list
    transcript: list[MwuRound]
    status: str  # solved | primal_certificate
    certificate: Any = None

    @property
    def avg_violation(self) -> np.ndarray:
        return np.mean([r.M for r in self.transcript], axis=0)

    def avg_point(self):
        pts = [w.point for w in self.witnesses]
        return sum(pts[1:], pts[0]) / len(pts) if pts else None


def mwu_solve(inst: MwuInstance) -> MwuResult:
    """Multiplicative weights with width rho and lower width ell.

    Runs ``T`` rounds (or fewer with ``early_stop`` once the running average
    violates nothing by more than 2 delta, or ``max_rounds``).  The oracle is
    called with the normalized weight vector.
    """
    k = inst.n_constraints
    logu = np.zeros(k)
    up = math.log1p(inst.eps_step)
    down = math.log1p(-inst.eps_step)
    witnesses, transcript = [], []
    total = np.zeros(k)
    rounds = inst.T if inst.max_rounds is None else min(inst.T, inst.max_rounds)
    for t in range(rounds):
        p = np.exp(logu - logu.max())
        p /= p.sum()
        ans = inst.oracle(p)
        if isinstance(ans, Failure):
            return MwuResult(witnesses, transcript, "primal_certificate", ans.certificate)
        M = np.asarray(ans.M, float)
        if M.min() < -inst.ell - inst.tol or M.max() > inst.rho + inst.tol:
            raise AdmissibilityError(
                f"violation range [{M.min():.4g}, {M.max():.4g}] outside [-{inst.ell}, {inst.rho}]"
            )
        witnesses.append(ans)
        transcript.append(MwuRound(p, M, ans.kind))
        total += M
        m = M / inst.rho
        logu += np.where(m >= 0, m * up, -m * down)
        if inst.early_stop and total.max() / (t + 1) <= 2 * inst.delta:
            break
    return MwuResult(witnesses, transcript, "solved")


def regret_slack(inst: MwuInstance, result: MwuResult) -> float:
    """min over i of  delta*T + sum_t M(D^t) - (1 - eps) sum_t M(i).  Nonnegative when the bound holds."""
    if not result.transcript:
        return float("inf")
    Ms = np.array([r.M for r in result.transcript])
    expected = sum(r.expected for r in result.transcript)
    lhs = (1 - inst.eps_step) * Ms.sum(axis=0)
    return float(inst.delta * inst.T + expected - lhs.max())


def exact_regret_slack(inst: MwuInstance, result: MwuResult) -> float:
    """Slack in the weight-potential bound that holds for any step size <= 1/2:

    (1-eps) sum_{M>=0} M(i) + (1+eps) sum_{M<0} M(i) <= rho ln(n)/eps + sum_t M(D^t).
    """
    if not result.transcript:
        return float("inf")
    Ms = np.array([r.M for r in result.transcript])
    eps = inst.eps_step
    pos = np.where(Ms >= 0, Ms, 0).sum(axis=0)
    neg = np.where(Ms < 0, Ms, 0).sum(axis=0)
    expected = sum(r.expected for r in result.transcript)
    lhs = (1 - eps) * pos + (1 + eps) * neg
    return float(inst.rho * math.log(inst.n_constraints) / eps + expected - lhs.max())
