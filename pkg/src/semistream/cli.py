"""Command-line entry point: read an edge list, run one pipeline, print a report."""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .graph import EdgeStream, StreamParseError, open_stream

COMMANDS = ("match", "estimate-mcm", "estimate-mwm", "sparsify", "gomory-hu", "odd-cut", "check")
REPORT_KEYS = ("value", "passes", "peak_words", "iterations", "alpha", "epsilon", "seed")

EXIT_OK, EXIT_INPUT, EXIT_BUDGET = 0, 1, 2


@dataclass
class RunConfig:
    command: str
    input: str
    epsilon: float = 0.2
    passes_budget: int = 0  # 0 means unlimited
    p: int = 0
    seed: int = 0
    output_format: str = "text"
    odd: tuple[int, ...] | None = None  # odd-cut: the designated nodes (default: all)

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ValueError(f"unknown command {self.command!r}")
        if not (0 < self.epsilon <= 0.5):
            raise ValueError("epsilon must lie in (0, 0.5]")
        if self.p < 0:
            raise ValueError("p must be nonnegative")
        if self.passes_budget < 0:
            raise ValueError("passes_budget must be nonnegative")
        if self.output_format not in ("text", "json"):
            raise ValueError("output_format must be text or json")


def _report(value, passes=0, peak_words=0, iterations=0, alpha=None, cfg: RunConfig | None = None, **extra) -> dict:
    out = {
        "value": float(value),
        "passes": int(passes),
        "peak_words": int(peak_words),
        "iterations": int(iterations),
        "alpha": None if alpha is None else float(alpha),
        "epsilon": cfg.epsilon,
        "seed": cfg.seed,
    }
    out.update(extra)
    return out


def _match(stream: EdgeStream, cfg: RunConfig) -> dict:
    from .construct import stream_match

    res = stream_match(stream, cfg.epsilon)
    its = sum(r.iterations for r in res.rungs)
    edges = [[int(a), int(b)] for a, b in res.matching]
    if stream.labels is not None:
        edges = [[stream.labels[a], stream.labels[b]] for a, b in edges]
    return _report(res.value, res.ledger.passes, res.ledger.peak_words, its, res.alpha, cfg,
                   fractional_value=res.fractional_value, matching=edges)


def _estimate(stream: EdgeStream, cfg: RunConfig, weighted: bool) -> dict:
    from .estimate import EstimateConfig, estimate_mcm, estimate_mwm

    ecfg = EstimateConfig(seed=cfg.seed)
    fn = estimate_mwm if weighted else estimate_mcm
    res = fn(stream, cfg.epsilon, p=cfg.p, config=ecfg)
    return _report(res.value, res.ledger.passes, res.ledger.peak_words, res.iterations, res.alpha, cfg,
                   mode=res.mode, delta=res.delta, k=res.k)


def _sparsify(stream: EdgeStream, cfg: RunConfig) -> dict:
    from .sparsify import sparsify_stream

    us, vs, ws = stream.read_pass()
    sp = sparsify_stream(stream.n, us, vs, ws, cfg.epsilon, cfg.seed)
    edges = [[int(a), int(b), float(w)] for a, b, w in zip(sp.us.tolist(), sp.vs.tolist(), sp.yhat.tolist())]
    return _report(sp.m, stream.pass_count, sp.words, 0, None, cfg, edges=edges, target_error=sp.target_error)


def _capgraph(stream: EdgeStream):
    from .flow import CapGraph

    us, vs, ws = stream.read_pass()
    return CapGraph.from_arrays(stream.n, us, vs, ws)


def _gomory_hu(stream: EdgeStream, cfg: RunConfig) -> dict:
    from .flow import gomory_hu

    g = _capgraph(stream)
    tree = gomory_hu(g)
    edges = [[v, p, f] for v, p, f in tree.edges()]
    value = min((f for _, _, f in edges), default=0.0)
    return _report(value, stream.pass_count, 3 * g.n, 0, None, cfg, tree=edges)


def _odd_cut(stream: EdgeStream, cfg: RunConfig) -> dict:
    from .flow import min_odd_cut

    g = _capgraph(stream)
    odd = list(range(g.n)) if cfg.odd is None else list(cfg.odd)
    side, value = min_odd_cut(g, odd)
    return _report(value, stream.pass_count, 3 * g.n, 0, None, cfg, side=sorted(side))


def _check(stream: EdgeStream, cfg: RunConfig) -> dict:
    """Invariant suite on one instance; each row is (name, passed, detail)."""
    from .construct import ConstructConfig, LaminarityError, audit, stream_match
    from .flow import gomory_hu, max_flow

    rows: list[tuple[str, bool, str]] = []
    g = _capgraph(stream)
    if g.n >= 2:
        tree = gomory_hu(g)
        bad = [(v, p) for v, p, f in tree.edges() if abs(max_flow(g, v, p)[0] - f) > 1e-7 * max(1.0, f)]
        rows.append(("gomory-hu tree flows", not bad, f"{g.n - 1} tree edges, {len(bad)} mismatched"))
    try:
        res = stream_match(stream, cfg.epsilon, ConstructConfig(check_laminar=True))
    except LaminarityError as exc:
        rows.append(("laminar families", False, str(exc)))
        return _report(0.0, stream.pass_count, 0, 0, None, cfg,
                       checks=[{"name": a, "passed": b, "detail": c} for a, b, c in rows])
    checks = sum(r.laminar_checks for r in res.rungs)
    rows.append(("laminar families", True, f"{checks} families checked, none crossing"))
    viol = audit(res.y)
    rows.append(("fractional matching feasible", not viol, f"{len(viol)} violated constraints"))
    pot = sum(r.potential_violations for r in res.rungs)
    rows.append(("potential decrease", pot == 0, f"{pot} violations"))
    ok = all(r[1] for r in rows)
    return _report(float(ok), stream.pass_count, res.ledger.peak_words, sum(r.iterations for r in res.rungs),
                   res.alpha, cfg, checks=[{"name": a, "passed": b, "detail": c} for a, b, c in rows])


def run(cfg: RunConfig) -> tuple[int, dict]:
    """Execute one command; returns (exit status, report)."""
    if not os.path.isfile(cfg.input):
        return EXIT_INPUT, {"error": f"cannot read {cfg.input!r}"}
    try:
        stream = open_stream(cfg.input, remap=True)
    except (OSError, StreamParseError, ValueError) as exc:
        return EXIT_INPUT, {"error": str(exc)}
    handlers = {
        "match": _match,
        "estimate-mcm": lambda s, c: _estimate(s, c, False),
        "estimate-mwm": lambda s, c: _estimate(s, c, True),
        "sparsify": _sparsify,
        "gomory-hu": _gomory_hu,
        "odd-cut": _odd_cut,
        "check": _check,
    }
    try:
        report = handlers[cfg.command](stream, cfg)
    except ValueError as exc:
        return EXIT_INPUT, {"error": str(exc)}
    if cfg.command == "check" and not report["value"]:
        return EXIT_INPUT, report
    if cfg.passes_budget and report["passes"] > cfg.passes_budget:
        report["error"] = f"used {report['passes']} passes, budget {cfg.passes_budget}"
        return EXIT_BUDGET, report
    return EXIT_OK, report


def _format_text(cfg: RunConfig, report: dict) -> str:
    if "error" in report and "value" not in report:
        return f"error: {report['error']}"
    lines = [f"{k}: {report[k]}" for k in REPORT_KEYS]
    if "matching" in report:
        lines.append("matching: " + " ".join(f"{a}-{b}" for a, b in report["matching"]))
    if "edges" in report:
        lines += [f"{a} {b} {w:.17g}" for a, b, w in report["edges"]]
    if "tree" in report:
        lines += [f"{v} {p} {f:.17g}" for v, p, f in report["tree"]]
    if "side" in report:
        lines.append("side: " + " ".join(map(str, report["side"])))
    if "checks" in report:
        lines += [f"{'PASS' if c['passed'] else 'FAIL'}  {c['name']}: {c['detail']}" for c in report["checks"]]
    if "error" in report:
        lines.append(f"error: {report['error']}")
    return "\n".join(lines)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        # usage errors share the input-error status; 2 is reserved for budget exhaustion
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def parse_args(argv: Sequence[str] | None = None) -> RunConfig:
    ap = _Parser(prog="semistream", description="Semi-streaming matching tools.")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("input", help="edge list: one 'u v [w]' per line")
    ap.add_argument("--epsilon", type=float, default=0.2)
    ap.add_argument("--passes_budget", "--passes-budget", type=int, default=0)
    ap.add_argument("--p", type=int, default=0)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--output_format", "--output-format", choices=("text", "json"), default="text")
    ap.add_argument("--odd", default=None, help="odd-cut: comma-separated designated nodes")
    a = ap.parse_args(argv)
    seed = a.seed
    env = os.environ.get("SEMISTREAM_SEED")
    if env is not None and env.strip():
        seed = int(env)
    odd = tuple(int(t) for t in a.odd.split(",")) if a.odd else None
    try:
        return RunConfig(a.command, a.input, a.epsilon, a.passes_budget, a.p, seed, a.output_format, odd)
    except ValueError as exc:
        ap.error(str(exc))


def main(argv: Sequence[str] | None = None) -> int:
    cfg = parse_args(argv)
    status, report = run(cfg)
    if cfg.output_format == "json":
        print(json.dumps(report, default=lambda o: o.item() if isinstance(o, np.generic) else str(o)))
    else:
        print(_format_text(cfg, report))
    return status


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
