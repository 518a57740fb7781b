"""Edge streams with pass counting, and a word-level space ledger.

The semi-streaming model charges for two things: the number of sequential
passes over the edge list and the number of words kept in working memory.
``EdgeStream`` counts completed traversals; ``ResourceLedger`` keeps a
high-water mark of charged words.  The input tape itself is never charged.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Iterable, Iterator, NamedTuple, Sequence

import numpy as np


class Edge(NamedTuple):
    u: int
    v: int
    w: float


class StreamParseError(ValueError):
    """A record of the edge-list input could not be accepted."""

    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


class AccountingError(RuntimeError):
    pass


@dataclass
class ResourceLedger:
    """Pass count plus a high-water mark of stored words."""

    passes: int = 0
    peak_words: int = 0
    current_words: int = 0

    def charge(self, delta_words: int) -> "ResourceLedger":
        new = self.current_words + int(delta_words)
        if new < 0:
            raise AccountingError(
                f"space balance would go negative ({self.current_words} + {delta_words})"
            )
        self.current_words = new
        self.peak_words = max(self.peak_words, new)
        return self

    def release_all(self) -> None:
        self.current_words = 0

    def merge(self, other: "ResourceLedger") -> "ResourceLedger":
        """Fold a sub-run's ledger in: passes add up, peaks take the max."""
        self.passes += other.passes
        self.peak_words = max(self.peak_words, other.peak_words)
        return self


def charge_space(ledger: ResourceLedger, delta_words: int) -> ResourceLedger:
    return ledger.charge(delta_words)


class EdgeStream:
    """A replayable, read-only edge list.

    Every full traversal through :meth:`next_pass` or :meth:`read_pass`
    increments ``pass_count``; abandoned traversals do not.  When
    ``order_seed`` is given the edges are permuted once at construction, so
    every replay still sees the same sequence.
    """

    def __init__(
        self,
        n: int,
        us: Sequence[int],
        vs: Sequence[int],
        ws: Sequence[float],
        order_seed: int | None = None,
        labels: Sequence[int] | None = None,
    ):
        us = np.asarray(us, dtype=np.int64)
        vs = np.asarray(vs, dtype=np.int64)
        ws = np.asarray(ws, dtype=np.float64)
        if not (len(us) == len(vs) == len(ws)):
            raise ValueError("edge arrays differ in length")
        if len(us):
            if np.any(us == vs):
                raise ValueError("self-loops are not allowed")
            if np.any(ws < 0):
                raise ValueError("edge weights must be nonnegative")
            if min(us.min(), vs.min()) < 0 or max(us.max(), vs.max()) >= n:
                raise ValueError("node id out of range")
            lo, hi = np.minimum(us, vs), np.maximum(us, vs)
            keys = lo * max(n, 1) + hi
            if len(np.unique(keys)) != len(keys):
                raise ValueError("duplicate edge")
        if order_seed is not None:
            perm = np.random.default_rng(order_seed).permutation(len(us))
            us, vs, ws = us[perm], vs[perm], ws[perm]
        self.n = int(n)
        self._u, self._v, self._w = us, vs, ws
        self._u.setflags(write=False)
        self._v.setflags(write=False)
        self._w.setflags(write=False)
        self.order_seed = order_seed
        self.labels = None if labels is None else list(labels)
        self.pass_count = 0

    @property
    def m(self) -> int:
        return len(self._u)

    def next_pass(self) -> Iterator[Edge]:
        for a, b, c in zip(self._u.tolist(), self._v.tolist(), self._w.tolist()):
            yield Edge(a, b, c)
        self.pass_count += 1

    def read_pass(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """One full pass, delivered as read-only (u, v, w) arrays."""
        self.pass_count += 1
        return self._u, self._v, self._w

    def peek_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Arrays without charging a pass; for tests and exact oracles only."""
        return self._u, self._v, self._w

    def with_weights(self, ws: Sequence[float], keep: np.ndarray | None = None) -> "EdgeStream":
        """A derived stream over the same (or a subset of the) edges, in the same order."""
        us, vs = self._u, self._v
        ws = np.asarray(ws, dtype=np.float64)
        if keep is not None:
            if len(ws) == len(us):
                ws = ws[keep]
            us, vs = us[keep], vs[keep]
        return EdgeStream(self.n, us, vs, ws, labels=self.labels)

    def edges(self) -> list[Edge]:
        return [Edge(a, b, c) for a, b, c in zip(self._u.tolist(), self._v.tolist(), self._w.tolist())]


def parse_edge_list(text: str) -> tuple[list[int], list[int], list[float]]:
    us: list[int] = []
    vs: list[int] = []
    ws: list[float] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) not in (2, 3):
            raise StreamParseError(lineno, f"expected 'u v [w]', got {raw.strip()!r}")
        try:
            a, b = int(parts[0]), int(parts[1])
            w = float(parts[2]) if len(parts) == 3 else 1.0
        except ValueError:
            raise StreamParseError(lineno, f"cannot parse {raw.strip()!r}") from None
        if a < 0 or b < 0:
            raise StreamParseError(lineno, "node ids must be nonnegative")
        if a == b:
            raise StreamParseError(lineno, f"self-loop on node {a}")
        if not np.isfinite(w) or w < 0:
            raise StreamParseError(lineno, f"weight must be finite and nonnegative, got {w}")
        us.append(a)
        vs.append(b)
        ws.append(w)
    return us, vs, ws


def open_stream(
    source: str | os.PathLike | Iterable[tuple],
    *,
    remap: bool = False,
    order_seed: int | None = None,
) -> EdgeStream:
    """Build a stream from a path, edge-list text, or an iterable of tuples.

    Without ``remap`` the node count is ``1 + max id``.  With ``remap`` the
    ids seen are compressed to ``0..n-1`` in sorted order and the original
    ids are kept in ``stream.labels``.
    """
    if isinstance(source, os.PathLike) or (
        isinstance(source, str) and "\n" not in source and os.path.exists(source)
    ):
        with open(source) as fh:
            us, vs, ws = parse_edge_list(fh.read())
    elif isinstance(source, str):
        us, vs, ws = parse_edge_list(source)
    else:
        us, vs, ws = [], [], []
        for rec in source:
            a, b = int(rec[0]), int(rec[1])
            w = float(rec[2]) if len(rec) > 2 else 1.0
            if a == b:
                raise ValueError(f"self-loop on node {a}")
            us.append(a)
            vs.append(b)
            ws.append(w)
    labels = None
    if remap and us:
        labels = sorted(set(us) | set(vs))
        index = {lab: i for i, lab in enumerate(labels)}
        us = [index[a] for a in us]
        vs = [index[b] for b in vs]
        n = len(labels)
    else:
        n = 1 + max(max(us), max(vs)) if us else 0
    try:
        return EdgeStream(n, us, vs, ws, order_seed=order_seed, labels=labels)
    except ValueError as exc:
        raise StreamParseError(0, str(exc)) from None


@dataclass
class Graph:
    """A small in-memory weighted graph, used off the streaming hot path."""

    n: int
    edges: dict[tuple[int, int], float] = field(default_factory=dict)

    @staticmethod
    def from_stream(stream: EdgeStream) -> "Graph":
        u, v, w = stream.peek_arrays()
        g = Graph(stream.n)
        for a, b, c in zip(u.tolist(), v.tolist(), w.tolist()):
            g.edges[(min(a, b), max(a, b))] = c
        return g

    def to_stream(self, order_seed: int | None = None) -> EdgeStream:
        items = sorted(self.edges.items())
        return EdgeStream(
            self.n,
            [e[0][0] for e in items],
            [e[0][1] for e in items],
            [e[1] for e in items],
            order_seed=order_seed,
        )
