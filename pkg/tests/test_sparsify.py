import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from graphs import complete
from semistream.exact import all_cuts, exact_strong_connectivity
from semistream.flow import CapGraph
from semistream.sparsify import (
    PresampleConfigError,
    presample,
    sampling_probability,
    sparsify_stream,
    stoer_wagner,
    strong_components,
    strong_connectivity,
)


@st.composite
def cap_graphs(draw, max_n=8):
    n = draw(st.integers(2, max_n))
    pairs = [(a, b) for a in range(n) for b in range(a + 1, n)]
    caps = draw(st.lists(st.integers(0, 9), min_size=len(pairs), max_size=len(pairs)))
    return CapGraph(n, {p: float(c) for p, c in zip(pairs, caps)})


def dense(g: CapGraph) -> np.ndarray:
    W = np.zeros((g.n, g.n))
    for (a, b), c in g.edges.items():
        W[a, b] = W[b, a] = c
    return W


@settings(max_examples=80, deadline=None)
@given(cap_graphs())
def test_stoer_wagner_is_the_global_min_cut(g):
    value, side = stoer_wagner(g.n, list(range(g.n)), dense(g))
    brute = min(g.cut_value(c) for c in all_cuts(g.n))
    assert value == pytest.approx(brute, abs=1e-9)
    assert 0 < len(side) < g.n
    assert g.cut_value(side) == pytest.approx(value, abs=1e-9)


@settings(max_examples=60, deadline=None)
@given(cap_graphs())
def test_strong_connectivity_is_within_a_factor_two(g):
    k = strong_connectivity(g)
    exact = exact_strong_connectivity(g)
    for e in g.edges:
        assert exact[e] / 2 - 1e-9 <= k[e] <= exact[e] + 1e-9


def test_strong_components_split_at_weak_links():
    # two triangles of weight 5 joined by a single edge of weight 1
    W = np.zeros((6, 6))
    for a, b in [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)]:
        W[a, b] = W[b, a] = 5.0
    W[2, 3] = W[3, 2] = 1.0
    comps = sorted(sorted(c) for c in strong_components(list(range(6)), W, 2.0))
    assert comps == [[0, 1, 2], [3, 4, 5]]


def test_sampling_probability_is_capped_and_zero_on_zero_weight():
    p = sampling_probability(np.array([0.0, 1e-6, 5.0]), np.array([1.0, 100.0, 1.0]), 10, 0.5)
    assert p[0] == 0 and 0 < p[1] < 1 and p[2] == 1


def test_sparsifier_is_deterministic_per_seed():
    rng = np.random.default_rng(0)
    edges = complete(12)
    y = rng.uniform(0.5, 1.5, len(edges))
    us = np.array([a for a, _ in edges])
    vs = np.array([b for _, b in edges])
    a = sparsify_stream(12, us, vs, y, 0.5, seed=3, C=1.0, c0=0.05)
    b = sparsify_stream(12, us, vs, y, 0.5, seed=3, C=1.0, c0=0.05)
    assert np.array_equal(a.us, b.us) and np.array_equal(a.yhat, b.yhat)


def test_sparsifier_cuts_are_unbiased_when_sampling():
    # small c0 forces real sampling; the reweighted cut is unbiased
    rng = np.random.default_rng(1)
    edges = complete(10)
    y = rng.uniform(0.5, 1.5, len(edges))
    us = np.array([a for a, _ in edges])
    vs = np.array([b for _, b in edges])
    side = {0, 1, 2, 3}
    true = float(sum(w for (a, b), w in zip(edges, y) if (a in side) != (b in side)))
    vals, kept = [], []
    for seed in range(300):
        sp = sparsify_stream(10, us, vs, y, 0.5, seed, C=1.0, c0=0.05)
        vals.append(sp.cut_value(side))
        kept.append(sp.m)
    assert np.mean(kept) < len(edges)
    stderr = np.std(vals) / math.sqrt(len(vals))
    assert abs(np.mean(vals) - true) < 4 * stderr + 1e-9


def test_presample_guards_and_slots():
    edges = complete(8)
    us = np.array([a for a, _ in edges])
    vs = np.array([b for _, b in edges])
    y = np.ones(len(edges))
    with pytest.raises(PresampleConfigError):
        presample(8, us, vs, y, 0, 0.1, 0)
    with pytest.raises(PresampleConfigError):
        presample(8, us, vs, y, 40, 0.1, 0)  # k delta = 4 > ln 8 + delta
    bundle = presample(8, us, vs, y, 3, 0.1, 0)
    assert len(bundle.masks) == 3
    sp = bundle.sparsifier(1, 2 * y)
    mk = bundle.masks[1]
    assert np.allclose(sp.yhat, 2 * y[mk] / bundle.prob[mk])
