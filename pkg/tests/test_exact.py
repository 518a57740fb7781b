import math

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import linprog

from semistream.exact import (
    SizeGuardError,
    all_cuts,
    exact_lambda_L,
    exact_lp_by_enumeration,
    exact_mwm,
    exact_strong_connectivity,
    odd_sets,
    perturbed_bound_value,
)
from semistream.flow import CapGraph


@st.composite
def weighted_graphs(draw, max_n=9):
    n = draw(st.integers(2, max_n))
    pairs = [(a, b) for a in range(n) for b in range(a + 1, n)]
    ws = draw(st.lists(st.integers(0, 10), min_size=len(pairs), max_size=len(pairs)))
    return CapGraph(n, {p: float(w) for p, w in zip(pairs, ws)})


def test_frozen_matching_values():
    assert exact_mwm(CapGraph(3, {(0, 1): 1, (1, 2): 1, (0, 2): 1})).value == 1
    petersen = nx.petersen_graph()
    assert exact_mwm(CapGraph(10, {e: 1 for e in petersen.edges()})).value == 5
    sample = {(0, 1): 3, (1, 2): 2, (2, 3): 4, (3, 0): 1, (0, 2): 5, (3, 4): 2, (4, 5): 6, (5, 3): 1}
    res = exact_mwm(CapGraph(6, sample))
    assert res.value == 13
    assert sum(sample[e] for e in res.witness) == 13


@settings(max_examples=60, deadline=None)
@given(weighted_graphs())
def test_exact_mwm_matches_networkx(g):
    G = nx.Graph()
    G.add_nodes_from(range(g.n))
    G.add_weighted_edges_from((a, b, w) for (a, b), w in g.edges.items())
    ref = sum(G[a][b]["weight"] for a, b in nx.max_weight_matching(G))
    res = exact_mwm(g)
    assert res.value == pytest.approx(ref)
    used = [v for e in res.witness for v in e]
    assert len(used) == len(set(used))


def test_size_guards():
    with pytest.raises(SizeGuardError):
        exact_mwm(CapGraph(17))
    with pytest.raises(SizeGuardError):
        exact_strong_connectivity(CapGraph(11))


def test_odd_sets_count():
    # sizes 3 and 5 out of 7 nodes
    assert sum(1 for _ in odd_sets(7, 5)) == math.comb(7, 3) + math.comb(7, 5)


def test_all_cuts_enumerates_each_cut_once():
    cuts = list(all_cuts(5))
    assert len(cuts) == 2**4 - 1
    assert all(0 in c and len(c) < 5 for c in cuts)


def test_exact_lambda_on_triangle():
    lam, table = exact_lambda_L({(0, 1): 0.5, (1, 2): 0.5, (0, 2): 0.5}, 3, 0.1)
    assert lam == pytest.approx(1.5 / perturbed_bound_value(3, 0.1))
    assert [r["U"] for r in table] == [frozenset({0, 1, 2})]


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 3), st.integers(0, 10**6))
def test_lp_enumeration_matches_linprog(d, seed):
    rng = np.random.default_rng(seed)
    A = np.vstack([rng.uniform(0.1, 1.0, (3, d)), -np.eye(d)])
    b = np.concatenate([rng.uniform(0.5, 2.0, 3), np.zeros(d)])
    c = rng.uniform(0.0, 1.0, d)
    ref = linprog(-c, A_ub=A, b_ub=b, bounds=[(None, None)] * d, method="highs")
    res = exact_lp_by_enumeration(A, b, c)
    assert res.value == pytest.approx(-ref.fun, rel=1e-7, abs=1e-9)


def test_lp_enumeration_reports_infeasible():
    A = np.array([[1.0], [-1.0]])
    b = np.array([-1.0, -1.0])  # x <= -1 and x >= 1
    assert not exact_lp_by_enumeration(A, b, np.array([1.0])).feasible


def test_strong_connectivity_frozen():
    sample = {(0, 1): 3, (1, 2): 2, (2, 3): 4, (3, 0): 1, (0, 2): 5, (3, 4): 2, (4, 5): 6, (5, 3): 1}
    k = exact_strong_connectivity(CapGraph(6, sample))
    assert k[(0, 1)] == 5 and k[(3, 4)] == 3 and k[(4, 5)] == 6
