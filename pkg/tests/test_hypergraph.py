import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qksat import hypergraph as hg
from qksat.hypergraph import Hypergraph

seeds = st.integers(0, 2**32 - 1)


def test_hypergraph_validation():
    with pytest.raises(ValueError):
        Hypergraph(4, 2, frozenset({(0, 4)}))
    with pytest.raises(ValueError):
        Hypergraph(4, 2, frozenset({(0, 1, 2)}))
    G = Hypergraph.complete(6, 3)
    assert len(G) == 20 and G.density == 1
    assert list(G.degrees()) == [10] * 6


def test_random_hypergraph_is_seeded():
    assert Hypergraph.random(8, 3, 0.4, seed=5) == Hypergraph.random(8, 3, 0.4, seed=5)


@given(st.integers(0, 40), st.integers(1, 6))
def test_binom_real_matches_math_comb(x, c):
    assert hg.binom_real(x, c) == math.comb(x, c)


def test_binom_real_on_fractions():
    assert hg.binom_real(Fraction(5, 2), 2) == Fraction(5, 2) * Fraction(3, 2) / 2


@given(st.fractions(Fraction(1, 1000), 1), st.integers(1, 5))
@settings(max_examples=50, deadline=None)
def test_root_interval_encloses_root(q, c):
    iv = hg.root_interval(q, c)
    assert iv.lo <= iv.hi
    assert iv.lo**c <= q <= iv.hi**c
    assert iv.hi - iv.lo < Fraction(1, 10**25)


def test_exact_roots_are_points():
    iv = hg.root_interval(Fraction(8, 27), 3)
    assert iv.lo == iv.hi == Fraction(2, 3)


def test_binomial_scaling_failures_are_confined_to_low_density():
    fails = [(theta, x, c) for theta, x, c, res in hg.binom_scaling_grid() if not res.holds]
    assert len(fails) == 18
    assert all(theta <= Fraction(1, 10) for theta, _, _ in fails)


def test_binomial_scaling_counterexample_at_low_density():
    # theta^(1/c) x is below c - 1, so C(theta^(1/c) x, c) vanishes or turns negative
    res = hg.check_binom_scaling(Fraction(1, 20), 3, 3)
    assert not res.holds


def bitmask_shadow(G: Hypergraph, k: int) -> set:
    out = set()
    for e in G.edges:
        mask = sum(1 << v for v in e)
        sub = mask
        while sub:
            if bin(sub).count("1") == k:
                out.add(tuple(v for v in range(G.n) if sub >> v & 1))
            sub = (sub - 1) & mask
    return out


@given(seeds, st.integers(2, 9), st.integers(1, 5), st.floats(0, 1))
@settings(max_examples=40, deadline=None)
def test_shadow_matches_bitmask_oracle(seed, n, l, p):
    l = min(l, n)
    G = Hypergraph.random(n, l, p, seed=seed)
    for k in range(1, l + 1):
        assert set(hg.shadow(G, k).edges) == bitmask_shadow(G, k)


@given(seeds, st.integers(3, 9), st.integers(2, 5), st.floats(0.01, 1))
@settings(max_examples=40, deadline=None)
def test_shadow_density_bound(seed, n, l, p):
    l = min(l, n)
    G = Hypergraph.random(n, l, p, seed=seed)
    for k in range(1, l + 1):
        rep = hg.check_shadow_density(G, k)
        assert rep.satisfied


def test_shadow_density_examples():
    rep = hg.check_shadow_density(Hypergraph.complete(8, 4), 2)
    assert rep.theta == 1 and rep.satisfied
    rep = hg.check_shadow_density(Hypergraph(6, 2, frozenset()), 2)
    assert rep.theta == 0 and rep.bound == 0 and rep.satisfied


@given(seeds, st.integers(5, 9), st.sampled_from(["adversarial-min", "random"]))
@settings(max_examples=25, deadline=None)
def test_partial_shadow_picks_enough_per_edge(seed, n, chooser):
    l, k = 4, 2
    G = Hypergraph.random(n, l, 0.3, seed=seed)
    omega = Fraction(1, 2)
    P = hg.partial_shadow(G, k, omega, chooser, seed=seed)
    assert set(P.edges) <= set(hg.shadow(G, k).edges)
    need = math.floor(omega * math.comb(l, k))
    for e in G.edges:
        inside = sum(1 for s in itertools.combinations(e, k) if s in P.edges)
        assert inside >= need


def test_partial_shadow_shape_admissibility():
    shape = hg.partial_shadow_shape(12, 4, 2)
    assert shape is not None and shape.c == 1
    assert hg.partial_shadow_shape(12, 2, 1) is None
    rep = hg.check_partial_shadow_density(Hypergraph.complete(12, 4), 216)
    assert rep.satisfied
    with pytest.raises(ValueError):
        hg.check_partial_shadow_density(Hypergraph.random(12, 4, 0.05, seed=1), 216)


def test_odd_construction_examples():
    fam = hg.OddFamily(5)
    assert len(fam) == 10
    rep = hg.odd_construction(5, {s: 1 for s in fam.subsets})
    assert rep.theta == 1 and rep.satisfied
    theta, choice = hg.odd_exhaustive(5)
    assert theta == Fraction(3, 5) >= Fraction(1, 2)
    assert hg.odd_construction(5, dict(zip(fam.subsets, choice))).theta == theta


def test_odd_covered_matches_explicit_graph():
    rng = np.random.default_rng(3)
    fam = hg.OddFamily(7)
    for _ in range(5):
        flags = rng.random(len(fam)) < 0.7
        choices = {s: 2 if f else 1 for s, f in zip(fam.subsets, flags)}
        G = hg.odd_construction_graph(7, choices)
        assert Fraction(len(G), len(fam)) == fam.densities(flags)[0]


@pytest.mark.parametrize("n", [7, 9])
def test_odd_random_configurations(n):
    assert min(hg.odd_random(n, 500, seed=n)) >= Fraction(1, 2)


def test_degree_concentration_complete_graph():
    est = hg.degree_concentration(Hypergraph.complete(10, 5), 0.3, 1000, seed=0)
    assert est.tail == 0 and est.ok


def test_degree_concentration_random_dense():
    est = hg.degree_concentration_random(60, 30, 0.5, 0.3, 10_000, seed=1)
    assert est.ok


def test_threshold_hypergraph_exact_counts():
    T = hg.ThresholdHypergraph(9, 3, 4, 2)
    edges = [e for e in itertools.combinations(range(9), 3) if sum(v < 4 for v in e) >= 2]
    assert T.num_edges == len(edges)
    deg = [sum(v in e for e in edges) for v in range(9)]
    assert list(T.degrees()) == deg


def test_upper_tail_counterexample_for_near_complete_graphs():
    # every block vertex has tau = 1 while theta < 1, and the threshold
    # (1 - theta)(1 - alpha) is tiny, so 13/60 of the vertices deviate
    T = hg.ThresholdHypergraph(60, 30, 13, 1)
    est = hg.degree_concentration(T, 0.2, 10_000, seed=1)
    assert est.tail > est.alpha + 3 * est.sigma
