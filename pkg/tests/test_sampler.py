import math
import random
from collections import Counter
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from shufflelab.errors import InvalidParameter
from shufflelab.sampler import (
    CAP_EXCEEDED, OffspringDistribution, SplitDistribution, estimate_Q, exact_Q, forest_count,
    is_p_perfect, kappa, max_perfect_length, perfect_bound, perfect_runs, rootchildren_exact,
    rootchildren_leaf_rate, sample_encoding, sample_gw_multitype, sample_split, sample_uniform,
    within_perfect_bound,
)
from shufflelab.trees import CatalanTree, catalan_number, iter_encodings


def brute_perfect(tree: CatalanTree, p: int) -> bool:
    """Some vertex at depth >= p whose last p ancestors-path siblings are all leaves."""
    parent = tree.parent
    for w, depth in enumerate(tree.depths):
        if depth < p:
            continue
        v, ok = w, True
        for _ in range(p):
            u = parent[v]
            ok &= all(tree.is_leaf(s) for s in tree.children(u) if s != v)
            v = u
        if ok:
            return True
    return False


def test_split_law_is_exact():
    for d, k in ((2, 5), (3, 4)):
        masses = SplitDistribution(d, k).masses()
        assert sum(masses.values()) == 1
        for comp, m in masses.items():
            prod = math.prod(catalan_number(d, x) for x in comp)
            assert m == Fraction(prod, catalan_number(d, k))


def test_forest_count_matches_convolution():
    # r trees with j internal vertices in total, by direct convolution
    d, r = 3, 4
    c = [catalan_number(d, j) for j in range(8)]
    conv = [1] + [0] * 7
    for _ in range(r):
        conv = [sum(conv[a] * c[b - a] for a in range(b + 1)) for b in range(8)]
    assert [forest_count(d, r, j) for j in range(8)] == conv


def test_sample_split_sums():
    rng = random.Random(3)
    for _ in range(200):
        comp = sample_split(3, 7, rng)
        assert len(comp) == 3 and sum(comp) == 6


def test_uniformity_small():
    rng = random.Random(5)
    counts = Counter(sample_encoding(2, 3, rng) for _ in range(5000))
    assert set(counts) == set(iter_encodings(2, 3))
    assert all(abs(c - 1000) < 150 for c in counts.values())


def test_large_tree_sampling():
    t = sample_uniform(2, 5000, seed=1)
    assert t.k == 5000


@given(st.integers(2, 3), st.integers(0, 7), st.integers(1, 4))
def test_perfect_routes_agree(d, k, p):
    for enc in list(iter_encodings(d, k))[:40]:
        t = CatalanTree(d, enc)
        perfect, witness = is_p_perfect(t, p)
        assert perfect == brute_perfect(t, p)
        assert (max_perfect_length(enc, d) >= p) == perfect
        assert max(perfect_runs(t), default=0) == max_perfect_length(t)
        if perfect:
            assert len(witness) >= p and t.has_code(witness)


def test_caterpillar_is_one_perfect_only_via_bottom():
    t = CatalanTree.caterpillar(2, 4)
    assert is_p_perfect(t, 1)[0]
    assert is_p_perfect(t, 4)[0]


def test_exact_Q_values():
    # fractions of trees that are not p-perfect, checked against the brute predicate
    for d, p, k in ((2, 2, 6), (3, 2, 5), (2, 3, 7)):
        trees = [CatalanTree(d, e) for e in iter_encodings(d, k)]
        bad = sum(not brute_perfect(t, p) for t in trees)
        assert exact_Q(d, p, k) == Fraction(bad, len(trees))
    assert exact_Q(2, 2, 6) == Fraction(2, 33)
    assert exact_Q(2, 1, 2) == 0


def test_perfect_bound_formula():
    assert kappa(2, 3) == 1 / (2 * 2 * 9 * math.e ** 2)
    assert perfect_bound(2, 2, 1) == 1
    assert within_perfect_bound(Fraction(1), 2, 2, 2)
    assert not within_perfect_bound(Fraction(1), 2, 2, 10)


def test_estimate_independent_of_workers():
    a = estimate_Q(3, 2, 30, 9000, seed=7, workers=1)
    b = estimate_Q(3, 2, 30, 9000, seed=7, workers=2)
    assert a == b


def test_rootchildren():
    assert rootchildren_exact(2, 1) == 1
    assert rootchildren_exact(2, 3) == Fraction(2 * 2, 5)
    rate = rootchildren_leaf_rate(3, 60, 20000, seed=2)
    sigma = math.sqrt(float(rate.exact) * (1 - float(rate.exact)) / 20000)
    assert abs(float(rate.empirical - rate.exact)) < 4 * sigma


def test_offspring_validation():
    with pytest.raises(InvalidParameter):
        OffspringDistribution(1, ({(0,): Fraction(1, 2)},))
    with pytest.raises(InvalidParameter):
        OffspringDistribution.from_subprobability(1, {(1, (0,)): Fraction(1, 2)})
    off = OffspringDistribution.from_subprobability(2, {(1, (1, 1)): Fraction(1, 4)})
    assert off.leaf_mass(1) == Fraction(3, 4) and off.leaf_mass(2) == 1
    assert OffspringDistribution.from_json(off.to_json()).rows == off.rows


def test_gw_single_leaf_and_cap():
    leaf = OffspringDistribution(1, ({(0,): Fraction(1)},))
    t = sample_gw_multitype(leaf, 1, seed=0)
    assert t.leaftype == (1,) and t.arity == (0,)
    boom = OffspringDistribution(1, ({(2,): Fraction(1)},))
    assert sample_gw_multitype(boom, 1, seed=0, vertex_cap=50) is CAP_EXCEEDED


def test_gw_tree_is_consistent():
    off = OffspringDistribution.from_subprobability(2, {(1, (1, 1)): Fraction(1, 3), (2, (2, 0)): Fraction(1, 4)})
    rng = random.Random(9)
    for _ in range(200):
        t = sample_gw_multitype(off, 1, rng)
        if t is CAP_EXCEEDED:
            continue
        assert sum(t.arity) == len(t.arity) - 1
        assert t.types[0] == 1
