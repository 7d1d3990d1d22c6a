import random
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from shufflelab.errors import InvalidDegree, SingularLinearPart
from shufflelab.inversion import (
    coefficient_bound, coefficient_bound_report, inverse_coefficient, inverse_series,
    leaf_law_exact, leaf_law_table, map_from_table, truncated_inverse, verify_gw_leaf_law,
)
from shufflelab.polynomial import Poly, TruncatedSeriesMap
from shufflelab.sampler import OffspringDistribution
from shufflelab.verify import catalan_table_H, nilpotent_example, random_table
from shufflelab.weights import CoefficientTable, multi_indices


def test_catalan_coefficients():
    H = catalan_table_H()
    assert [inverse_coefficient(H, 1, (k + 1,)) for k in range(5)] == [1, 1, 2, 5, 14]
    G = truncated_inverse(map_from_table(H, 5))
    assert [G.coefficient(1, (m,)) for m in range(1, 6)] == [1, 1, 2, 5, 14]


def test_nilpotent_example_inverse():
    H = nilpotent_example()
    assert inverse_coefficient(H, 1, (0, 2)) == 1
    assert all(inverse_coefficient(H, i, a) == 0 for a in multi_indices(2, 3) for i in (1, 2))
    G = truncated_inverse(map_from_table(H, 6))
    x, y = Poly.var(2, 1), Poly.var(2, 2)
    assert G == TruncatedSeriesMap(2, 6, (x + y.mul(y), y))


def test_zero_table():
    H = CoefficientTable(2, 3)
    assert inverse_series(H, 5) == TruncatedSeriesMap.identity(2, 5)


def test_linear_terms():
    F = TruncatedSeriesMap(1, 4, (Poly(1, {(1,): Fraction(1, 2)}),))
    assert truncated_inverse(F) == TruncatedSeriesMap(1, 4, (Poly(1, {(1,): 2}),))
    with pytest.raises(SingularLinearPart):
        truncated_inverse(TruncatedSeriesMap(1, 3, (Poly(1, {(2,): 1}),)))


def test_invalid_degree():
    with pytest.raises(InvalidDegree):
        inverse_coefficient(CoefficientTable(1, 3), 1, (2,))


@given(st.integers(0, 10**6), st.integers(1, 2), st.integers(2, 3))
def test_oracle_equivalence(seed, n, d):
    H = random_table(random.Random(seed), n, d)
    D = 2 * d - 1
    G = truncated_inverse(map_from_table(H, D))
    assert inverse_series(H, D) == G
    # two-sided and involutive
    F = map_from_table(H, D)
    assert F.compose(G) == TruncatedSeriesMap.identity(n, D)
    assert G.compose(F) == TruncatedSeriesMap.identity(n, D)
    assert truncated_inverse(G) == F


@given(st.integers(0, 10**6))
def test_triangular_inverse_is_polynomial(seed):
    # H_1 depends on x_2 only, H_2 = 0: F^{-1} = (x + H_1(y), y) exactly
    H = random_table(random.Random(seed), 2, 2, 0.9, triangular=True)
    D = 6
    G = truncated_inverse(map_from_table(H, D))
    assert all(c.degree() <= 2 for c in G.components)
    for m in range(3, D + 1):
        assert all(inverse_coefficient(H, i, a) == 0 for a in multi_indices(2, m) for i in (1, 2))


def test_bound_sharp_at_constant_table():
    H = CoefficientTable.constant(2, 2, 2)
    for alpha in multi_indices(2, 3):
        rep = coefficient_bound_report(H, 1, alpha)
        assert rep.sharp and rep.holds
    rep = coefficient_bound_report(nilpotent_example(), 1, (2, 1), Fraction(1, 10))
    assert rep.g == 0 and rep.holds and rep.refined == rep.bound / 10
    assert coefficient_bound(CoefficientTable(1, 2), (3,)) == 0


def test_leaf_law_examples():
    off = OffspringDistribution.from_subprobability(1, {(1, (2,)): Fraction(1, 3)})
    assert leaf_law_exact(off, 1, (3,)) == 2 * Fraction(1, 3) ** 2 * Fraction(2, 3) ** 3
    leaf = OffspringDistribution(1, ({(0,): Fraction(1)},))
    assert leaf_law_exact(leaf, 1, (1,)) == 1
    table = leaf_law_table(off, 1, 9)
    # m leaves means m-1 internal vertices: Catalan(m-1) * (1/3)^(m-1) * (2/3)^m
    assert table[(1,)] == Fraction(2, 3) and table[(2,)] == Fraction(4, 27)
    assert sum(table.values()) < 1


def test_supercritical_mass_deficit():
    off = OffspringDistribution.from_subprobability(1, {(1, (2,)): Fraction(2, 3)})
    rep = verify_gw_leaf_law(off, 1, (1,), 2000, seed=4, vertex_cap=2000)
    assert rep.capped > 0
    assert abs(rep.z) < 4
