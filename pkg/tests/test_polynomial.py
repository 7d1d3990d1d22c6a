from fractions import Fraction

from hypothesis import given, strategies as st

from shufflelab.polynomial import Poly, TruncatedSeriesMap, monomials_of_degree

coeff = st.fractions(min_value=-3, max_value=3, max_denominator=4)


def polys(n, max_deg=3):
    monos = [m for d in range(max_deg + 1) for m in monomials_of_degree(n, d)]
    return st.dictionaries(st.sampled_from(monos), coeff, max_size=5).map(lambda t: Poly(n, t))


@given(polys(2), polys(2), polys(2))
def test_ring_laws(a, b, c):
    assert a * (b + c) == a * b + a * c
    assert (a * b) * c == a * (b * c)
    assert a - a == Poly(2)


@given(polys(2), polys(2))
def test_product_rule(a, b):
    for j in (1, 2):
        assert (a * b).diff(j) == a.diff(j) * b + a * b.diff(j)


@given(polys(2), polys(2), polys(2))
def test_compose_is_a_homomorphism(a, b, s):
    subs = [s, Poly.var(2, 1)]
    assert (a * b).compose(subs) == a.compose(subs) * b.compose(subs)


def test_truncation_and_json():
    x = Poly.var(1, 1)
    F = TruncatedSeriesMap(1, 3, (x + x * x * x * x,))
    assert F.components[0] == x
    G = TruncatedSeriesMap(1, 4, (x - (x * x).scale(Fraction(1, 3)),))
    assert TruncatedSeriesMap.from_json(G.to_json()) == G


def test_monomial_listing():
    assert list(monomials_of_degree(2, 2)) == [(2, 0), (1, 1), (0, 2)]
    assert len(list(monomials_of_degree(3, 3))) == 10
