import pytest
from hypothesis import given, strategies as st

from shufflelab.errors import HeightTooSmall
from shufflelab.sampler import sample_uniform
from shufflelab.shuffle import (
    AncestralPath, brute_force_orbit, eligible_vertices, labelled_shuffle_class,
    multinomial_orbit_size, shuffle_catalogue, shuffle_class,
)
from shufflelab.trees import CatalanTree, LabelledTree, iter_encodings


def test_orbit_size_formula():
    assert multinomial_orbit_size(["0", "0", "100"]) == 3
    assert multinomial_orbit_size(["0", "100"]) == 2
    assert multinomial_orbit_size(["0", "0"]) == 1


def test_height_too_small():
    with pytest.raises(HeightTooSmall):
        AncestralPath.ending_at(CatalanTree(2, "100"), (1,), 2)


def test_binary_k3_p2_catalogue():
    # derived by hand: 8 distinct member sets over the 5 trees
    cat = shuffle_catalogue(2, 3, 2)
    assert len(cat.classes) == 8
    covered = {m for c in cat.classes.values() for m in c.members}
    assert covered == set(iter_encodings(2, 3))


def test_p1_classes_are_singletons():
    cat = shuffle_catalogue(2, 4, 1)
    assert len(cat.classes) == 14
    assert all(c.size == 1 for c in cat.classes.values())


def test_class_through_vertex():
    t = CatalanTree(2, "1010100")  # right comb: spine through second children
    cls = shuffle_class(t, (2, 2), 2)
    # the two slots, (1) and (2,1), both hold leaves
    assert cls.members == ("1010100",)
    cls = shuffle_class(t, (2,), 1)
    assert set(cls.members) == {"1010100"}


@given(st.integers(2, 3), st.integers(2, 9), st.integers(1, 3), st.integers(0, 10**6))
def test_class_equals_brute_orbit(d, k, p, seed):
    t = sample_uniform(d, k, seed)
    elig = eligible_vertices(t, p)
    if not elig:
        return
    v = t.codes[elig[seed % len(elig)]]
    cls = shuffle_class(t, v, p)
    assert set(cls.members) == brute_force_orbit(t, v, p)
    assert cls.size == cls.expected_size()
    assert t.enc in cls


@pytest.mark.parametrize("d,k,p", [(2, 4, 2), (3, 3, 2), (2, 5, 3)])
def test_catalogue_incidence_is_symmetric(d, k, p):
    cat = shuffle_catalogue(d, k, p)
    seen = {}
    for (enc, code), key in cat.incidence.items():
        assert enc in cat.classes[key]
        seen.setdefault(key, set()).add(enc)
    # every member of every class reaches that class through one of its own vertices
    for key, cls in cat.classes.items():
        assert seen[key] == set(cls.members)


def test_labelled_class_size():
    lt = LabelledTree(CatalanTree(2, "1101000"), (1, 2, 1, 2, 1, 2, 2), 2)
    lc = labelled_shuffle_class(lt, (1, 1), 2)
    assert lc.size == lc.expected_size()
    assert lt.serialize() in lc.members
