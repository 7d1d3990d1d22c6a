import json
import math

import pytest
from hypothesis import given, strategies as st

from shufflelab.errors import CapExceeded, InvalidParameter, MalformedEncoding
from shufflelab.sampler import sample_uniform
from shufflelab.trees import (
    CatalanTree, LabelledTree, cached_catalan_table, catalan_by_convolution, catalan_number,
    catalan_table, enumerate_trees, iter_encodings, stirling_ratio, validate_encoding,
)

# Frozen from the binomial closed form with exact integers.
CATALAN = {
    2: [1, 1, 2, 5, 14, 42, 132, 429, 1430, 4862],
    3: [1, 1, 3, 12, 55, 273, 1428, 7752],
    4: [1, 1, 4, 22, 140, 969, 7084],
}


@pytest.mark.parametrize("d", sorted(CATALAN))
def test_catalan_values(d):
    values = CATALAN[d]
    assert [catalan_number(d, k) for k in range(len(values))] == values
    assert catalan_by_convolution(d, len(values) - 1) == values
    assert catalan_table(d, len(values) - 1) == values


def test_catalan_large_k_matches_closed_form():
    for d in (2, 5):
        assert catalan_number(d, 300) == math.comb(d * 300, 300) // ((d - 1) * 300 + 1)


def test_stirling_ratio_tends_to_one():
    assert abs(stirling_ratio(3, 4000) - 1) < 1e-3


@pytest.mark.parametrize("d,k", [(2, 0), (2, 5), (3, 4), (4, 3)])
def test_enumeration_count_order_and_validity(d, k):
    encs = list(iter_encodings(d, k))
    assert len(encs) == len(set(encs)) == catalan_number(d, k)
    assert encs == sorted(encs)
    assert all(validate_encoding(e, d) == k for e in encs)
    assert all(len(e) == d * k + 1 for e in encs)


def test_binary_k2_encodings():
    assert list(iter_encodings(2, 2)) == ["10100", "11000"]


def test_cap_exceeded():
    with pytest.raises(CapExceeded) as exc:
        enumerate_trees(2, 10, cap=100)
    assert exc.value.requested == 16796


@pytest.mark.parametrize("bad", ["", "1", "11", "00", "102", "1000"])
def test_malformed(bad):
    with pytest.raises(MalformedEncoding):
        CatalanTree.parse(bad, 2)


def test_invalid_degree():
    with pytest.raises(InvalidParameter):
        catalan_number(1, 3)


def test_profile_of_caterpillar():
    t = CatalanTree.caterpillar(2, 3)
    assert t.profile().counts == (1, 2, 2, 2)
    assert t.height == 3
    assert t.k == 3 and t.size == 7


def test_codes_and_children():
    t = CatalanTree(2, "11000")
    assert t.codes == ((), (1,), (1, 1), (1, 2), (2,))
    assert t.children(0) == (1, 4)
    assert t.index_of((1, 2)) == 3
    assert t.subtree_enc(1) == "100"


def test_labelled_tree_roundtrip():
    lt = LabelledTree(CatalanTree(2, "10100"), (1, 2, 1, 2, 2), 2)
    assert lt.leaftype == (0, 3)
    assert lt.mu(0) == (1, 1)  # children are vertex 1 (type 2) and vertex 2 (type 1)
    again = LabelledTree.parse(lt.serialize(), 2, 2)
    assert again == lt
    assert LabelledTree.from_json(lt.to_json()) == lt


@given(st.integers(2, 4), st.integers(0, 40), st.integers(0, 10**6))
def test_random_tree_roundtrip(d, k, seed):
    t = sample_uniform(d, k, seed)
    assert validate_encoding(t.enc, d) == k
    assert CatalanTree.from_json(json.loads(json.dumps(t.to_json()))) == t
    assert len(t.codes) == t.size == d * k + 1
    assert t.profile().total == t.size
    assert all(t.index_of(c) == i for i, c in enumerate(t.codes))


def test_cached_table(tmp_path, monkeypatch):
    monkeypatch.setenv("SHUFFLELAB_CACHE_DIR", str(tmp_path))
    assert cached_catalan_table(3, 7) == CATALAN[3]
    path = tmp_path / "catalan-d3.json"
    assert path.exists()
    assert cached_catalan_table(3, 5) == CATALAN[3][:6]
    # a corrupted file is ignored and rewritten
    path.write_text(json.dumps({"values": ["1", "1", "4"]}))
    assert cached_catalan_table(3, 4) == CATALAN[3][:5]
