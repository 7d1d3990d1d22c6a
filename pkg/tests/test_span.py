import json
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from shufflelab.sampler import exact_Q, is_p_perfect, sample_uniform
from shufflelab.span import (
    ExactMatrix, SpanCertificate, approximation_norms, approximation_norms_sampled, indicator_matrix,
    phi_product, psi_bound, span_decomposition_of_phi_star, span_dimension, span_membership,
    telescoping_sum, verify_certificate, width_functions,
)
from shufflelab.trees import CatalanTree, iter_encodings


@pytest.mark.parametrize("k", range(1, 6))
def test_p1_membership(k):
    cert = span_membership(2, k, 1)
    assert cert.is_member
    assert verify_certificate(cert, indicator_matrix(2, k, 1))


def test_empty_class_set():
    cert = span_membership(2, 2, 5)
    assert cert.status == "non-member"
    assert cert.witness == {"10100": 1, "11000": 1}
    assert span_dimension(2, 1, 2) == (0, 1)


def test_dimensions():
    assert span_dimension(2, 2, 1) == (2, 2)
    assert span_dimension(2, 7, 3) == (429, 429)


def test_non_member_witness():
    cert = span_membership(2, 5, 3)
    assert not cert.is_member
    A = indicator_matrix(2, 5, 3)
    assert verify_certificate(cert, A)
    # tampering with the witness breaks it
    enc = next(iter(cert.witness))
    bad = SpanCertificate("non-member", 2, 5, 3, {}, {**cert.witness, enc: cert.witness[enc] + 1})
    assert not verify_certificate(bad, A)


def test_certificate_json():
    doc = json.loads(json.dumps(span_membership(2, 3, 2).to_json()))
    assert doc["status"] == "member"
    assert all(set(e) == {"key", "num", "den"} for e in doc["lambda"])


def test_matrix_columns():
    A = indicator_matrix(2, 3, 2)
    assert A.shape == (5, 8)
    assert isinstance(A, ExactMatrix)
    assert all(rows == sorted(rows) for rows in A.columns)


def test_caterpillar_phi():
    t = CatalanTree.caterpillar(2, 3)
    rec = width_functions(t, 2)
    assert rec.phi == Fraction(34, 49)
    assert rec.psi == Fraction(4, 7)  # generations 2 and 3 hold 2 + 2 vertices
    assert rec.phi_star == 1 and rec.perfect


@given(st.integers(2, 3), st.integers(0, 60), st.integers(1, 3), st.integers(0, 10**6))
def test_width_invariants(d, k, p, seed):
    t = sample_uniform(d, k, seed)
    rec = width_functions(t, p)
    prof = t.profile()
    assert telescoping_sum(prof, p) == rec.phi == 1 - phi_product(prof, p)
    assert abs(1 - rec.psi) <= psi_bound(d, p, k)
    if is_p_perfect(t, p)[0]:
        assert rec.phi_star == 1
    else:
        assert rec.phi_star == rec.phi
    assert 0 <= rec.phi <= 1


def test_norms():
    rep = approximation_norms(2, 2, 1, "phi_star")
    assert rep.l1 == 0 and rep.linf == 0
    for k in range(1, 6):
        sup = max(abs(1 - width_functions(CatalanTree(2, e), 2).phi) for e in iter_encodings(2, k))
        assert approximation_norms(2, k, 2, "phi_star").l1 <= exact_Q(2, 2, k) * sup
    with pytest.raises(ValueError):
        approximation_norms(2, 2, 1, "nope")


def test_sampled_norms_deterministic():
    a = approximation_norms_sampled(2, 80, 2, "phi", 300, seed=3)
    b = approximation_norms_sampled(2, 80, 2, "phi", 300, seed=3, workers=2)
    assert a == b and 0 <= a.mean <= 1


@pytest.mark.parametrize("d,k,p", [(2, 3, 2), (2, 4, 2), (2, 2, 1), (3, 3, 2), (2, 5, 3)])
def test_phi_star_decomposition(d, k, p):
    dec = span_decomposition_of_phi_star(d, k, p)
    assert dec.exact
    assert len(dec.residual) == len(list(iter_encodings(d, k)))
