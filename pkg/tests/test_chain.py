from fractions import Fraction

import pytest

from shufflelab.chain import (
    ShuffleKernel, VertexRule, build_kernel, lambda_from_rule, stationary_distribution,
    uniform_feasibility, uniform_rule,
)
from shufflelab.errors import ChainUndefined, InvalidParameter
from shufflelab.shuffle import shuffle_catalogue
from shufflelab.span import ExactMatrix, SpanCertificate, verify_certificate
from shufflelab.trees import iter_encodings


@pytest.mark.parametrize("k", range(1, 5))
def test_p1_identity(k):
    K = build_kernel(2, k, 1)
    assert K.is_identity()
    rep = stationary_distribution(K)
    assert len(rep.classes) == len(K.trees)
    assert uniform_feasibility(2, k, 1).feasible


def test_chain_undefined():
    with pytest.raises(ChainUndefined) as exc:
        build_kernel(2, 1, 2)
    assert exc.value.enc == "100"
    with pytest.raises(ChainUndefined):
        uniform_feasibility(2, 1, 2)


@pytest.mark.parametrize("d,k,p", [(2, 3, 2), (2, 4, 2), (3, 3, 2), (2, 5, 3)])
def test_kernel_properties(d, k, p):
    K = build_kernel(d, k, p)
    assert K.is_stochastic()
    assert K.reversal_closed()
    rep = stationary_distribution(K)
    assert rep.verified


def test_binary_k3_p2():
    K = build_kernel(2, 3, 2)
    assert len(K.trees) == 5 and len(K.rows) == 5
    rep = stationary_distribution(K)
    assert rep.irreducible
    assert sum(rep.classes[0].values()) == 1


def test_doubly_stochastic_fixes_uniform():
    rows = ({0: Fraction(1, 2), 1: Fraction(1, 2)}, {0: Fraction(1, 2), 1: Fraction(1, 2)})
    K = ShuffleKernel(2, 2, 1, ("10100", "11000"), rows)
    rep = stationary_distribution(K)
    assert rep.is_uniform() and rep.fixes_uniform()


def test_rule_validation():
    trees = list(iter_encodings(2, 3))
    rule = uniform_rule(2, 3, 2)
    rule.validate(trees)
    bad = VertexRule(2, 3, 2, {**rule.masses, trees[0]: {(): Fraction(1)}})
    with pytest.raises(InvalidParameter):
        bad.validate(trees)


@pytest.mark.parametrize("d,k,p", [(2, 3, 2), (2, 4, 2), (3, 3, 2), (2, 4, 3)])
def test_feasibility_reverified(d, k, p):
    res = uniform_feasibility(d, k, p)
    if res.feasible:
        K = build_kernel(d, k, p, res.rule)
        assert stationary_distribution(K).fixes_uniform()
        cat = shuffle_catalogue(d, k, p)
        lam = lambda_from_rule(res.rule, cat)
        cert = SpanCertificate("member", d, k, p, lam)
        assert verify_certificate(cert, ExactMatrix.from_catalogue(cat, list(K.trees)))
    else:
        assert res.certificate
    assert res.to_json()["status"] in ("feasible", "infeasible")
