from fractions import Fraction

import sympy
from hypothesis import given, strategies as st

from shufflelab.linalg import check_farkas, dense_inverse, phase_one, rank, row_reduce

small = st.integers(-3, 3)
matrices = st.integers(1, 6).flatmap(lambda r: st.integers(1, 6).flatmap(
    lambda c: st.lists(st.lists(small, min_size=c, max_size=c), min_size=r, max_size=r)))


def sparse(M):
    return [{j: v for j, v in enumerate(row) if v} for row in M]


@given(matrices)
def test_rank_matches_sympy(M):
    assert rank(sparse(M), len(M[0])) == sympy.Matrix(M).rank()


@given(matrices, st.lists(small, min_size=6, max_size=6))
def test_solution_solves(M, b):
    ncols = len(M[0])
    rows = sparse(M)
    for r, row in enumerate(rows):
        if b[r]:
            row[ncols] = b[r]
    red = row_reduce(rows, range(ncols), track=True)
    sol = red.solution(ncols)
    consistent = sympy.Matrix(M).rank() == sympy.Matrix(M).row_join(sympy.Matrix(b[: len(M)])).rank()
    assert (sol is not None) == consistent
    if sol is not None:
        for r, row in enumerate(M):
            assert sum(row[c] * v for c, v in sol.items()) == b[r]
    else:
        bad = red.inconsistent_rows(ncols)[0]
        y = red.history[bad]
        assert all(sum(y.get(r, 0) * M[r][c] for r in range(len(M))) == 0 for c in range(ncols))
        assert sum(y.get(r, 0) * b[r] for r in range(len(M))) != 0


def test_dense_inverse():
    M = [[2, 1], [1, 1]]
    assert dense_inverse(M) == [[1, -1], [-1, 2]]
    assert dense_inverse([[1, 2], [2, 4]]) is None


def test_phase_one_feasible():
    res = phase_one([[1, 1, 0], [0, 1, 1]], [1, 1])
    assert res.feasible
    x = res.x
    assert x[0] + x[1] == 1 and x[1] + x[2] == 1 and min(x) >= 0


def test_phase_one_infeasible_certificate():
    A, b = [[1, 1], [1, -1]], [1, 3]
    res = phase_one(A, b)
    assert not res.feasible and check_farkas(A, b, res.certificate)
    A, b = [[1]], [-1]
    res = phase_one(A, b)
    assert not res.feasible and check_farkas(A, b, res.certificate)


@given(st.lists(st.lists(st.integers(-2, 2), min_size=3, max_size=3), min_size=1, max_size=4),
       st.lists(st.integers(-2, 2), min_size=4, max_size=4))
def test_phase_one_decides(A, b):
    b = b[: len(A)]
    res = phase_one(A, b)
    if res.feasible:
        for row, bi in zip(A, b):
            assert sum(Fraction(a) * x for a, x in zip(row, res.x)) == bi
        assert min(res.x) >= 0
    else:
        assert check_farkas(A, b, res.certificate)
