"""H-weights, average H-weights, fern sums and algebraic nilpotency.

Types are 1-based throughout; a multi-index is a plain tuple of length
``n``.  Coefficient tables hold the *divided* coefficients ``H_{i,alpha}``
of ``H_i = sum H_{i,alpha} X^alpha / alpha!`` with ``|alpha| = d``.
"""

from __future__ import annotations

import itertools
import math
from collections.abc import Iterator, Mapping, Sequence
from dataclasses import dataclass, field
from fractions import Fraction

from sympy.utilities.iterables import multiset_permutations

from .errors import DegreeMismatch, InvalidParameter
from .polynomial import Poly, monomials_of_degree, polymatmul
from .shuffle import enumerate_shuffle_classes, LabelledShuffleClass
from .trees import DEFAULT_CAP, CatalanTree, LabelledTree

MultiIndex = tuple[int, ...]


# ---------------------------------------------------------------------------
# Multi-indices
# ---------------------------------------------------------------------------


def mi_abs(alpha: Sequence[int]) -> int:
    return sum(alpha)


def mi_factorial(alpha: Sequence[int]) -> int:
    out = 1
    for a in alpha:
        out *= math.factorial(a)
    return out


def mi_add(a: Sequence[int], b: Sequence[int]) -> MultiIndex:
    return tuple(x + y for x, y in zip(a, b))


def mi_sub(a: Sequence[int], b: Sequence[int]) -> MultiIndex:
    return tuple(x - y for x, y in zip(a, b))


def mi_leq(a: Sequence[int], b: Sequence[int]) -> bool:
    return all(x <= y for x, y in zip(a, b))


def unit(n: int, j: int) -> MultiIndex:
    """``e_j`` with ``j`` 1-based."""
    return tuple(1 if t == j - 1 else 0 for t in range(n))


def multi_indices(n: int, total: int) -> list[MultiIndex]:
    return list(monomials_of_degree(n, total))


def check_multi_index(alpha: Sequence[int], n: int) -> MultiIndex:
    alpha = tuple(int(a) for a in alpha)
    if len(alpha) != n or any(a < 0 for a in alpha):
        raise DegreeMismatch(f"multi-index {alpha} is not a non-negative {n}-vector")
    return alpha


# ---------------------------------------------------------------------------
# Coefficient tables
# ---------------------------------------------------------------------------


@dataclass
class CoefficientTable:
    n: int
    d: int
    entries: dict[tuple[int, MultiIndex], Fraction] = field(default_factory=dict)

    def __post_init__(self):
        if self.n < 1 or self.d < 2:
            raise InvalidParameter(f"need n >= 1 and d >= 2, got n={self.n}, d={self.d}")
        raw, self.entries = self.entries, {}
        for (i, alpha), c in raw.items():
            self.set(i, alpha, c)

    def set(self, i: int, alpha: Sequence[int], value) -> None:
        alpha = check_multi_index(alpha, self.n)
        if not 1 <= i <= self.n:
            raise InvalidParameter(f"type {i} outside 1..{self.n}")
        if sum(alpha) != self.d:
            raise DegreeMismatch(f"|alpha| = {sum(alpha)} but the table has degree {self.d}")
        value = Fraction(value)
        if value:
            self.entries[(i, alpha)] = value
        else:
            self.entries.pop((i, alpha), None)

    def get(self, i: int, alpha: Sequence[int]) -> Fraction:
        return self.entries.get((i, tuple(alpha)), Fraction(0))

    def h(self, i: int, alpha: Sequence[int]) -> Fraction:
        """Undivided coefficient ``H_{i,alpha} / alpha!``."""
        return self.get(i, alpha) / mi_factorial(alpha)

    @property
    def L(self) -> Fraction:
        return max((abs(c) for c in self.entries.values()), default=Fraction(0))

    def row(self, i: int) -> dict[MultiIndex, Fraction]:
        return {a: c for (t, a), c in self.entries.items() if t == i}

    @classmethod
    def constant(cls, n: int, d: int, value) -> "CoefficientTable":
        return cls(n, d, {(i, a): Fraction(value) for i in range(1, n + 1) for a in multi_indices(n, d)})

    def polynomials(self) -> list[Poly]:
        """``H_i`` as polynomials."""
        out = []
        for i in range(1, self.n + 1):
            out.append(Poly(self.n, {a: c / mi_factorial(a) for a, c in self.row(i).items()}))
        return out

    @classmethod
    def from_polynomials(cls, d: int, polys: Sequence[Poly]) -> "CoefficientTable":
        n = len(polys)
        entries = {}
        for i, p in enumerate(polys, start=1):
            for a, c in p.terms.items():
                entries[(i, a)] = c * mi_factorial(a)
        return cls(n, d, entries)

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "d": self.d,
            "entries": [
                {"i": i, "alpha": list(a), "num": str(c.numerator), "den": str(c.denominator)}
                for (i, a), c in sorted(self.entries.items())
            ],
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "CoefficientTable":
        table = cls(int(data["n"]), int(data["d"]))
        for e in data["entries"]:
            table.set(int(e["i"]), e["alpha"], Fraction(int(e["num"]), int(e["den"])))
        return table


def _check_table(tree_d: int, H: CoefficientTable) -> None:
    if tree_d != H.d:
        raise DegreeMismatch(f"tree degree {tree_d} does not match table degree {H.d}")


# ---------------------------------------------------------------------------
# H-weights
# ---------------------------------------------------------------------------


def h_weight(lt: LabelledTree, H: CoefficientTable) -> Fraction:
    _check_table(lt.d, H)
    if lt.n != H.n:
        raise DegreeMismatch(f"tree has {lt.n} types, table has {H.n}")
    w = Fraction(1)
    for i, ch in enumerate(lt.tree.enc):
        if ch == "1":
            w *= H.get(lt.types[i], lt.mu(i))
            if not w:
                break
    return w


def _check_alpha(tree: CatalanTree, alpha: Sequence[int], n: int) -> MultiIndex:
    alpha = check_multi_index(alpha, n)
    leaves = (tree.d - 1) * tree.k + 1
    if sum(alpha) != leaves:
        raise DegreeMismatch(f"|alpha| = {sum(alpha)} but the tree has {leaves} leaves")
    return alpha


def iter_labellings(tree: CatalanTree, i: int, alpha: Sequence[int], n: int) -> Iterator[LabelledTree]:
    """All ``(i, alpha)`` labellings by brute force; oracle for the DP."""
    alpha = _check_alpha(tree, alpha, n)
    internal = [v for v, ch in enumerate(tree.enc) if ch == "1"]
    leaves = [v for v, ch in enumerate(tree.enc) if ch == "0"]
    pool = [t for t in range(1, n + 1) for _ in range(alpha[t - 1])]
    if tree.k == 0:
        if alpha == unit(n, i):
            yield LabelledTree(tree, (i,), n)
        return
    for inner in itertools.product(range(1, n + 1), repeat=len(internal) - 1):
        for leaf_types in multiset_permutations(pool):
            types = [0] * tree.size
            types[0] = i
            for v, t in zip(internal[1:], inner):
                types[v] = t
            for v, t in zip(leaves, leaf_types):
                types[v] = t
            yield LabelledTree(tree, tuple(types), n)


def labelling_count(tree: CatalanTree, i: int, alpha: Sequence[int], n: int) -> int:
    """``n^{k-1} |alpha|! / alpha!`` for ``k >= 1``; a bare leaf has one labelling iff ``alpha = e_i``."""
    if tree.k == 0:
        return int(tuple(alpha) == unit(n, i))
    return n ** (tree.k - 1) * math.factorial(sum(alpha)) // mi_factorial(alpha)


class _WeightDP:
    """Bottom-up sums over labellings of subtrees.

    For vertex ``v`` the table ``{(t, beta): s}`` holds the total H-weight of
    labellings of the subtree at ``v`` with ``v`` of type ``t`` and leaf type
    ``beta``.  States with ``beta`` exceeding the target are pruned.  Tables
    of sink-free subtrees depend only on the subtree shape and are memoized
    by encoding, which is what makes the sum over a whole ``C_k`` cheap.
    """

    def __init__(self, H: CoefficientTable, bound: MultiIndex):
        self.H = H
        self.n = H.n
        self.bound = bound
        self.memo: dict[str, dict[tuple[int, MultiIndex], Fraction]] = {}
        self.rows = [list(H.row(t).items()) for t in range(1, H.n + 1)]

    def leaf_table(self, forced: int | None = None, counted: bool = True):
        zero = (0,) * self.n
        types = range(1, self.n + 1) if forced is None else (forced,)
        out = {}
        for t in types:
            beta = unit(self.n, t) if counted else zero
            if mi_leq(beta, self.bound):
                out[(t, beta)] = Fraction(1)
        return out

    def combine(self, child_tables) -> dict[tuple[int, MultiIndex], Fraction]:
        n, bound = self.n, self.bound
        # fold the children into {mu: {beta: s}}
        acc: dict[tuple[MultiIndex, MultiIndex], Fraction] = {((0,) * n, (0,) * n): Fraction(1)}
        for table in child_tables:
            nxt: dict[tuple[MultiIndex, MultiIndex], Fraction] = {}
            for (mu, beta), s in acc.items():
                for (t, b2), s2 in table.items():
                    nb = mi_add(beta, b2)
                    if not mi_leq(nb, bound):
                        continue
                    m2 = list(mu)
                    m2[t - 1] += 1
                    key = (tuple(m2), nb)
                    nxt[key] = nxt.get(key, Fraction(0)) + s * s2
            acc = nxt
            if not acc:
                return {}
        by_mu: dict[MultiIndex, list[tuple[MultiIndex, Fraction]]] = {}
        for (mu, beta), s in acc.items():
            if s:
                by_mu.setdefault(mu, []).append((beta, s))
        out: dict[tuple[int, MultiIndex], Fraction] = {}
        for t, row in enumerate(self.rows, start=1):
            for mu, c in row:
                for beta, s in by_mu.get(mu, ()):
                    key = (t, beta)
                    out[key] = out.get(key, Fraction(0)) + c * s
        return {key: s for key, s in out.items() if s}

    def table(self, tree: CatalanTree, v: int = 0, sink: int | None = None, sink_type: int | None = None):
        if sink is None:
            key = tree.subtree_enc(v)
            hit = self.memo.get(key)
            if hit is not None:
                return hit
        if tree.enc[v] == "0":
            if v == sink:
                res = self.leaf_table(forced=sink_type, counted=False)
            else:
                res = self.leaf_table()
        else:
            a, b = tree.subtree_span(v)
            has_sink = sink is not None and a <= sink < b
            res = self.combine([self.table(tree, c, sink if has_sink else None, sink_type) for c in tree.children(v)])
        if sink is None or not (tree.subtree_span(v)[0] <= sink < tree.subtree_span(v)[1]):
            self.memo[tree.subtree_enc(v)] = res
        return res


def average_h_weight(tree: CatalanTree, i: int, alpha: Sequence[int], H: CoefficientTable,
                     _dp: _WeightDP | None = None) -> Fraction:
    """``E_{i,alpha,H}(T)``: total H-weight over all ``(i, alpha)`` labellings."""
    _check_table(tree.d, H)
    alpha = _check_alpha(tree, alpha, H.n)
    if not 1 <= i <= H.n:
        raise InvalidParameter(f"type {i} outside 1..{H.n}")
    dp = _dp if _dp is not None else _WeightDP(H, alpha)
    return dp.table(tree).get((i, alpha), Fraction(0))


def average_h_weight_brute(tree: CatalanTree, i: int, alpha: Sequence[int], H: CoefficientTable) -> Fraction:
    return sum((h_weight(lt, H) for lt in iter_labellings(tree, i, alpha, H.n)), Fraction(0))


# ---------------------------------------------------------------------------
# Ferns
# ---------------------------------------------------------------------------


def canonical_fern(d: int, p: int) -> tuple[CatalanTree, tuple[int, ...]]:
    """Spine through the last child of every generation; sink at its end."""
    return CatalanTree(d, ("1" + "0" * (d - 1)) * p + "0"), (d,) * p


def first_child_fern(d: int, p: int) -> tuple[CatalanTree, tuple[int, ...]]:
    return CatalanTree.caterpillar(d, p), (1,) * p


def check_fern(tree: CatalanTree, sink: Sequence[int], p: int) -> int:
    if tree.k != p or tree.height != p:
        raise InvalidParameter(f"a fern of height {p} needs {p} internal vertices and height {p}")
    per_gen = [0] * (p + 1)
    for ch, h in zip(tree.enc, tree.depths):
        if ch == "1":
            per_gen[h] += 1
    if any(c > 1 for c in per_gen):
        raise InvalidParameter("more than one internal vertex in a generation")
    idx = tree.index_of(sink)
    if tree.depths[idx] != p or tree.enc[idx] != "0":
        raise InvalidParameter(f"sink {tuple(sink)} is not a leaf in generation {p}")
    return idx


def fern_sum(i: int, j: int, alpha: Sequence[int], H: CoefficientTable, p: int,
             fern: tuple[CatalanTree, Sequence[int]] | None = None) -> Fraction:
    """``Psi_{i,j}^alpha(H)``: weights of labellings with root ``i``, sink ``j``
    and the other leaves of type ``alpha``."""
    if p < 1:
        raise InvalidParameter(f"p must be >= 1, got {p}")
    alpha = check_multi_index(alpha, H.n)
    if sum(alpha) != (H.d - 1) * p:
        raise DegreeMismatch(f"|alpha| must be (d-1)p = {(H.d - 1) * p}, got {sum(alpha)}")
    for t in (i, j):
        if not 1 <= t <= H.n:
            raise InvalidParameter(f"type {t} outside 1..{H.n}")
    tree, sink = fern if fern is not None else canonical_fern(H.d, p)
    _check_table(tree.d, H)
    s = check_fern(tree, sink, p)
    dp = _WeightDP(H, alpha)
    return dp.table(tree, 0, sink=s, sink_type=j).get((i, alpha), Fraction(0))


# ---------------------------------------------------------------------------
# Nilpotency
# ---------------------------------------------------------------------------


def nilpotency_coefficients(H: CoefficientTable, p: int) -> dict[tuple[int, int, MultiIndex], Fraction]:
    """Nonzero values of the coefficient identity, keyed by ``(i, j, beta)``.

    The value is ``sum over (beta^1..beta^p) of prod (d-1)!/beta^l!`` times
    ``sum over k_1..k_{p-1} of prod H_{k_{l-1}, beta^l + e_{k_l}}``; it equals
    ``((d-1)!)^p`` times the ``X^beta`` coefficient of ``((JH)^p)_{ij}``.
    """
    if p < 1:
        raise InvalidParameter(f"p must be >= 1, got {p}")
    n, d = H.n, H.d
    fd = math.factorial(d - 1)
    steps = [(b, Fraction(fd, mi_factorial(b))) for b in multi_indices(n, d - 1)]
    out = {}
    for i in range(1, n + 1):
        # state (current type k_l, partial sum of the beta^l)
        states: dict[tuple[int, MultiIndex], Fraction] = {(i, (0,) * n): Fraction(1)}
        for _ in range(p):
            nxt: dict[tuple[int, MultiIndex], Fraction] = {}
            for (k, gamma), s in states.items():
                for b, w in steps:
                    g2 = mi_add(gamma, b)
                    for k2 in range(1, n + 1):
                        c = H.get(k, mi_add(b, unit(n, k2)))
                        if c:
                            key = (k2, g2)
                            nxt[key] = nxt.get(key, Fraction(0)) + s * w * c
            states = {key: v for key, v in nxt.items() if v}
        for (j, beta), v in states.items():
            out[(i, j, beta)] = v
    return out


def jacobian(H: CoefficientTable) -> list[list[Poly]]:
    polys = H.polynomials()
    return [[polys[i].diff(j) for j in range(1, H.n + 1)] for i in range(H.n)]


def jacobian_power(H: CoefficientTable, p: int) -> list[list[Poly]]:
    J = jacobian(H)
    out = J
    for _ in range(p - 1):
        out = polymatmul(out, J)
    return out


def is_jacobian_nilpotent(H: CoefficientTable, p: int, method: str = "identity") -> bool:
    """Whether ``(JH)^p = 0``, via the coefficient identity or symbolically."""
    if method == "identity":
        return not nilpotency_coefficients(H, p)
    if method == "symbolic":
        return all(e.is_zero() for row in jacobian_power(H, p) for e in row)
    raise InvalidParameter(f"unknown method {method!r}")


@dataclass(frozen=True)
class NilpotencyReport:
    p: int
    identity: bool
    symbolic: bool
    witnesses: tuple[tuple[int, int, MultiIndex], ...]

    @property
    def agree(self) -> bool:
        return self.identity == self.symbolic

    def to_json(self) -> dict:
        return {
            "p": self.p,
            "nilpotent": self.identity,
            "identity": self.identity,
            "symbolic": self.symbolic,
            "agree": self.agree,
            "witnesses": [{"i": i, "j": j, "beta": list(b)} for i, j, b in self.witnesses],
        }


def nilpotency_report(H: CoefficientTable, p: int, max_witnesses: int = 10) -> NilpotencyReport:
    coeffs = nilpotency_coefficients(H, p)
    symbolic = is_jacobian_nilpotent(H, p, "symbolic")
    return NilpotencyReport(p, not coeffs, symbolic, tuple(sorted(coeffs))[:max_witnesses])


# ---------------------------------------------------------------------------
# Shuffle lemma
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ShuffleLemmaReport:
    d: int
    k: int
    p: int
    i: int
    alpha: MultiIndex
    sums: dict[str, Fraction]

    @property
    def all_zero(self) -> bool:
        return all(s == 0 for s in self.sums.values())

    def nonzero(self) -> dict[str, Fraction]:
        return {key: s for key, s in self.sums.items() if s}

    def to_json(self) -> dict:
        return {
            "d": self.d, "k": self.k, "p": self.p, "i": self.i, "alpha": list(self.alpha),
            "classes": len(self.sums),
            "all_zero": self.all_zero,
            "sums": [{"key": key, "num": str(s.numerator), "den": str(s.denominator)}
                     for key, s in self.sums.items()],
        }


def shuffle_lemma_check(H: CoefficientTable, p: int, k: int, i: int, alpha: Sequence[int],
                        cap: int | None = DEFAULT_CAP) -> ShuffleLemmaReport:
    """Sum of ``E_{i,alpha,H}`` over every length-``p`` class of ``C_k^(d)``."""
    alpha = check_multi_index(alpha, H.n)
    if sum(alpha) != (H.d - 1) * k + 1:
        raise DegreeMismatch(f"|alpha| must be (d-1)k+1 = {(H.d - 1) * k + 1}")
    classes = enumerate_shuffle_classes(H.d, k, p, cap)
    dp = _WeightDP(H, alpha)
    weights: dict[str, Fraction] = {}
    sums = {}
    for key, cls in classes.items():
        total = Fraction(0)
        for enc in cls.members:
            if enc not in weights:
                weights[enc] = average_h_weight(CatalanTree(H.d, enc), i, alpha, H, dp)
            total += weights[enc]
        sums[key] = total
    return ShuffleLemmaReport(H.d, k, p, i, alpha, sums)


def labelled_class_weight(lc: LabelledShuffleClass, H: CoefficientTable) -> Fraction:
    return sum((h_weight(lt, H) for lt in lc.trees(H.d)), Fraction(0))
