"""Inverse power-series coefficients: tree sums and a degree-by-degree oracle.

For ``F = X - H(X)`` with ``H`` homogeneous of degree ``d``, the coefficient
of ``X^alpha`` (``|alpha| = (d-1)k + 1``) in ``F^{-1}_i`` is

    g_{i,alpha} = (d!)^{-k} * sum over T in C_k^(d) of E_{i,alpha,H}(T).

:func:`truncated_inverse` computes the same numbers by solving
``F o G = X`` one degree at a time and never looks at a tree.
"""

from __future__ import annotations

import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from fractions import Fraction
from functools import partial

from .errors import InvalidDegree, InvalidParameter, SingularLinearPart
from .linalg import dense_inverse
from .polynomial import Poly, TruncatedSeriesMap, monomials_of_degree
from .sampler import CAP_EXCEEDED, OffspringDistribution, block_rng, run_blocks, sample_gw_multitype
from .trees import DEFAULT_CAP, CatalanTree, catalan_number, iter_encodings
from .weights import CoefficientTable, _WeightDP, check_multi_index, mi_factorial, unit


def tree_size_for(alpha: Sequence[int], d: int) -> int:
    """``k`` with ``|alpha| = (d-1)k + 1``."""
    m = sum(alpha)
    if m < 1 or (m - 1) % (d - 1):
        raise InvalidDegree(f"|alpha| = {m} is not of the form (d-1)k+1 for d={d}")
    return (m - 1) // (d - 1)


def inverse_coefficient(H: CoefficientTable, i: int, alpha: Sequence[int],
                        cap: int | None = DEFAULT_CAP, _dp: _WeightDP | None = None) -> Fraction:
    alpha = check_multi_index(alpha, H.n)
    if not 1 <= i <= H.n:
        raise InvalidParameter(f"type {i} outside 1..{H.n}")
    k = tree_size_for(alpha, H.d)
    if k == 0:
        return Fraction(int(alpha == unit(H.n, i)))
    dp = _dp if _dp is not None and _dp.bound == alpha else _WeightDP(H, alpha)
    total = Fraction(0)
    for enc in iter_encodings(H.d, k, cap):
        total += dp.table(CatalanTree(H.d, enc)).get((i, alpha), 0)
    return total / math.factorial(H.d) ** k


def inverse_series(H: CoefficientTable, D: int, cap: int | None = DEFAULT_CAP) -> TruncatedSeriesMap:
    """All tree-sum coefficients through total degree ``D``."""
    terms = {}
    for m in range(1, D + 1):
        if (m - 1) % (H.d - 1):
            continue
        for alpha in monomials_of_degree(H.n, m):
            dp = _WeightDP(H, alpha)
            for i in range(1, H.n + 1):
                g = inverse_coefficient(H, i, alpha, cap, dp)
                if g:
                    terms[(i, alpha)] = g
    return TruncatedSeriesMap.from_terms(H.n, D, terms)


def map_from_table(H: CoefficientTable, D: int | None = None) -> TruncatedSeriesMap:
    """``F = X - sum H_{i,alpha} X^alpha / alpha!``."""
    D = H.d if D is None else D
    comps = []
    for i in range(1, H.n + 1):
        terms = {unit(H.n, i): Fraction(1)}
        for alpha, c in H.row(i).items():
            terms[alpha] = terms.get(alpha, 0) - c / mi_factorial(alpha)
        comps.append(Poly(H.n, terms))
    return TruncatedSeriesMap(H.n, D, tuple(comps))


def map_from_offspring(off: OffspringDistribution, D: int) -> TruncatedSeriesMap:
    """``F = X - sum_{alpha != 0} h_{i,alpha} X^alpha`` with undivided ``h``."""
    comps = []
    zero = (0,) * off.n
    for i, row in enumerate(off.rows, start=1):
        terms = {unit(off.n, i): Fraction(1)}
        for alpha, c in row.items():
            if alpha != zero and c:
                terms[alpha] = terms.get(alpha, 0) - c
        comps.append(Poly(off.n, terms))
    return TruncatedSeriesMap(off.n, D, tuple(comps))


def truncated_inverse(F: TruncatedSeriesMap, D: int | None = None) -> TruncatedSeriesMap:
    """Compositional inverse through degree ``D``.

    Writing ``F = L X + N(X)`` with ``N`` of order at least 2, the
    degree-``m`` part of ``G`` is ``-L^{-1} [N(G_{<m})]_m``.  Only formal
    invertibility (``L`` nonsingular) is checked; as formal series no
    convergence hypothesis is needed.
    """
    D = F.D if D is None else D
    if D > F.D:
        raise InvalidParameter(f"F is only known through degree {F.D}")
    n = F.n
    if any(F.constant_terms()):
        raise InvalidParameter("F must vanish at the origin")
    Linv = dense_inverse(F.linear_part())
    if Linv is None:
        raise SingularLinearPart("linear part of F is singular")
    nonlinear = [Poly(n, {m: c for m, c in comp.terms.items() if sum(m) >= 2}) for comp in F.components]
    G = [Poly(n, {unit(n, j + 1): Linv[i][j] for j in range(n) if Linv[i][j]}) for i in range(n)]
    for m in range(2, D + 1):
        Nm = [p.compose(G, m).homogeneous_part(m) for p in nonlinear]
        for i in range(n):
            upd = Poly(n)
            for j in range(n):
                if Linv[i][j] and not Nm[j].is_zero():
                    upd = upd - Nm[j].scale(Linv[i][j])
            G[i] = G[i] + upd
    return TruncatedSeriesMap(n, D, tuple(G))


@dataclass(frozen=True)
class BoundReport:
    i: int
    alpha: tuple[int, ...]
    k: int
    g: Fraction
    bound: Fraction
    refined: Fraction | None

    @property
    def holds(self) -> bool:
        ok = abs(self.g) <= self.bound
        if self.refined is not None:
            ok = ok and abs(self.g) <= self.refined
        return ok

    @property
    def sharp(self) -> bool:
        return abs(self.g) == self.bound

    def to_json(self) -> dict:
        def frac(x):
            return None if x is None else {"num": str(x.numerator), "den": str(x.denominator)}

        return {
            "i": self.i, "alpha": list(self.alpha), "k": self.k,
            "g": frac(self.g), "bound": frac(self.bound), "refined": frac(self.refined),
            "holds": self.holds, "sharp": self.sharp,
            "approx": {"g": float(self.g), "bound": float(self.bound)},
        }


def coefficient_bound(H: CoefficientTable, alpha: Sequence[int]) -> Fraction:
    """``C_k n^{k-1} (|alpha|!/alpha!) L^k / (d!)^k``."""
    k = tree_size_for(alpha, H.d)
    if k == 0:
        return Fraction(1)
    m = sum(alpha)
    count = Fraction(H.n ** (k - 1) * math.factorial(m), mi_factorial(alpha))
    return catalan_number(H.d, k) * count * H.L ** k / math.factorial(H.d) ** k


def coefficient_bound_report(H: CoefficientTable, i: int, alpha: Sequence[int],
                             deficit: Fraction | None = None, cap: int | None = DEFAULT_CAP) -> BoundReport:
    alpha = check_multi_index(alpha, H.n)
    g = inverse_coefficient(H, i, alpha, cap)
    bound = coefficient_bound(H, alpha)
    refined = None if deficit is None else bound * Fraction(deficit)
    report = BoundReport(i, alpha, tree_size_for(alpha, H.d), g, bound, refined)
    if abs(g) > bound:
        raise AssertionError(f"|g| = {abs(g)} exceeds the bound {bound}")
    return report


# ---------------------------------------------------------------------------
# Galton-Watson leaf law
# ---------------------------------------------------------------------------


def leaf_law_exact(off: OffspringDistribution, root_type: int, alpha: Sequence[int]) -> Fraction:
    """``d^alpha g_{i,alpha}`` with ``g`` from the formal inverse of ``X - h(X)``."""
    alpha = check_multi_index(alpha, off.n)
    G = truncated_inverse(map_from_offspring(off, sum(alpha)))
    g = G.coefficient(root_type, alpha)
    w = Fraction(1)
    for j, a in enumerate(alpha, start=1):
        w *= off.leaf_mass(j) ** a
    return w * g


@dataclass(frozen=True)
class LeafLawReport:
    root_type: int
    alpha: tuple[int, ...]
    trials: int
    seed: int
    hits: int
    capped: int
    exact: Fraction

    @property
    def empirical(self) -> Fraction:
        return Fraction(self.hits, self.trials)

    @property
    def sigma(self) -> float:
        p = float(self.exact)
        return math.sqrt(max(p * (1 - p), 0.0) / self.trials)

    @property
    def z(self) -> float:
        diff = float(self.empirical - self.exact)
        if self.sigma == 0:
            return 0.0 if diff == 0 else math.inf
        return diff / self.sigma

    def to_json(self) -> dict:
        return {
            "root_type": self.root_type, "alpha": list(self.alpha),
            "trials": self.trials, "seed": self.seed, "hits": self.hits, "capped": self.capped,
            "exact": {"num": str(self.exact.numerator), "den": str(self.exact.denominator)},
            "approx": {"empirical": float(self.empirical), "exact": float(self.exact),
                       "sigma": self.sigma, "z": self.z},
        }


def _leaf_hits(off, root_type, alpha, vertex_cap, seed, block, count):
    rng = block_rng(seed, block)
    hits = capped = 0
    for _ in range(count):
        t = sample_gw_multitype(off, root_type, rng, vertex_cap)
        if t is CAP_EXCEEDED:
            capped += 1
        elif t.leaftype == alpha:
            hits += 1
    return hits, capped


def verify_gw_leaf_law(off: OffspringDistribution, root_type: int, alpha: Sequence[int], trials: int,
                       seed: int, vertex_cap: int = 10_000, workers: int = 1) -> LeafLawReport:
    alpha = check_multi_index(alpha, off.n)
    exact = leaf_law_exact(off, root_type, alpha)
    parts = run_blocks(partial(_leaf_hits, off, root_type, alpha, vertex_cap), trials, seed, workers)
    hits = sum(h for h, _ in parts)
    capped = sum(c for _, c in parts)
    return LeafLawReport(root_type, alpha, trials, seed, hits, capped, exact)


def leaf_law_table(off: OffspringDistribution, root_type: int, max_leaves: int) -> dict[tuple[int, ...], Fraction]:
    """Exact ``P(finite, Leaftype = alpha)`` for every ``|alpha| <= max_leaves``."""
    G = truncated_inverse(map_from_offspring(off, max_leaves))
    out = {}
    for m in range(1, max_leaves + 1):
        for alpha in monomials_of_degree(off.n, m):
            g = G.coefficient(root_type, alpha)
            if g:
                w = Fraction(1)
                for j, a in enumerate(alpha, start=1):
                    w *= off.leaf_mass(j) ** a
                out[alpha] = w * g
    return out


