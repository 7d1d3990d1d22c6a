"""Span of shuffle-class indicators, width functions and their norms.

The indicator matrix has one row per tree of ``C_k^(d)`` (enumeration
order) and one column per length-``p`` shuffle class (sorted keys).  The
constant function lies in the column span iff ``[A | 1]`` is consistent.
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from fractions import Fraction
from functools import partial

import mpmath

from .errors import InvalidParameter
from .linalg import row_reduce
from .sampler import block_rng, is_p_perfect, run_blocks, sample_encoding
from .shuffle import ShuffleCatalogue, shuffle_catalogue
from .trees import DEFAULT_CAP, CatalanTree, GenerationProfile, catalan_number, iter_encodings


def _frac(x: Fraction) -> dict:
    return {"num": str(x.numerator), "den": str(x.denominator)}


# ---------------------------------------------------------------------------
# Indicator matrix and certificates
# ---------------------------------------------------------------------------


@dataclass
class ExactMatrix:
    d: int
    k: int
    p: int
    trees: list[str]
    keys: list[str]
    columns: list[list[int]]  # rows with a 1 in each column

    @classmethod
    def from_catalogue(cls, cat: ShuffleCatalogue, trees: list[str]) -> "ExactMatrix":
        index = {enc: r for r, enc in enumerate(trees)}
        keys = list(cat.classes)
        cols = [sorted(index[m] for m in cat.classes[key].members) for key in keys]
        return cls(cat.d, cat.k, cat.p, trees, keys, cols)

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.trees), len(self.keys)

    def rows(self) -> list[dict[int, int]]:
        out: list[dict[int, int]] = [dict() for _ in self.trees]
        for c, rows in enumerate(self.columns):
            for r in rows:
                out[r][c] = 1
        return out

    def apply(self, lam: Mapping[int, Fraction]) -> list[Fraction]:
        """``sum_S lam_S 1_S`` evaluated on every tree."""
        out = [Fraction(0)] * len(self.trees)
        for c, v in lam.items():
            for r in self.columns[c]:
                out[r] += v
        return out


@dataclass(frozen=True)
class SpanCertificate:
    status: str  # "member" | "non-member"
    d: int
    k: int
    p: int
    lam: dict[str, Fraction] = field(default_factory=dict)
    witness: dict[str, Fraction] | None = None

    @property
    def is_member(self) -> bool:
        return self.status == "member"

    def to_json(self) -> dict:
        out = {
            "d": self.d, "k": self.k, "p": self.p,
            "status": self.status,
            "lambda": [{"key": key, **_frac(v)} for key, v in self.lam.items()],
        }
        if self.witness is not None:
            out["witness"] = [{"enc": enc, **_frac(v)} for enc, v in self.witness.items()]
        return out


def _build(d: int, k: int, p: int, cap: int | None) -> tuple[ShuffleCatalogue, ExactMatrix]:
    trees = list(iter_encodings(d, k, cap))
    cat = shuffle_catalogue(d, k, p, cap)
    return cat, ExactMatrix.from_catalogue(cat, trees)


def indicator_matrix(d: int, k: int, p: int, cap: int | None = DEFAULT_CAP) -> ExactMatrix:
    return _build(d, k, p, cap)[1]


def span_membership(d: int, k: int, p: int, cap: int | None = DEFAULT_CAP) -> SpanCertificate:
    """Decide whether the constant function is a combination of class indicators."""
    _, A = _build(d, k, p, cap)
    nrows, ncols = A.shape
    if ncols == 0:
        # No classes at all: the uniform functional is orthogonal to nothing
        # but still pairs to C_k with the constant function.
        return SpanCertificate("non-member", d, k, p, {}, {enc: Fraction(1) for enc in A.trees})
    rhs = ncols
    rows = A.rows()
    for row in rows:
        row[rhs] = 1
    red = row_reduce(rows, range(ncols))
    sol = red.solution(rhs)
    if sol is not None:
        cert = SpanCertificate("member", d, k, p, {A.keys[c]: v for c, v in sol.items()})
    else:
        red = row_reduce(rows, range(ncols), track=True)
        bad = red.inconsistent_rows(rhs)[0]
        hist = red.history[bad]
        witness = {A.trees[r]: Fraction(v) for r, v in sorted(hist.items())}
        cert = SpanCertificate("non-member", d, k, p, {}, witness)
    if not verify_certificate(cert, A):
        raise AssertionError("span certificate failed re-evaluation")
    return cert


def verify_certificate(cert: SpanCertificate, A: ExactMatrix) -> bool:
    if cert.is_member:
        col = {key: c for c, key in enumerate(A.keys)}
        values = A.apply({col[key]: v for key, v in cert.lam.items()})
        return all(v == 1 for v in values)
    w = cert.witness or {}
    row = {enc: r for r, enc in enumerate(A.trees)}
    y = [Fraction(0)] * len(A.trees)
    for enc, v in w.items():
        y[row[enc]] = v
    if any(sum((y[r] for r in rows), Fraction(0)) for rows in A.columns):
        return False
    return sum(y, Fraction(0)) != 0


def span_dimension(d: int, k: int, p: int, cap: int | None = DEFAULT_CAP) -> tuple[int, int]:
    """``(rank of the indicator matrix, C_k^(d))``."""
    _, A = _build(d, k, p, cap)
    nrows, ncols = A.shape
    if ncols == 0:
        return 0, nrows
    return row_reduce(A.rows(), range(ncols)).rank, nrows


# ---------------------------------------------------------------------------
# Width functions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WidthRecord:
    enc: str
    d: int
    k: int
    p: int
    psi: Fraction
    J: tuple[int, ...]  # J_1, J_2, ... up to the last nonzero term (just J_1 when p = 1)
    phi: Fraction
    phi_star: Fraction
    perfect: bool

    def to_json(self) -> dict:
        return {
            "enc": self.enc, "d": self.d, "k": self.k, "p": self.p,
            "psi": _frac(self.psi), "J": [str(j) for j in self.J],
            "J_constant": self.p == 1,
            "phi": _frac(self.phi), "phi_star": _frac(self.phi_star), "perfect": self.perfect,
            "approx": {"psi": float(self.psi), "phi": float(self.phi), "phi_star": float(self.phi_star)},
        }


def chi(profile: GenerationProfile, m: int, p: int) -> int:
    """``prod_{i=1}^{m-1} N_{<= i(p-1)}``."""
    out = 1
    for i in range(1, m):
        out *= profile.upto(i * (p - 1))
    return out


def J_terms(profile: GenerationProfile, p: int) -> tuple[int, ...]:
    if p == 1:
        return (profile.from_(1),)
    out = []
    m = 1
    while m * (p - 1) + 1 <= profile.height:
        out.append(profile.from_(m * (p - 1) + 1) * chi(profile, m, p))
        m += 1
    return tuple(out)


def phi_product(profile: GenerationProfile, p: int) -> Fraction:
    """``prod_m N_{<= m(p-1)} / (dk+1)``; the factors reach 1 once ``m(p-1)`` covers the height."""
    total = profile.total
    if p == 1:
        # every factor is 1/(dk+1), so the infinite product vanishes unless dk+1 = 1
        return Fraction(1) if total == 1 else Fraction(0)
    out = Fraction(1)
    m = 1
    while True:
        n = profile.upto(m * (p - 1))
        if n == total:
            return out
        out *= Fraction(n, total)
        m += 1


def telescoping_sum(profile: GenerationProfile, p: int) -> Fraction:
    """``sum_m J_m / (dk+1)^m`` evaluated term by term (geometric when p = 1)."""
    total = profile.total
    J = J_terms(profile, p)
    if p == 1:
        r = Fraction(1, total)
        return J[0] * r / (1 - r) if total > 1 else Fraction(0)
    return sum((Fraction(j, total ** m) for m, j in enumerate(J, start=1)), Fraction(0))


def width_functions(tree: CatalanTree, p: int, k: int | None = None) -> WidthRecord:
    if p < 1:
        raise InvalidParameter(f"p must be >= 1, got {p}")
    if k is not None and k != tree.k:
        raise InvalidParameter(f"tree has k={tree.k}, not {k}")
    prof = tree.profile()
    total = prof.total
    psi = Fraction(prof.from_(p), total)
    phi = 1 - phi_product(prof, p)
    perfect = is_p_perfect(tree, p)[0]
    return WidthRecord(tree.enc, tree.d, tree.k, p, psi, J_terms(prof, p), phi,
                       Fraction(1) if perfect else phi, perfect)


def psi_bound(d: int, p: int, k: int) -> Fraction:
    """``C_{d,p} / (dk+1)`` with ``C_{d,p} = (d^p - 1)/(d - 1)``."""
    return Fraction(d ** p - 1, (d - 1) * (d * k + 1))


def sup_bound(d: int, p: int, k: int) -> mpmath.mpf:
    """``exp(-log^2 k / (4 p log d))``, valid for ``k >= d^{6p}``."""
    return mpmath.exp(-mpmath.log(k) ** 2 / (4 * p * mpmath.log(d)))


# ---------------------------------------------------------------------------
# Norms
# ---------------------------------------------------------------------------

WHICH = ("psi", "phi", "phi_star")


@dataclass(frozen=True)
class NormReport:
    d: int
    k: int
    p: int
    which: str
    l1: Fraction
    linf: Fraction
    trees: int

    def to_json(self) -> dict:
        return {
            "mode": "exact", "d": self.d, "k": self.k, "p": self.p, "which": self.which,
            "trees": self.trees, "l1": _frac(self.l1), "linf": _frac(self.linf),
            "approx": {"l1": float(self.l1), "linf": float(self.linf)},
        }


def _value(rec: WidthRecord, which: str) -> Fraction:
    if which not in WHICH:
        raise InvalidParameter(f"unknown function {which!r}; expected one of {WHICH}")
    return getattr(rec, which)


def approximation_norms(d: int, k: int, p: int, which: str = "phi_star",
                        cap: int | None = DEFAULT_CAP) -> NormReport:
    total = Fraction(0)
    worst = Fraction(0)
    count = 0
    for enc in iter_encodings(d, k, cap):
        dev = abs(1 - _value(width_functions(CatalanTree(d, enc), p), which))
        total += dev
        worst = max(worst, dev)
        count += 1
    return NormReport(d, k, p, which, total / count, worst, count)


Z99 = 2.5758293035489004  # two-sided 99% normal quantile


@dataclass(frozen=True)
class SampledNormReport:
    d: int
    k: int
    p: int
    which: str
    trials: int
    seed: int
    mean: float
    radius: float
    max_seen: float
    sup_bound: float | None

    def to_json(self) -> dict:
        return {
            "mode": "sampled", "d": self.d, "k": self.k, "p": self.p, "which": self.which,
            "trials": self.trials, "seed": self.seed,
            "approx": {"l1": self.mean, "l1_radius99": self.radius, "linf_seen": self.max_seen,
                       "sup_bound": self.sup_bound},
        }


def _sampled_devs(d, k, p, which, seed, block, count):
    rng = block_rng(seed, block)
    out = []
    for _ in range(count):
        rec = width_functions(CatalanTree(d, sample_encoding(d, k, rng)), p)
        out.append(abs(1 - _value(rec, which)))
    return out


def sampled_deviations(d: int, k: int, p: int, which: str, trials: int, seed: int,
                       workers: int = 1) -> list[Fraction]:
    parts = run_blocks(partial(_sampled_devs, d, k, p, which), trials, seed, workers)
    return [x for part in parts for x in part]


def approximation_norms_sampled(d: int, k: int, p: int, which: str, trials: int, seed: int,
                                workers: int = 1) -> SampledNormReport:
    devs = [float(x) for x in sampled_deviations(d, k, p, which, trials, seed, workers)]
    mean = sum(devs) / len(devs)
    var = sum((x - mean) ** 2 for x in devs) / max(len(devs) - 1, 1)
    # deviations lie in [0, 1]; fall back to the Bernoulli worst case when none vary
    radius = Z99 * math.sqrt(max(var, mean * (1 - mean)) / len(devs))
    bound = float(sup_bound(d, p, k)) if k >= d ** (6 * p) else None
    return SampledNormReport(d, k, p, which, trials, seed, mean, radius, max(devs), bound)


# ---------------------------------------------------------------------------
# Explicit decomposition of phi*
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Decomposition:
    d: int
    k: int
    p: int
    lam: dict[str, Fraction]
    residual: dict[str, Fraction]

    @property
    def exact(self) -> bool:
        return all(v == 0 for v in self.residual.values())

    def to_json(self) -> dict:
        return {
            "d": self.d, "k": self.k, "p": self.p, "exact": self.exact,
            "lambda": [{"key": key, **_frac(v)} for key, v in self.lam.items()],
            "residual": [{"enc": enc, **_frac(v)} for enc, v in self.residual.items()],
        }


def vertex_coefficient(height: int, profile: GenerationProfile, p: int) -> Fraction:
    """Weight on the class of a vertex at ``height``: ``sum_m chi_m / (dk+1)^m``
    over ``m`` with ``m(p-1) + 1 <= height``; ``chi_m`` only sees generations
    ``0..height-p``, so it is constant on the class."""
    total = profile.total
    if p == 1:
        return Fraction(1, total - 1)
    out = Fraction(0)
    m = 1
    while m * (p - 1) + 1 <= height:
        out += Fraction(chi(profile, m, p), total ** m)
        m += 1
    return out


def span_decomposition_of_phi_star(d: int, k: int, p: int, cap: int | None = DEFAULT_CAP) -> Decomposition:
    if p < 1:
        raise InvalidParameter(f"p must be >= 1, got {p}")
    trees = list(iter_encodings(d, k, cap))
    cat = shuffle_catalogue(d, k, p, cap)
    lam: dict[str, Fraction] = {}
    # phi: one term per (vertex code, class) pair
    for code, key in sorted(set((code, key) for (_, code), key in cat.incidence.items())):
        prof = CatalanTree(d, cat.classes[key].members[0]).profile()
        c = vertex_coefficient(len(code), prof, p)
        if c:
            lam[key] = lam.get(key, Fraction(0)) + c
    # (1 - phi) on the singleton class of each p-perfect tree
    for enc in trees:
        tree = CatalanTree(d, enc)
        perfect, witness = is_p_perfect(tree, p)
        if perfect:
            key = cat.incidence[(enc, witness)]
            assert cat.classes[key].members == (enc,)
            gap = phi_product(tree.profile(), p)
            if gap:
                lam[key] = lam.get(key, Fraction(0)) + gap
    lam = {key: v for key, v in sorted(lam.items()) if v}
    value = {enc: Fraction(0) for enc in trees}
    for key, v in lam.items():
        for enc in cat.classes[key].members:
            value[enc] += v
    residual = {enc: width_functions(CatalanTree(d, enc), p).phi_star - value[enc] for enc in trees}
    return Decomposition(d, k, p, lam, residual)
