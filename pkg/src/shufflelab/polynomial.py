"""Sparse multivariate polynomials over Q and truncated power-series maps."""

from __future__ import annotations

from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass
from fractions import Fraction

from .errors import InvalidParameter

Monomial = tuple[int, ...]


def _as_fraction(c) -> Fraction:
    return c if isinstance(c, Fraction) else Fraction(c)


class Poly:
    """Polynomial in ``n`` variables stored as ``{exponent tuple: Fraction}``."""

    __slots__ = ("n", "terms")

    def __init__(self, n: int, terms: Mapping[Monomial, object] | None = None):
        self.n = n
        self.terms: dict[Monomial, Fraction] = {}
        for mono, c in (terms or {}).items():
            mono = tuple(mono)
            if len(mono) != n:
                raise InvalidParameter(f"monomial {mono} has length != {n}")
            c = _as_fraction(c)
            if c:
                self.terms[mono] = self.terms.get(mono, Fraction(0)) + c
                if not self.terms[mono]:
                    del self.terms[mono]

    @classmethod
    def zero(cls, n: int) -> "Poly":
        return cls(n)

    @classmethod
    def constant(cls, n: int, c) -> "Poly":
        return cls(n, {(0,) * n: c})

    @classmethod
    def var(cls, n: int, j: int) -> "Poly":
        """The coordinate ``X_j`` (1-based)."""
        mono = [0] * n
        mono[j - 1] = 1
        return cls(n, {tuple(mono): 1})

    def copy(self) -> "Poly":
        out = Poly(self.n)
        out.terms = dict(self.terms)
        return out

    # -- inspection -------------------------------------------------------

    def coefficient(self, mono: Sequence[int]) -> Fraction:
        return self.terms.get(tuple(mono), Fraction(0))

    def is_zero(self) -> bool:
        return not self.terms

    def degree(self) -> int:
        return max((sum(m) for m in self.terms), default=-1)

    def min_degree(self) -> int:
        return min((sum(m) for m in self.terms), default=-1)

    def homogeneous_part(self, m: int) -> "Poly":
        out = Poly(self.n)
        out.terms = {mono: c for mono, c in self.terms.items() if sum(mono) == m}
        return out

    def truncate(self, D: int) -> "Poly":
        out = Poly(self.n)
        out.terms = {mono: c for mono, c in self.terms.items() if sum(mono) <= D}
        return out

    def items(self) -> list[tuple[Monomial, Fraction]]:
        return sorted(self.terms.items())

    def __eq__(self, other) -> bool:
        if isinstance(other, Poly):
            return self.n == other.n and self.terms == other.terms
        if other == 0:
            return not self.terms
        return NotImplemented

    def __repr__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for mono, c in self.items():
            xs = "*".join(f"x{j + 1}^{e}" if e > 1 else f"x{j + 1}" for j, e in enumerate(mono) if e)
            parts.append(f"{c}*{xs}" if xs else str(c))
        return " + ".join(parts)

    # -- arithmetic -------------------------------------------------------

    def __add__(self, other) -> "Poly":
        other = other if isinstance(other, Poly) else Poly.constant(self.n, other)
        out = self.copy()
        for mono, c in other.terms.items():
            v = out.terms.get(mono, Fraction(0)) + c
            if v:
                out.terms[mono] = v
            else:
                out.terms.pop(mono, None)
        return out

    __radd__ = __add__

    def __neg__(self) -> "Poly":
        out = Poly(self.n)
        out.terms = {m: -c for m, c in self.terms.items()}
        return out

    def __sub__(self, other) -> "Poly":
        other = other if isinstance(other, Poly) else Poly.constant(self.n, other)
        return self + (-other)

    def scale(self, c) -> "Poly":
        c = _as_fraction(c)
        out = Poly(self.n)
        if c:
            out.terms = {m: v * c for m, v in self.terms.items()}
        return out

    def mul(self, other: "Poly", D: int | None = None) -> "Poly":
        """Product, dropping monomials of degree above ``D`` when given."""
        out: dict[Monomial, Fraction] = {}
        for ma, ca in self.terms.items():
            da = sum(ma)
            for mb, cb in other.terms.items():
                if D is not None and da + sum(mb) > D:
                    continue
                mono = tuple(x + y for x, y in zip(ma, mb))
                out[mono] = out.get(mono, Fraction(0)) + ca * cb
        res = Poly(self.n)
        res.terms = {m: c for m, c in out.items() if c}
        return res

    def __mul__(self, other) -> "Poly":
        if isinstance(other, Poly):
            return self.mul(other)
        return self.scale(other)

    __rmul__ = __mul__

    def diff(self, j: int) -> "Poly":
        """Partial derivative in ``X_j`` (1-based)."""
        out = Poly(self.n)
        for mono, c in self.terms.items():
            e = mono[j - 1]
            if e:
                m = list(mono)
                m[j - 1] -= 1
                out.terms[tuple(m)] = c * e
        return out

    def compose(self, subs: Sequence["Poly"], D: int | None = None) -> "Poly":
        """Substitute ``X_j -> subs[j-1]``, truncating at degree ``D`` eagerly."""
        if len(subs) != self.n:
            raise InvalidParameter("need one substitution per variable")
        m = subs[0].n if subs else self.n
        powers: list[list[Poly]] = [[Poly.constant(m, 1)] for _ in subs]

        def power(j: int, e: int) -> Poly:
            row = powers[j]
            while len(row) <= e:
                row.append(row[-1].mul(subs[j], D))
            return row[e]

        out = Poly(m)
        for mono, c in self.items():
            term = Poly.constant(m, c)
            for j, e in enumerate(mono):
                if e:
                    term = term.mul(power(j, e), D)
                    if term.is_zero():
                        break
            out = out + term
        return out


def polymatmul(a: Sequence[Sequence[Poly]], b: Sequence[Sequence[Poly]]) -> list[list[Poly]]:
    rows, inner, cols = len(a), len(b), len(b[0])
    n = a[0][0].n
    out = []
    for i in range(rows):
        row = []
        for j in range(cols):
            acc = Poly(n)
            for t in range(inner):
                if a[i][t].terms and b[t][j].terms:
                    acc = acc + a[i][t].mul(b[t][j])
            row.append(acc)
        out.append(row)
    return out


@dataclass(frozen=True)
class TruncatedSeriesMap:
    """``(F_1, ..., F_n)`` with every component truncated at total degree ``D``."""

    n: int
    D: int
    components: tuple[Poly, ...]

    def __post_init__(self):
        if len(self.components) != self.n:
            raise InvalidParameter(f"expected {self.n} components")
        object.__setattr__(self, "components", tuple(c.truncate(self.D) for c in self.components))

    @classmethod
    def identity(cls, n: int, D: int) -> "TruncatedSeriesMap":
        return cls(n, D, tuple(Poly.var(n, i) for i in range(1, n + 1)))

    @classmethod
    def from_terms(cls, n: int, D: int, terms: Mapping[tuple[int, Monomial], object]) -> "TruncatedSeriesMap":
        comps = [dict() for _ in range(n)]
        for (i, alpha), c in terms.items():
            comps[i - 1][tuple(alpha)] = c
        return cls(n, D, tuple(Poly(n, t) for t in comps))

    def coefficient(self, i: int, alpha: Sequence[int]) -> Fraction:
        return self.components[i - 1].coefficient(alpha)

    def linear_part(self) -> list[list[Fraction]]:
        L = []
        for comp in self.components:
            row = []
            for j in range(self.n):
                e = [0] * self.n
                e[j] = 1
                row.append(comp.coefficient(e))
            L.append(row)
        return L

    def constant_terms(self) -> list[Fraction]:
        return [c.coefficient((0,) * self.n) for c in self.components]

    def compose(self, inner: "TruncatedSeriesMap", D: int | None = None) -> "TruncatedSeriesMap":
        """``self o inner`` through degree ``min(D_self, D_inner)`` (or ``D``)."""
        D = min(self.D, inner.D) if D is None else D
        return TruncatedSeriesMap(self.n, D, tuple(c.compose(inner.components, D) for c in self.components))

    def truncate(self, D: int) -> "TruncatedSeriesMap":
        return TruncatedSeriesMap(self.n, D, self.components)

    def __sub__(self, other: "TruncatedSeriesMap") -> "TruncatedSeriesMap":
        D = min(self.D, other.D)
        return TruncatedSeriesMap(self.n, D, tuple(a - b for a, b in zip(self.components, other.components)))

    def is_zero(self) -> bool:
        return all(c.is_zero() for c in self.components)

    def __eq__(self, other) -> bool:
        if not isinstance(other, TruncatedSeriesMap):
            return NotImplemented
        return self.n == other.n and self.D == other.D and all(a == b for a, b in zip(self.components, other.components))

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "D": self.D,
            "components": [
                {
                    "i": i,
                    "terms": [
                        {"alpha": list(mono), "num": str(c.numerator), "den": str(c.denominator)}
                        for mono, c in comp.items()
                    ],
                }
                for i, comp in enumerate(self.components, start=1)
            ],
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "TruncatedSeriesMap":
        n, D = int(data["n"]), int(data["D"])
        comps = [Poly(n) for _ in range(n)]
        for entry in data["components"]:
            terms = {tuple(int(x) for x in t["alpha"]): Fraction(int(t["num"]), int(t["den"])) for t in entry["terms"]}
            comps[int(entry["i"]) - 1] = Poly(n, terms)
        return cls(n, D, tuple(comps))


def monomials_of_degree(n: int, m: int) -> Iterable[Monomial]:
    """All exponent vectors of total degree ``m``, in lexicographic order."""
    if n == 1:
        yield (m,)
        return
    for first in range(m, -1, -1):
        for rest in monomials_of_degree(n - 1, m - first):
            yield (first,) + rest
