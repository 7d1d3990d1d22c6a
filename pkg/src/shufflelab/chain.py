"""p-shuffle Markov chains on ``C_k^(d)``.

From tree ``T`` the chain picks a vertex ``v`` of height at least ``p``
with probability ``P_T(v)`` and moves to a uniform member of the shuffle
class through ``v``:

    K(T, T') = sum_v P_T(v) * 1{T' in Sh(T, v)} / #Sh(T, v).
"""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass
from fractions import Fraction

import networkx as nx

from .errors import ChainUndefined, InvalidParameter
from .linalg import check_farkas, phase_one, row_reduce
from .shuffle import ShuffleCatalogue, eligible_vertices, shuffle_catalogue
from .span import ExactMatrix, SpanCertificate, verify_certificate
from .trees import DEFAULT_CAP, CatalanTree, Code, iter_encodings


def _frac(x: Fraction) -> dict:
    return {"num": str(x.numerator), "den": str(x.denominator)}


def _code_str(code: Code) -> str:
    return ".".join(map(str, code))


@dataclass(frozen=True)
class VertexRule:
    """``P_T`` for every tree, as ``{enc: {vertex code: mass}}``."""

    d: int
    k: int
    p: int
    masses: dict[str, dict[Code, Fraction]]

    def validate(self, trees: list[str]) -> None:
        for enc in trees:
            row = self.masses.get(enc)
            if not row:
                raise InvalidParameter(f"rule has no mass for tree {enc}")
            if sum(row.values(), Fraction(0)) != 1:
                raise InvalidParameter(f"masses for {enc} do not sum to 1")
            for code, m in row.items():
                if m < 0:
                    raise InvalidParameter(f"negative mass at {enc}/{_code_str(code)}")
                if m and len(code) < self.p:
                    raise InvalidParameter(f"mass at {enc}/{_code_str(code)} below height {self.p}")

    def to_json(self) -> dict:
        return {
            "d": self.d, "k": self.k, "p": self.p,
            "rule": {enc: [{"vertex": _code_str(c), **_frac(m)} for c, m in sorted(row.items()) if m]
                     for enc, row in self.masses.items()},
        }


def _check_defined(d: int, p: int, trees: list[str]) -> None:
    for enc in trees:
        h = CatalanTree(d, enc).height
        if h < p:
            raise ChainUndefined(enc, h, p)


def uniform_rule(d: int, k: int, p: int, cap: int | None = DEFAULT_CAP) -> VertexRule:
    """Uniform over the eligible vertices of each tree."""
    trees = list(iter_encodings(d, k, cap))
    _check_defined(d, p, trees)
    masses = {}
    for enc in trees:
        t = CatalanTree(d, enc)
        elig = eligible_vertices(t, p)
        masses[enc] = {t.codes[i]: Fraction(1, len(elig)) for i in elig}
    return VertexRule(d, k, p, masses)


@dataclass(frozen=True)
class ShuffleKernel:
    d: int
    k: int
    p: int
    trees: tuple[str, ...]
    rows: tuple[dict[int, Fraction], ...]  # sparse rows, column = tree index

    def entry(self, i: int, j: int) -> Fraction:
        return self.rows[i].get(j, Fraction(0))

    def is_stochastic(self) -> bool:
        return all(sum(row.values(), Fraction(0)) == 1 and all(v >= 0 for v in row.values())
                   for row in self.rows)

    def is_identity(self) -> bool:
        return all(row == {i: 1} for i, row in enumerate(self.rows))

    def reversal_closed(self) -> bool:
        return all(self.rows[j].get(i, 0) > 0 for i, row in enumerate(self.rows) for j in row if row[j])

    def apply_left(self, pi: Mapping[int, Fraction]) -> dict[int, Fraction]:
        """``pi K`` for a sparse row vector."""
        out: dict[int, Fraction] = {}
        for i, w in pi.items():
            for j, v in self.rows[i].items():
                out[j] = out.get(j, Fraction(0)) + w * v
        return {j: v for j, v in sorted(out.items()) if v}

    def graph(self) -> nx.DiGraph:
        g = nx.DiGraph()
        g.add_nodes_from(range(len(self.trees)))
        g.add_edges_from((i, j) for i, row in enumerate(self.rows) for j, v in row.items() if v)
        return g

    def to_json(self) -> dict:
        return {
            "d": self.d, "k": self.k, "p": self.p, "trees": list(self.trees),
            "rows": [{"enc": self.trees[i],
                      "entries": [{"enc": self.trees[j], **_frac(v)} for j, v in sorted(row.items())]}
                     for i, row in enumerate(self.rows)],
        }


def build_kernel(d: int, k: int, p: int, rule: VertexRule | None = None,
                 cap: int | None = DEFAULT_CAP, catalogue: ShuffleCatalogue | None = None) -> ShuffleKernel:
    trees = list(iter_encodings(d, k, cap))
    _check_defined(d, p, trees)
    rule = uniform_rule(d, k, p, cap) if rule is None else rule
    rule.validate(trees)
    cat = shuffle_catalogue(d, k, p, cap) if catalogue is None else catalogue
    index = {enc: i for i, enc in enumerate(trees)}
    rows = []
    for enc in trees:
        row: dict[int, Fraction] = {}
        for code, m in rule.masses[enc].items():
            if not m:
                continue
            cls = cat.class_of(enc, code)
            share = m / cls.size
            for other in cls.members:
                j = index[other]
                row[j] = row.get(j, Fraction(0)) + share
        rows.append(dict(sorted(row.items())))
    kernel = ShuffleKernel(d, k, p, tuple(trees), tuple(rows))
    assert kernel.is_stochastic()
    return kernel


# ---------------------------------------------------------------------------
# Stationary distributions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StationaryReport:
    kernel: ShuffleKernel
    classes: tuple[dict[int, Fraction], ...]  # one stationary law per closed communicating class
    transient: tuple[int, ...]

    @property
    def irreducible(self) -> bool:
        return len(self.classes) == 1 and not self.transient and len(self.classes[0]) == len(self.kernel.trees)

    @property
    def verified(self) -> bool:
        return all(self.kernel.apply_left(pi) == pi and sum(pi.values()) == 1 for pi in self.classes)

    def is_uniform(self) -> bool:
        """Irreducible with the uniform law as its unique stationary distribution."""
        n = len(self.kernel.trees)
        return self.irreducible and all(v == Fraction(1, n) for v in self.classes[0].values())

    def fixes_uniform(self) -> bool:
        """Whether the uniform law is stationary (possibly among others)."""
        n = len(self.kernel.trees)
        uniform = {i: Fraction(1, n) for i in range(n)}
        return self.kernel.apply_left(uniform) == uniform

    def to_json(self) -> dict:
        t = self.kernel.trees
        return {
            "d": self.kernel.d, "k": self.kernel.k, "p": self.kernel.p,
            "irreducible": self.irreducible, "uniform": self.is_uniform(),
            "fixes_uniform": self.fixes_uniform(), "verified": self.verified,
            "classes": [[{"enc": t[i], **_frac(v)} for i, v in pi.items()] for pi in self.classes],
            "transient": [t[i] for i in self.transient],
        }


def _solve_closed(K: ShuffleKernel, members: list[int]) -> dict[int, Fraction]:
    m = len(members)
    pos = {v: c for c, v in enumerate(members)}
    rhs = m
    rows = []
    for c, j in enumerate(members):
        row = {pos[i]: K.entry(i, j) for i in members if K.entry(i, j)}
        row[c] = row.get(c, Fraction(0)) - 1
        rows.append({a: b for a, b in row.items() if b})
    rows.append({**{c: 1 for c in range(m)}, rhs: 1})
    sol = row_reduce(rows, range(m)).solution(rhs)
    if sol is None:
        raise ArithmeticError("stationary system is inconsistent")
    return {members[c]: v for c, v in sorted(sol.items()) if v}


def stationary_distribution(K: ShuffleKernel) -> StationaryReport:
    g = K.graph()
    comps = sorted((sorted(c) for c in nx.strongly_connected_components(g)), key=lambda c: c[0])
    closed, transient = [], []
    for comp in comps:
        inside = set(comp)
        if all(j in inside for i in comp for j in K.rows[i]):
            closed.append(_solve_closed(K, comp))
        else:
            transient.extend(comp)
    report = StationaryReport(K, tuple(closed), tuple(sorted(transient)))
    if not report.verified:
        raise AssertionError("stationary solution failed pi K = pi")
    return report


# ---------------------------------------------------------------------------
# Uniform-stationarity LP
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FeasibilityResult:
    d: int
    k: int
    p: int
    feasible: bool
    rule: VertexRule | None
    lam: dict[str, Fraction] | None
    certificate: dict[str, Fraction] | None  # constraint name -> Farkas multiplier
    pivots: int

    def to_json(self) -> dict:
        out = {"d": self.d, "k": self.k, "p": self.p,
               "status": "feasible" if self.feasible else "infeasible", "pivots": self.pivots}
        if self.rule is not None:
            out["rule"] = self.rule.to_json()["rule"]
            out["lambda"] = [{"key": key, **_frac(v)} for key, v in self.lam.items()]
        if self.certificate is not None:
            out["certificate"] = [{"constraint": c, **_frac(v)} for c, v in self.certificate.items()]
        return out


def lambda_from_rule(rule: VertexRule, cat: ShuffleCatalogue) -> dict[str, Fraction]:
    """``lambda_S = sum over (T, v) through S of P_T(v) / #S``."""
    lam: dict[str, Fraction] = {}
    for enc, row in rule.masses.items():
        for code, m in row.items():
            if m:
                key = cat.incidence[(enc, code)]
                lam[key] = lam.get(key, Fraction(0)) + m / cat.classes[key].size
    return dict(sorted(lam.items()))


def uniform_feasibility(d: int, k: int, p: int, cap: int | None = DEFAULT_CAP,
                        max_pivots: int | None = None) -> FeasibilityResult:
    """Search for a vertex rule whose kernel fixes the uniform distribution.

    Masses are only required to be nonnegative, so a feasible rule may put
    zero weight on some eligible vertices.
    """
    trees = list(iter_encodings(d, k, cap))
    _check_defined(d, p, trees)
    cat = shuffle_catalogue(d, k, p, cap)
    index = {enc: i for i, enc in enumerate(trees)}
    variables = [(enc, code) for enc in trees
                 for code in (CatalanTree(d, enc).codes[i] for i in eligible_vertices(CatalanTree(d, enc), p))]
    n = len(trees)
    A = [[Fraction(0)] * len(variables) for _ in range(2 * n)]
    for col, (enc, code) in enumerate(variables):
        A[index[enc]][col] = Fraction(1)
        cls = cat.class_of(enc, code)
        for other in cls.members:
            A[n + index[other]][col] += Fraction(1, cls.size)
    b = [Fraction(1)] * (2 * n)
    res = phase_one(A, b, max_pivots)
    if res.feasible:
        masses: dict[str, dict[Code, Fraction]] = {enc: {} for enc in trees}
        for (enc, code), x in zip(variables, res.x):
            masses[enc][code] = x
        rule = VertexRule(d, k, p, masses)
        K = build_kernel(d, k, p, rule, cap, cat)
        uniform = {i: Fraction(1, n) for i in range(n)}
        if K.apply_left(uniform) != uniform:
            raise AssertionError("LP rule does not fix the uniform distribution")
        lam = lambda_from_rule(rule, cat)
        cert = SpanCertificate("member", d, k, p, lam)
        if not verify_certificate(cert, ExactMatrix.from_catalogue(cat, trees)):
            raise AssertionError("lambda extracted from the rule does not sum to 1")
        return FeasibilityResult(d, k, p, True, rule, lam, None, res.pivots)
    if not check_farkas(A, b, res.certificate):
        raise AssertionError("Farkas certificate failed verification")
    names = [f"mass:{enc}" for enc in trees] + [f"balance:{enc}" for enc in trees]
    cert = {name: y for name, y in zip(names, res.certificate) if y}
    return FeasibilityResult(d, k, p, False, None, None, cert, res.pivots)
