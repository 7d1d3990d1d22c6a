"""Exact uniform sampling of d-Catalan trees, p-perfect statistics, and
multi-type Galton-Watson trees.

Uniform sampling is top-down: a vertex that must carry ``m`` internal
vertices draws the sizes ``(k_1, ..., k_d)`` of its child subtrees with
probability ``C_{k_1} ... C_{k_d} / C_m``.  The joint draw is made one child
at a time from exact integer marginals (forest counts), so the output law is
exactly uniform on ``C_k^(d)``.

Randomness comes from :class:`random.Random` (MT19937), which is
deterministic across platforms for a given seed.  Monte-Carlo loops split
their trials into fixed-size blocks with one stream per block, so results
depend on the seed but not on how many worker processes ran the blocks.
"""

from __future__ import annotations

import math
import random
from bisect import bisect_right
from collections.abc import Iterator
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import partial

import mpmath

from .errors import InvalidParameter
from .trees import DEFAULT_CAP, CatalanTree, Code, catalan_number, catalan_table, iter_encodings

BLOCK = 4096


def block_rng(seed: int, block: int) -> random.Random:
    return random.Random(f"shufflelab:{seed}:{block}")


def _make_rng(seed) -> random.Random:
    return seed if isinstance(seed, random.Random) else random.Random(seed)


def run_blocks(worker, trials: int, seed: int, workers: int = 1) -> list:
    """Run ``worker(seed, block, count)`` over all blocks of ``trials``."""
    tasks = []
    for b in range(0, math.ceil(trials / BLOCK)):
        tasks.append((b, min(BLOCK, trials - b * BLOCK)))
    if workers <= 1 or len(tasks) <= 1:
        return [worker(seed, b, n) for b, n in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(worker, seed, b, n) for b, n in tasks]
        return [f.result() for f in futures]


# ---------------------------------------------------------------------------
# Split distribution
# ---------------------------------------------------------------------------


def _compositions(total: int, parts: int) -> Iterator[tuple[int, ...]]:
    if parts == 0:
        if total == 0:
            yield ()
        return
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


@dataclass(frozen=True)
class SplitDistribution:
    d: int
    k: int

    def masses(self) -> dict[tuple[int, ...], Fraction]:
        if self.k < 1:
            raise InvalidParameter("split distribution needs k >= 1")
        c = catalan_table(self.d, self.k)
        out = {}
        for comp in _compositions(self.k - 1, self.d):
            w = 1
            for x in comp:
                w *= c[x]
            out[comp] = Fraction(w, c[self.k])
        return out


def forest_count(d: int, r: int, j: int) -> int:
    """Ordered forests of ``r`` d-ary trees with ``j`` internal vertices in total."""
    if r == 0:
        return 1 if j == 0 else 0
    return r * math.comb(d * j + r, j) // (d * j + r)


_FORESTS: dict[tuple[int, int], list[int]] = {}


def forest_table(d: int, r: int, jmax: int) -> list[int]:
    """Memoized ``[F_r(0), ..., F_r(jmax)]``; the list may run longer."""
    table = _FORESTS.get((d, r))
    if table is None:
        # keep binom(dj + r, j) alongside; its ratio has only small factors
        table = _FORESTS[(d, r)] = [forest_count(d, r, 0)]
        _BINOMS[(d, r)] = 1
    b = _BINOMS[(d, r)]
    while len(table) <= jmax:
        j = len(table) - 1
        n = d * j + r
        num = 1
        for t in range(1, d + 1):
            num *= n + t
        den = j + 1
        for t in range(1, d):
            den *= n - j + t
        b = b * num // den
        table.append(r * b // (n + d) if r else 0)
    _BINOMS[(d, r)] = b
    return table


_BINOMS: dict[tuple[int, int], int] = {}
_MARGINALS: dict[tuple[int, int, int], list[int]] = {}
_TABLE_MAX_R = 256


def _marginal_table(d: int, r: int, total: int) -> list[int]:
    key = (d, r, total)
    hit = _MARGINALS.get(key)
    if hit is None:
        c = catalan_table(d, total)
        f = forest_table(d, r - 1, total)
        cum, acc = [], 0
        for a in range(total + 1):
            acc += c[a] * f[total - a]
            cum.append(acc)
        hit = _MARGINALS[key] = cum
    return hit


def _draw_first(d: int, r: int, total: int, rng: random.Random, c: list[int]) -> int:
    """Size of the first of ``r`` sibling subtrees sharing ``total`` internal vertices.

    ``P(a) = C_a F_{r-1}(total - a) / F_r(total)``; chaining these draws over
    the children reproduces the joint split law exactly.
    """
    if r == 1:
        return total
    if total <= _TABLE_MAX_R:
        cum = _marginal_table(d, r, total)
        return bisect_right(cum, rng.randrange(cum[-1]))
    f = forest_table(d, r - 1, total)
    x = rng.randrange(forest_table(d, r, total)[total])
    # Mass sits near the two ends, so scan 0, total, 1, total - 1, ...
    acc = 0
    lo, hi = 0, total
    while lo <= hi:
        acc += c[lo] * f[total - lo]
        if x < acc:
            return lo
        if hi != lo:
            acc += c[hi] * f[total - hi]
            if x < acc:
                return hi
        lo += 1
        hi -= 1
    raise AssertionError("marginal masses did not sum to the forest count")


def sample_split(d: int, m: int, rng: random.Random) -> tuple[int, ...]:
    """Draw child subtree sizes for a vertex carrying ``m >= 1`` internal vertices."""
    return _split(d, m, rng, catalan_table(d, m))


def _split(d: int, m: int, rng: random.Random, c: list[int]) -> tuple[int, ...]:
    rest = m - 1
    out = []
    for r in range(d, 0, -1):
        a = _draw_first(d, r, rest, rng, c)
        out.append(a)
        rest -= a
    return tuple(out)


def sample_encoding(d: int, k: int, rng: random.Random) -> str:
    c = catalan_table(d, k)
    out = []
    stack = [k]
    while stack:
        m = stack.pop()
        if m == 0:
            out.append("0")
        else:
            out.append("1")
            stack.extend(reversed(_split(d, m, rng, c)))
    return "".join(out)


def sample_uniform(d: int, k: int, seed=None) -> CatalanTree:
    if d < 2 or k < 0:
        raise InvalidParameter(f"need d >= 2 and k >= 0, got d={d}, k={k}")
    return CatalanTree(d, sample_encoding(d, k, _make_rng(seed)))


# ---------------------------------------------------------------------------
# Perfect paths
# ---------------------------------------------------------------------------


def perfect_runs(tree: CatalanTree) -> list[int]:
    """For each vertex, the length of the longest path ending there whose
    off-path siblings are all leaves."""
    enc = tree.enc
    run = [0] * tree.size
    for i in range(tree.size):
        if enc[i] == "0":
            continue
        kids = tree.children(i)
        internal = [c for c in kids if enc[c] == "1"]
        if not internal:
            for c in kids:
                run[c] = run[i] + 1
        elif len(internal) == 1:
            run[internal[0]] = run[i] + 1
    return run


def is_p_perfect(tree: CatalanTree, p: int) -> tuple[bool, Code | None]:
    """Whether ``tree`` has a length-``p`` path with only leaves off it.

    The witness is the code of the path's last vertex.
    """
    if p < 1:
        raise InvalidParameter(f"p must be >= 1, got {p}")
    for i, r in enumerate(perfect_runs(tree)):
        if r >= p:
            return True, tree.codes[i]
    return False, None


def max_perfect_length(tree: CatalanTree | str, d: int | None = None) -> int:
    """Length of the longest perfect path, from one reverse scan of the encoding.

    ``down(v)`` is the longest perfect path starting at ``v``: 1 when every
    child is a leaf, ``1 + down(c)`` when ``c`` is the only internal child,
    and 0 otherwise.
    """
    if isinstance(tree, CatalanTree):
        enc, d = tree.enc, tree.d
    else:
        enc = tree
    stack: list[int] = []  # down(v), or -1 for a leaf
    best = 0
    for ch in reversed(enc):
        if ch == "0":
            stack.append(-1)
            continue
        kids = stack[-d:]
        del stack[-d:]
        inner = [x for x in kids if x >= 0]
        if not inner:
            val = 1
        elif len(inner) == 1:
            val = 1 + inner[0]
        else:
            val = 0
        if val > best:
            best = val
        stack.append(val)
    return best


def kappa(p: int, d: int) -> mpmath.mpf:
    return 1 / (2 * p * mpmath.mpf(d) ** p * mpmath.e**p)


def perfect_bound(d: int, p: int, k: int) -> mpmath.mpf:
    """Upper bound ``exp(-kappa_{p,d} (k-p)_+)`` on the non-perfect fraction."""
    return mpmath.exp(-kappa(p, d) * max(k - p, 0))


def within_perfect_bound(q: Fraction, d: int, p: int, k: int, dps: int = 50) -> bool:
    if k <= p:
        return q <= 1
    with mpmath.workdps(dps):
        return mpmath.mpf(q.numerator) / q.denominator <= perfect_bound(d, p, k)


def exact_Q(d: int, p: int, k: int, cap: int | None = DEFAULT_CAP) -> Fraction:
    """Fraction of ``C_k^(d)`` that is not ``p``-perfect, by enumeration."""
    if p < 1:
        raise InvalidParameter(f"p must be >= 1, got {p}")
    bad = 0
    for enc in iter_encodings(d, k, cap):
        if max_perfect_length(enc, d) < p:
            bad += 1
    return Fraction(bad, catalan_number(d, k))


@dataclass(frozen=True)
class PerfectStats:
    d: int
    p: int
    k: int
    trials: int
    seed: int
    hits: int

    @property
    def rate(self) -> Fraction:
        return Fraction(self.hits, self.trials)

    @property
    def bound(self) -> float:
        return float(perfect_bound(self.d, self.p, self.k))

    def sigma(self) -> float:
        b = self.bound
        return math.sqrt(b * (1 - b) / self.trials)


def _count_not_perfect(d, p, k, seed, block, n):
    rng = block_rng(seed, block)
    bad = 0
    for _ in range(n):
        if max_perfect_length(sample_encoding(d, k, rng), d) < p:
            bad += 1
    return bad


def estimate_Q(d: int, p: int, k: int, trials: int, seed: int, workers: int = 1) -> PerfectStats:
    if trials < 1:
        raise InvalidParameter("trials must be >= 1")
    if p < 1:
        raise InvalidParameter(f"p must be >= 1, got {p}")
    hits = sum(run_blocks(partial(_count_not_perfect, d, p, k), trials, seed, workers))
    return PerfectStats(d, p, k, trials, seed, hits)


@dataclass(frozen=True)
class RootLeafRate:
    d: int
    k: int
    trials: int
    seed: int
    hits: int
    exact: Fraction

    @property
    def empirical(self) -> Fraction:
        return Fraction(self.hits, self.trials) if self.trials else Fraction(0)


def rootchildren_exact(d: int, k: int) -> Fraction:
    """Probability that at least ``d-1`` root children are leaves."""
    if k < 1:
        raise InvalidParameter("k must be >= 1")
    if k == 1:
        return Fraction(1)
    return Fraction(d * catalan_number(d, k - 1), catalan_number(d, k))


def _count_rootchildren(d, k, seed, block, n):
    rng = block_rng(seed, block)
    hits = 0
    for _ in range(n):
        comp = sample_split(d, k, rng)
        if sum(1 for x in comp if x == 0) >= d - 1:
            hits += 1
    return hits


def rootchildren_leaf_rate(d: int, k: int, trials: int, seed: int, workers: int = 1) -> RootLeafRate:
    exact = rootchildren_exact(d, k)
    hits = sum(run_blocks(partial(_count_rootchildren, d, k), trials, seed, workers)) if trials else 0
    return RootLeafRate(d, k, trials, seed, hits, exact)


def thin_top(tree: CatalanTree, p: int) -> bool:
    """Generations ``1..p`` each contain at most one internal vertex."""
    counts = [0] * (p + 1)
    for i, h in enumerate(tree.depths):
        if 1 <= h <= p and tree.enc[i] == "1":
            counts[h] += 1
            if counts[h] > 1:
                return False
    return True


def _count_thin(d, p, k, seed, block, n):
    rng = block_rng(seed, block)
    return sum(thin_top(CatalanTree(d, sample_encoding(d, k, rng)), p) for _ in range(n))


def thin_top_rate(d: int, p: int, k: int, trials: int, seed: int, workers: int = 1) -> Fraction:
    hits = sum(run_blocks(partial(_count_thin, d, p, k), trials, seed, workers))
    return Fraction(hits, trials)


# ---------------------------------------------------------------------------
# Multi-type Galton-Watson trees
# ---------------------------------------------------------------------------

MultiIndex = tuple[int, ...]


@dataclass(frozen=True)
class OffspringDistribution:
    """Row ``i`` (types are 1-based) is a finite pmf over child-type vectors."""

    n: int
    rows: tuple[dict[MultiIndex, Fraction], ...]
    _samplers: list = field(init=False, repr=False, compare=False, default=None)

    def __post_init__(self):
        if len(self.rows) != self.n:
            raise InvalidParameter(f"expected {self.n} rows, got {len(self.rows)}")
        zero = (0,) * self.n
        samplers = []
        for i, row in enumerate(self.rows, start=1):
            total = Fraction(0)
            for alpha, mass in row.items():
                if len(alpha) != self.n or min(alpha) < 0:
                    raise InvalidParameter(f"bad multi-index {alpha} in row {i}")
                if not 0 <= mass <= 1:
                    raise InvalidParameter(f"mass {mass} of type {i} outside [0, 1]")
                total += mass
            if total != 1:
                raise InvalidParameter(f"row {i} sums to {total}, not 1")
            items = sorted((a, Fraction(m)) for a, m in row.items() if m)
            den = math.lcm(*(m.denominator for _, m in items))
            cum, acc = [], 0
            for _, m in items:
                acc += m.numerator * (den // m.denominator)
                cum.append(acc)
            samplers.append((den, cum, [a for a, _ in items]))
            row.setdefault(zero, Fraction(0))
        object.__setattr__(self, "_samplers", samplers)

    @classmethod
    def from_subprobability(cls, n: int, h: dict[tuple[int, MultiIndex], Fraction]) -> "OffspringDistribution":
        """Build rows from nonzero-alpha masses; the leaf mass is ``1 - sum``."""
        rows = [dict() for _ in range(n)]
        for (i, alpha), mass in h.items():
            if not any(alpha):
                raise InvalidParameter("leaf masses are implied; pass only alpha != 0")
            rows[i - 1][tuple(alpha)] = Fraction(mass)
        zero = (0,) * n
        for row in rows:
            row[zero] = 1 - sum(row.values(), Fraction(0))
        return cls(n, tuple(rows))

    def leaf_mass(self, i: int) -> Fraction:
        return self.rows[i - 1].get((0,) * self.n, Fraction(0))

    def draw(self, i: int, rng: random.Random) -> MultiIndex:
        den, cum, alphas = self._samplers[i - 1]
        return alphas[bisect_right(cum, rng.randrange(den))]

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "rows": [
                [{"alpha": list(a), "num": str(m.numerator), "den": str(m.denominator)}
                 for a, m in sorted(row.items()) if m]
                for row in self.rows
            ],
        }

    @classmethod
    def from_json(cls, data: dict) -> "OffspringDistribution":
        n = int(data["n"])
        rows = []
        for row in data["rows"]:
            rows.append({tuple(int(x) for x in e["alpha"]): Fraction(int(e["num"]), int(e["den"])) for e in row})
        return cls(n, tuple(rows))


@dataclass(frozen=True)
class GWTree:
    """Finite ordered n-type tree in preorder (children sorted by type)."""

    arity: tuple[int, ...]
    types: tuple[int, ...]
    n: int

    @property
    def leaftype(self) -> MultiIndex:
        out = [0] * self.n
        for a, t in zip(self.arity, self.types):
            if a == 0:
                out[t - 1] += 1
        return tuple(out)

    def to_json(self) -> dict:
        return {
            "enc": ",".join(map(str, self.arity)),
            "arity": list(self.arity),
            "types": list(self.types),
            "leaftype": list(self.leaftype),
        }


CAP_EXCEEDED = "cap-exceeded"


def sample_gw_multitype(offspring: OffspringDistribution, root_type: int, seed=None,
                        vertex_cap: int = 10_000):
    """Grow a Galton-Watson tree generation by generation.

    Returns a :class:`GWTree`, or :data:`CAP_EXCEEDED` when the tree grows
    past ``vertex_cap`` vertices; the latter is an outcome, not an error.
    """
    if not 1 <= root_type <= offspring.n:
        raise InvalidParameter(f"root type {root_type} not in 1..{offspring.n}")
    if vertex_cap < 1:
        raise InvalidParameter("vertex_cap must be >= 1")
    rng = _make_rng(seed)
    types = [root_type]
    kids: list[list[int]] = [[]]
    generation = [0]
    while generation:
        nxt = []
        for v in generation:
            mu = offspring.draw(types[v], rng)
            for j, count in enumerate(mu, start=1):
                for _ in range(count):
                    kids[v].append(len(types))
                    nxt.append(len(types))
                    types.append(j)
                    kids.append([])
            if len(types) > vertex_cap:
                return CAP_EXCEEDED
        generation = nxt
    arity, order = [], []
    stack = [0]
    while stack:
        v = stack.pop()
        order.append(types[v])
        arity.append(len(kids[v]))
        stack.extend(reversed(kids[v]))
    return GWTree(tuple(arity), tuple(order), offspring.n)
