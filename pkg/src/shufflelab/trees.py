"""d-Catalan trees: counting, canonical encoding, enumeration and profiles.

A tree is stored as its preorder kind string over ``{"0", "1"}`` (``1`` marks
an internal vertex, ``0`` a leaf) together with the degree ``d``; every other
view (children, depths, vertex codes) is derived lazily from the string.
Vertex codes follow the usual convention: the root has the empty code and the
children of the vertex with code ``u`` are ``u + (1,)``, ..., ``u + (d,)``.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass
from functools import cached_property, lru_cache
from pathlib import Path
from typing import Iterator, Sequence

import mpmath

from .errors import CapExceeded, InvalidParameter, MalformedEncoding

DEFAULT_CAP = 10**7

Code = tuple[int, ...]


def _check_degree(d: int) -> None:
    if not isinstance(d, int) or d < 2:
        raise InvalidParameter(f"degree must be an integer >= 2, got {d!r}")


def _check_size(k: int) -> None:
    if not isinstance(k, int) or k < 0:
        raise InvalidParameter(f"number of internal vertices must be >= 0, got {k!r}")


# ---------------------------------------------------------------------------
# Counting
# ---------------------------------------------------------------------------

_TABLES: dict[int, list[int]] = {}


def catalan_table(d: int, kmax: int) -> list[int]:
    """Return ``[C_0, ..., C_kmax]`` for degree ``d``.

    The table is memoized per degree and extended in place, so repeated calls
    while sampling large trees reuse the same big integers.
    """
    _check_degree(d)
    _check_size(kmax)
    table = _TABLES.setdefault(d, [1])
    if len(table) <= kmax:
        # Track B_j = binom(dj, j) and step it exactly.
        j = len(table) - 1
        b = math.comb(d * j, j)
        while len(table) <= kmax:
            num = 1
            for t in range(1, d + 1):
                num *= d * j + t
            den = j + 1
            for t in range(1, d):
                den *= (d - 1) * j + t
            b = b * num // den
            j += 1
            table.append(b // ((d - 1) * j + 1))
    return table[: kmax + 1]


CACHE_ENV = "SHUFFLELAB_CACHE_DIR"


def cached_catalan_table(d: int, kmax: int, cache_dir: str | os.PathLike | None = None) -> list[int]:
    """:func:`catalan_table` backed by a JSON file in ``cache_dir``
    (default ``$SHUFFLELAB_CACHE_DIR``; no caching when neither is set).

    A cached table is trusted only if its last entry matches the closed form.
    """
    cache_dir = cache_dir if cache_dir is not None else os.environ.get(CACHE_ENV)
    if not cache_dir:
        return catalan_table(d, kmax)
    _check_degree(d)
    _check_size(kmax)
    path = Path(cache_dir) / f"catalan-d{d}.json"
    try:
        stored = [int(x) for x in json.loads(path.read_text())["values"]]
    except (OSError, ValueError, KeyError, TypeError):
        stored = []
    last = len(stored) - 1
    if stored and stored[last] == math.comb(d * last, last) // ((d - 1) * last + 1):
        table = _TABLES.setdefault(d, [1])
        if len(table) < len(stored):
            table[:] = stored
        if last >= kmax:
            return stored[: kmax + 1]
    table = catalan_table(d, kmax)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(".tmp")
    tmp.write_text(json.dumps({"d": d, "values": [str(x) for x in table]}))
    os.replace(tmp, path)
    return table


def catalan_number(d: int, k: int) -> int:
    """Number of d-ary planar trees with ``k`` internal vertices."""
    _check_degree(d)
    _check_size(k)
    table = _TABLES.get(d)
    if table is not None and k < len(table):
        return table[k]
    if k > 64:
        return catalan_table(d, k)[k]
    return math.comb(d * k, k) // ((d - 1) * k + 1)


def catalan_by_convolution(d: int, kmax: int) -> list[int]:
    """Catalan numbers from ``C_k = sum C_{k_1} ... C_{k_d}`` over compositions.

    Independent of the closed form: the ``d``-fold convolution power of the
    running series is recomputed at every step.
    """
    _check_degree(d)
    _check_size(kmax)
    c = [1]
    for k in range(1, kmax + 1):
        # coefficient of x^(k-1) in (sum_j c_j x^j)^d, with x^j truncated at k-1
        power = [1] + [0] * (k - 1)
        for _ in range(d):
            nxt = [0] * k
            for a, pa in enumerate(power):
                if pa:
                    for b in range(k - a):
                        nxt[a + b] += pa * c[b]
            power = nxt
        c.append(power[k - 1])
    return c


def stirling_constants(d: int, dps: int = 30) -> tuple[mpmath.mpf, mpmath.mpf]:
    """Growth constants ``(A_d, C_d)`` with ``C_k ~ C_d k^{-3/2} e^{A_d k}``."""
    _check_degree(d)
    with mpmath.workdps(dps):
        a = d * mpmath.log(d) - (d - 1) * mpmath.log(d - 1)
        c = mpmath.sqrt(d) / (mpmath.sqrt(2 * mpmath.pi) * mpmath.mpf(d - 1) ** 1.5)
        return +a, +c


def stirling_ratio(d: int, k: int, dps: int = 30) -> mpmath.mpf:
    """``C_k k^{3/2} e^{-A_d k} / C_d``; tends to 1 as ``k`` grows."""
    with mpmath.workdps(dps):
        a, c = stirling_constants(d, dps)
        ck = mpmath.mpf(catalan_number(d, k))
        return ck * mpmath.mpf(k) ** 1.5 * mpmath.exp(-a * k) / c


# ---------------------------------------------------------------------------
# Trees
# ---------------------------------------------------------------------------


def validate_encoding(enc: str, d: int) -> int:
    """Check that ``enc`` is a complete preorder encoding; return ``k``."""
    _check_degree(d)
    if not isinstance(enc, str):
        raise MalformedEncoding("encoding must be a string", 0)
    slots = 1
    k = 0
    for pos, ch in enumerate(enc):
        if slots == 0:
            raise MalformedEncoding("trailing symbols after a complete tree", pos)
        if ch == "1":
            slots += d - 1
            k += 1
        elif ch == "0":
            slots -= 1
        else:
            raise MalformedEncoding(f"unexpected symbol {ch!r}", pos)
    if slots:
        raise MalformedEncoding(f"truncated encoding, {slots} subtree(s) missing", len(enc))
    return k


@dataclass(frozen=True)
class GenerationProfile:
    counts: tuple[int, ...]

    @property
    def height(self) -> int:
        return len(self.counts) - 1

    @property
    def total(self) -> int:
        return sum(self.counts)

    def at(self, j: int) -> int:
        return self.counts[j] if 0 <= j < len(self.counts) else 0

    def upto(self, q: int) -> int:
        """Vertices in generations ``0..q``."""
        if q < 0:
            return 0
        return sum(self.counts[: q + 1])

    def from_(self, q: int) -> int:
        """Vertices in generations ``q`` and deeper."""
        return sum(self.counts[max(q, 0):])


@dataclass(frozen=True)
class CatalanTree:
    """Immutable rooted planar d-ary tree."""

    d: int
    enc: str

    @classmethod
    def parse(cls, text: str, d: int) -> "CatalanTree":
        text = text.strip()
        validate_encoding(text, d)
        return cls(d, text)

    @classmethod
    def leaf(cls, d: int) -> "CatalanTree":
        return cls(d, "0")

    @classmethod
    def caterpillar(cls, d: int, k: int) -> "CatalanTree":
        """Spine descending through the first child; all other children leaves."""
        return cls(d, "1" * k + "0" * ((d - 1) * k + 1))

    @classmethod
    def from_json(cls, data: dict | str) -> "CatalanTree":
        if isinstance(data, str):
            data = json.loads(data)
        tree = cls.parse(data["enc"], int(data["d"]))
        if "k" in data and int(data["k"]) != tree.k:
            raise InvalidParameter(f"k={data['k']} does not match encoding (k={tree.k})")
        return tree

    def serialize(self) -> str:
        return self.enc

    def to_json(self) -> dict:
        return {"d": self.d, "k": self.k, "enc": self.enc}

    def __str__(self) -> str:
        return self.enc

    # -- derived structure ------------------------------------------------

    @cached_property
    def k(self) -> int:
        return self.enc.count("1")

    @property
    def size(self) -> int:
        return len(self.enc)

    @cached_property
    def _layout(self):
        enc, d = self.enc, self.d
        n = len(enc)
        parent = [-1] * n
        position = [0] * n
        depth = [0] * n
        children: list[tuple[int, ...]] = [()] * n
        open_: list[list[int]] = []
        pending: list[int] = []
        for i, ch in enumerate(enc):
            if open_:
                top = open_[-1]
                p = pending[-1]
                parent[i] = p
                position[i] = len(top) + 1
                depth[i] = depth[p] + 1
                top.append(i)
                if len(top) == d:
                    children[p] = tuple(top)
                    open_.pop()
                    pending.pop()
            if ch == "1":
                open_.append([])
                pending.append(i)
        end = [0] * n
        for i in range(n - 1, -1, -1):
            end[i] = end[children[i][-1]] if children[i] else i + 1
        return parent, position, depth, children, end

    @property
    def parent(self) -> list[int]:
        return self._layout[0]

    @property
    def depths(self) -> list[int]:
        return self._layout[2]

    def children(self, i: int) -> tuple[int, ...]:
        return self._layout[3][i]

    def is_leaf(self, i: int) -> bool:
        return self.enc[i] == "0"

    def subtree_span(self, i: int) -> tuple[int, int]:
        return i, self._layout[4][i]

    def subtree_enc(self, i: int) -> str:
        return self.enc[i : self._layout[4][i]]

    @cached_property
    def codes(self) -> tuple[Code, ...]:
        parent, position = self._layout[0], self._layout[1]
        out: list[Code] = []
        for i in range(len(self.enc)):
            out.append(() if parent[i] < 0 else out[parent[i]] + (position[i],))
        return tuple(out)

    @cached_property
    def _index(self) -> dict[Code, int]:
        return {c: i for i, c in enumerate(self.codes)}

    def index_of(self, code: Sequence[int]) -> int:
        try:
            return self._index[tuple(code)]
        except KeyError:
            raise InvalidParameter(f"code {tuple(code)} is not a vertex of {self.enc}") from None

    def has_code(self, code: Sequence[int]) -> bool:
        return tuple(code) in self._index

    @cached_property
    def height(self) -> int:
        return max(self._layout[2])

    def profile(self) -> GenerationProfile:
        return generation_profile(self)


def generation_profile(tree: CatalanTree) -> GenerationProfile:
    counts = [0] * (tree.height + 1)
    for h in tree.depths:
        counts[h] += 1
    return GenerationProfile(tuple(counts))


# ---------------------------------------------------------------------------
# Enumeration
# ---------------------------------------------------------------------------

_TABLE_LIMIT = 4096


@lru_cache(maxsize=None)
def _completions(d: int, r: int, s: int) -> int:
    """Number of strings completing a prefix with ``r`` internal vertices
    still to place and ``s`` open slots."""
    if s == 0:
        return 1 if r == 0 else 0
    total = _completions(d, r, s - 1)
    if r:
        total += _completions(d, r - 1, s - 1 + d)
    return total


@lru_cache(maxsize=None)
def _completion_list(d: int, r: int, s: int) -> tuple[str, ...]:
    if s == 0:
        return ("",) if r == 0 else ()
    out = ["0" + x for x in _completion_list(d, r, s - 1)]
    if r:
        out.extend("1" + x for x in _completion_list(d, r - 1, s - 1 + d))
    return tuple(out)


def _walk(d: int, prefix: str, r: int, s: int) -> Iterator[str]:
    if _completions(d, r, s) <= _TABLE_LIMIT:
        for tail in _completion_list(d, r, s):
            yield prefix + tail
        return
    # '0' sorts before '1', so this recursion emits in lexicographic order.
    if _completions(d, r, s - 1):
        yield from _walk(d, prefix + "0", r, s - 1)
    if r:
        yield from _walk(d, prefix + "1", r - 1, s - 1 + d)


def iter_encodings(d: int, k: int, cap: int | None = DEFAULT_CAP) -> Iterator[str]:
    """Encodings of all trees in ``C_k^(d)`` in lexicographic order."""
    _check_degree(d)
    _check_size(k)
    total = catalan_number(d, k)
    if cap is not None and total > cap:
        raise CapExceeded(total, cap)
    return _walk(d, "", k, 1)


def enumerate_trees(d: int, k: int, cap: int | None = DEFAULT_CAP) -> list[CatalanTree]:
    return [CatalanTree(d, e) for e in iter_encodings(d, k, cap)]


# ---------------------------------------------------------------------------
# Typed trees
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LabelledTree:
    """A d-Catalan tree with a type in ``1..n`` for every vertex (preorder)."""

    tree: CatalanTree
    types: tuple[int, ...]
    n: int

    def __post_init__(self):
        if len(self.types) != self.tree.size:
            raise InvalidParameter(f"{len(self.types)} types for {self.tree.size} vertices")
        if any(not 1 <= t <= self.n for t in self.types):
            raise InvalidParameter(f"types must lie in 1..{self.n}")

    @property
    def d(self) -> int:
        return self.tree.d

    def mu(self, i: int) -> tuple[int, ...]:
        """Children-type multi-index of vertex ``i``."""
        out = [0] * self.n
        for c in self.tree.children(i):
            out[self.types[c] - 1] += 1
        return tuple(out)

    @property
    def leaftype(self) -> tuple[int, ...]:
        out = [0] * self.n
        for ch, t in zip(self.tree.enc, self.types):
            if ch == "0":
                out[t - 1] += 1
        return tuple(out)

    @property
    def root_type(self) -> int:
        return self.types[0]

    def subtree(self, i: int) -> "LabelledTree":
        a, b = self.tree.subtree_span(i)
        return LabelledTree(CatalanTree(self.d, self.tree.enc[a:b]), self.types[a:b], self.n)

    def serialize(self) -> str:
        return self.tree.enc + ":" + ".".join(map(str, self.types))

    @classmethod
    def parse(cls, text: str, d: int, n: int) -> "LabelledTree":
        enc, _, types = text.strip().partition(":")
        return cls(CatalanTree.parse(enc, d), tuple(int(t) for t in types.split(".")), n)

    def to_json(self) -> dict:
        return {"d": self.d, "n": self.n, "enc": self.tree.enc, "types": list(self.types)}

    @classmethod
    def from_json(cls, data: dict) -> "LabelledTree":
        return cls(CatalanTree.parse(data["enc"], int(data["d"])), tuple(int(t) for t in data["types"]), int(data["n"]))
