"""Length-p shuffle classes of d-Catalan trees, unlabelled and labelled.

A vertex ``v`` at height at least ``p`` fixes the path ``v_0, ..., v_p = v``.
The ``(d-1)p`` siblings of ``v_1, ..., v_p`` are the *slots*; the class is
the set of trees obtained by permuting the subtrees hanging from the slots
while the rest of the tree (the *context*) stays put.  Slots are numbered
generation by generation, left to right within a generation.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from collections.abc import Iterator, Sequence
from dataclasses import dataclass, field

from sympy.utilities.iterables import multiset_permutations

from .errors import HeightTooSmall, InvalidParameter
from .trees import DEFAULT_CAP, CatalanTree, Code, LabelledTree, iter_encodings

HOLE = "*"


def multinomial_orbit_size(items: Sequence) -> int:
    """Distinct arrangements of a multiset: ``len! / prod(mult!)``."""
    out = math.factorial(len(items))
    for m in Counter(items).values():
        out //= math.factorial(m)
    return out


@dataclass(frozen=True)
class AncestralPath:
    tree: CatalanTree
    vertices: tuple[int, ...]  # preorder indices of v_0..v_p

    @classmethod
    def ending_at(cls, tree: CatalanTree, v: Sequence[int], p: int) -> "AncestralPath":
        if p < 1:
            raise InvalidParameter(f"p must be >= 1, got {p}")
        code = tuple(v)
        if len(code) < p:
            idx = tree.index_of(code)  # raise on a bad code before the height check
            raise HeightTooSmall(f"vertex {code} has height {tree.depths[idx]} < p={p}")
        return cls(tree, tuple(tree.index_of(code[: len(code) - p + i]) for i in range(p + 1)))

    @property
    def p(self) -> int:
        return len(self.vertices) - 1

    @property
    def codes(self) -> tuple[Code, ...]:
        return tuple(self.tree.codes[i] for i in self.vertices)

    @property
    def siblings(self) -> tuple[tuple[int, ...], ...]:
        """``w_{i,1..d-1}`` for ``i = 1..p`` as preorder indices."""
        out = []
        for a, b in zip(self.vertices, self.vertices[1:]):
            out.append(tuple(c for c in self.tree.children(a) if c != b))
        return tuple(out)

    @property
    def slots(self) -> tuple[int, ...]:
        return tuple(itertools.chain.from_iterable(self.siblings))

    @property
    def subtrees(self) -> tuple[str, ...]:
        """Encodings ``W_{i,j}`` in slot order."""
        return tuple(self.tree.subtree_enc(w) for w in self.slots)

    def context(self) -> str:
        """Encoding of the tree with every slot subtree replaced by a hole."""
        return self._fill([HOLE] * len(self.slots))

    def _fill(self, contents: Sequence[str]) -> str:
        enc = self.tree.enc
        spans = sorted((self.tree.subtree_span(w), c) for w, c in zip(self.slots, contents))
        pieces, pos = [], 0
        for (a, b), c in spans:
            pieces.append(enc[pos:a])
            pieces.append(c)
            pos = b
        pieces.append(enc[pos:])
        return "".join(pieces)

    def structural_key(self) -> str:
        code = ".".join(map(str, self.codes[-1]))
        return f"{self.context()}|{code}|{self.p}|{','.join(sorted(self.subtrees))}"

    def arrangements(self) -> Iterator[str]:
        for perm in multiset_permutations(list(self.subtrees)):
            yield self._fill(perm)


@dataclass(frozen=True)
class ShuffleClass:
    key: str
    d: int
    k: int
    p: int
    members: tuple[str, ...]
    multiset: tuple[str, ...]
    aliases: tuple[str, ...] = field(default=())

    @property
    def size(self) -> int:
        return len(self.members)

    def expected_size(self) -> int:
        return multinomial_orbit_size(self.multiset)

    def __contains__(self, enc: str) -> bool:
        lo, hi = 0, len(self.members)
        while lo < hi:
            mid = (lo + hi) // 2
            if self.members[mid] < enc:
                lo = mid + 1
            else:
                hi = mid
        return lo < len(self.members) and self.members[lo] == enc

    def to_json(self) -> dict:
        return {"key": self.key, "size": self.size, "members": list(self.members)}


def shuffle_class(tree: CatalanTree, v: Sequence[int], p: int) -> ShuffleClass:
    path = AncestralPath.ending_at(tree, v, p)
    return _class_of(path)


def _class_of(path: AncestralPath) -> ShuffleClass:
    tree = path.tree
    members = tuple(sorted(set(path.arrangements())))
    return ShuffleClass(
        key=path.structural_key(),
        d=tree.d,
        k=tree.k,
        p=path.p,
        members=members,
        multiset=tuple(sorted(path.subtrees)),
    )


def eligible_vertices(tree: CatalanTree, p: int) -> list[int]:
    return [i for i, h in enumerate(tree.depths) if h >= p]


@dataclass
class ShuffleCatalogue:
    """All length-``p`` classes of ``C_k^(d)`` plus the (tree, vertex) incidence."""

    d: int
    k: int
    p: int
    classes: dict[str, ShuffleClass]
    incidence: dict[tuple[str, Code], str]

    def class_of(self, enc: str, code: Sequence[int]) -> ShuffleClass:
        return self.classes[self.incidence[(enc, tuple(code))]]


def shuffle_catalogue(d: int, k: int, p: int, cap: int | None = DEFAULT_CAP) -> ShuffleCatalogue:
    """Build every class once, keyed first structurally and then by member set."""
    if p < 1:
        raise InvalidParameter(f"p must be >= 1, got {p}")
    by_struct: dict[str, ShuffleClass] = {}
    by_members: dict[tuple[str, ...], list[str]] = {}
    pairs: list[tuple[str, Code, str]] = []
    for enc in iter_encodings(d, k, cap):
        tree = CatalanTree(d, enc)
        for i in eligible_vertices(tree, p):
            path = AncestralPath.ending_at(tree, tree.codes[i], p)
            skey = path.structural_key()
            if skey not in by_struct:
                cls = by_struct[skey] = _class_of(path)
                by_members.setdefault(cls.members, []).append(skey)
            pairs.append((enc, tree.codes[i], skey))
    # One canonical key per member set: the smallest structural key.
    rename: dict[str, str] = {}
    classes: dict[str, ShuffleClass] = {}
    for members, keys in by_members.items():
        keys.sort()
        base = by_struct[keys[0]]
        classes[keys[0]] = ShuffleClass(base.key, d, k, p, members, base.multiset, tuple(keys[1:]))
        for s in keys:
            rename[s] = keys[0]
    classes = dict(sorted(classes.items()))
    incidence = {(enc, code): rename[s] for enc, code, s in pairs}
    return ShuffleCatalogue(d, k, p, classes, incidence)


def enumerate_shuffle_classes(d: int, k: int, p: int, cap: int | None = DEFAULT_CAP) -> dict[str, ShuffleClass]:
    return shuffle_catalogue(d, k, p, cap).classes


def brute_force_orbit(tree: CatalanTree, v: Sequence[int], p: int) -> set[str]:
    """Orbit by applying all ``((d-1)p)!`` slot permutations; test oracle."""
    path = AncestralPath.ending_at(tree, v, p)
    subs = path.subtrees
    return {path._fill([subs[j] for j in perm]) for perm in itertools.permutations(range(len(subs)))}


# ---------------------------------------------------------------------------
# Labelled classes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LabelledShuffleClass:
    key: str
    n: int
    p: int
    members: tuple[str, ...]  # serialized labelled trees, sorted
    multiset: tuple[str, ...]

    @property
    def size(self) -> int:
        return len(self.members)

    def expected_size(self) -> int:
        return self.n ** (self.p - 1) * multinomial_orbit_size(self.multiset)

    def trees(self, d: int) -> list[LabelledTree]:
        return [LabelledTree.parse(m, d, self.n) for m in self.members]

    def to_json(self) -> dict:
        return {"key": self.key, "size": self.size, "members": list(self.members)}


def labelled_shuffle_class(lt: LabelledTree, v: Sequence[int], p: int, n: int | None = None) -> LabelledShuffleClass:
    """Orbit under slot rearrangement times retyping of ``v_1..v_{p-1}``."""
    n = lt.n if n is None else n
    if any(t > n for t in lt.types):
        raise InvalidParameter(f"types exceed n={n}")
    path = AncestralPath.ending_at(lt.tree, v, p)
    tree = lt.tree
    slots = path.slots
    spans = [tree.subtree_span(w) for w in slots]
    pieces = [(tree.enc[a:b], lt.types[a:b]) for a, b in spans]
    order = sorted(range(len(slots)), key=lambda j: spans[j][0])
    interior = path.vertices[1:-1]
    base_types = list(lt.types)

    # Fixed (non-slot) stretches of the typed preorder, interleaved with slots.
    def assemble(contents, retype) -> str:
        types = base_types[:]
        for idx, t in zip(interior, retype):
            types[idx] = t
        enc_parts, type_parts, pos = [], [], 0
        for j in order:
            a, b = spans[j]
            enc_parts.append(tree.enc[pos:a])
            type_parts.extend(types[pos:a])
            e, ts = contents[j]
            enc_parts.append(e)
            type_parts.extend(ts)
            pos = b
        enc_parts.append(tree.enc[pos:])
        type_parts.extend(types[pos:])
        return "".join(enc_parts) + ":" + ".".join(map(str, type_parts))

    keyed = [e + ":" + ".".join(map(str, ts)) for e, ts in pieces]
    lookup = dict(zip(keyed, pieces))
    members = set()
    for perm in multiset_permutations(keyed):
        contents = [lookup[x] for x in perm]
        for retype in itertools.product(range(1, n + 1), repeat=len(interior)):
            members.add(assemble(contents, retype))
    # Key: holed context, types outside the slots with the free interior blanked.
    free = set(interior)
    fixed = [0 if i in free else t for i, t in enumerate(base_types)
             if not any(a <= i < b for a, b in spans)]
    ctx = path.context() + ":" + ".".join(map(str, fixed))
    code = ".".join(map(str, path.codes[-1]))
    key = f"{ctx}|{code}|{p}|{','.join(sorted(keyed))}"
    return LabelledShuffleClass(key, n, p, tuple(sorted(members)), tuple(sorted(keyed)))
