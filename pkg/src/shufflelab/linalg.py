"""Exact linear algebra over Q: sparse fraction-free elimination and a
Phase-1 simplex.

Rows are stored as ``{column: int}``.  Elimination is Gauss-Jordan with
integer row combinations ``a * r_o - b * r_p`` followed by division by the
row content, so entries stay integral and small.  Pivot choice is fully
deterministic: columns are visited in the caller's order and the pivot row
is the sparsest candidate (ties: smallest absolute pivot, then lowest row
index).
"""

from __future__ import annotations

import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from fractions import Fraction


def _integral(row: Mapping[int, object], primitive: bool = True) -> tuple[dict[int, int], int]:
    """Clear denominators (and the content, if ``primitive``); also return the
    integer multiplier applied when it is one."""
    vals = {c: Fraction(v) for c, v in row.items() if v}
    if not vals:
        return {}, 1
    den = math.lcm(*(v.denominator for v in vals.values()))
    out = {c: int(v * den) for c, v in vals.items()}
    g = math.gcd(*out.values()) if primitive else 1
    return ({c: v // g for c, v in out.items()} if g > 1 else out), den


@dataclass
class Reduction:
    rows: list[dict[int, int]]
    pivots: dict[int, int]  # column -> row
    history: list[dict[int, int]] | None

    @property
    def rank(self) -> int:
        return len(self.pivots)

    def inconsistent_rows(self, rhs: int) -> list[int]:
        """Rows reduced to ``0 = c`` with ``c != 0`` in column ``rhs``."""
        pivot_rows = set(self.pivots.values())
        return [r for r, row in enumerate(self.rows)
                if r not in pivot_rows and row.get(rhs) and len(row) == 1]

    def solution(self, rhs: int) -> dict[int, Fraction] | None:
        """One solution with free variables at 0, or ``None`` if inconsistent."""
        if self.inconsistent_rows(rhs):
            return None
        out = {}
        for c, r in self.pivots.items():
            row = self.rows[r]
            v = row.get(rhs, 0)
            if v:
                out[c] = Fraction(v, row[c])
        return dict(sorted(out.items()))


def row_reduce(rows: Sequence[Mapping[int, object]], columns: Sequence[int], track: bool = False) -> Reduction:
    """Gauss-Jordan elimination over the listed pivot ``columns``.

    Columns not listed (for example a right-hand side) are carried along
    but never used as pivots.  With ``track`` each row also records the
    integer combination of input rows it equals.
    """
    scaled = [_integral(r, primitive=not track) for r in rows]
    work = [w for w, _ in scaled]
    hist = [{i: m} for i, (_, m) in enumerate(scaled)] if track else None
    col_rows: dict[int, set[int]] = {}
    for r, row in enumerate(work):
        for c in row:
            col_rows.setdefault(c, set()).add(r)
    pivots: dict[int, int] = {}
    used: set[int] = set()

    def combine(o: int, p: int, c: int) -> None:
        a, b = work[p][c], work[o][c]
        g = math.gcd(a, b)
        a, b = a // g, b // g
        old = work[o]
        new = {col: a * v for col, v in old.items()}
        for col, v in work[p].items():
            x = new.get(col, 0) - b * v
            if x:
                new[col] = x
            else:
                new.pop(col, None)
        h_new = None
        if hist is not None:
            h_new = {i: a * v for i, v in hist[o].items()}
            for i, v in hist[p].items():
                x = h_new.get(i, 0) - b * v
                if x:
                    h_new[i] = x
                else:
                    h_new.pop(i, None)
        vals = list(new.values()) + (list(h_new.values()) if h_new else [])
        g = math.gcd(*vals) if vals else 1
        if g > 1:
            new = {col: v // g for col, v in new.items()}
            if h_new is not None:
                h_new = {i: v // g for i, v in h_new.items()}
        for col in old:
            if col not in new:
                col_rows[col].discard(o)
        for col in new:
            if col not in old:
                col_rows.setdefault(col, set()).add(o)
        work[o] = new
        if hist is not None:
            hist[o] = h_new

    for c in columns:
        cand = [r for r in col_rows.get(c, ()) if r not in used]
        if not cand:
            continue
        p = min(cand, key=lambda r: (len(work[r]), abs(work[r][c]), r))
        pivots[c] = p
        used.add(p)
        for o in sorted(col_rows[c] - {p}):
            combine(o, p, c)
    return Reduction(work, pivots, hist)


def rank(rows: Sequence[Mapping[int, object]], ncols: int) -> int:
    return row_reduce(rows, range(ncols)).rank


def dense_inverse(M: Sequence[Sequence[object]]) -> list[list[Fraction]] | None:
    n = len(M)
    A = [[Fraction(x) for x in row] + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(M)]
    for c in range(n):
        p = next((r for r in range(c, n) if A[r][c]), None)
        if p is None:
            return None
        A[c], A[p] = A[p], A[c]
        inv = 1 / A[c][c]
        A[c] = [x * inv for x in A[c]]
        for r in range(n):
            if r != c and A[r][c]:
                f = A[r][c]
                A[r] = [x - f * y for x, y in zip(A[r], A[c])]
    return [row[n:] for row in A]


# ---------------------------------------------------------------------------
# Phase-1 simplex
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LPResult:
    feasible: bool
    x: tuple[Fraction, ...] | None
    certificate: tuple[Fraction, ...] | None  # y with y.A <= 0 and y.b > 0
    pivots: int


def phase_one(A: Sequence[Sequence[object]], b: Sequence[object], max_pivots: int | None = None) -> LPResult:
    """Decide ``A x = b, x >= 0`` exactly, with Bland's anti-cycling rule.

    On infeasibility the certificate ``y`` (Farkas) satisfies ``y^T A <= 0``
    componentwise and ``y^T b > 0``.
    """
    m = len(A)
    nv = len(A[0]) if m else 0
    sign = [1 if Fraction(bi) >= 0 else -1 for bi in b]
    T = []
    for i in range(m):
        row = [sign[i] * Fraction(x) for x in A[i]]
        row += [Fraction(int(i == j)) for j in range(m)]
        row.append(sign[i] * Fraction(b[i]))
        T.append(row)
    width = nv + m
    basis = [nv + i for i in range(m)]
    # reduced costs of the Phase-1 objective: sum of artificials
    red = [Fraction(0)] * (width + 1)
    for row in T:
        for j in range(nv):
            red[j] -= row[j]
        red[width] -= row[width]
    count = 0
    while True:
        enter = next((j for j in range(width) if red[j] < 0), None)
        if enter is None:
            break
        best, leave = None, None
        for i in range(m):
            a = T[i][enter]
            if a > 0:
                ratio = T[i][width] / a
                if best is None or ratio < best or (ratio == best and basis[i] < basis[leave]):
                    best, leave = ratio, i
        if leave is None:
            raise AssertionError("Phase-1 objective is bounded below; ratio test cannot fail")
        piv = T[leave][enter]
        T[leave] = [x / piv for x in T[leave]]
        prow = T[leave]
        for i in range(m):
            if i != leave and T[i][enter]:
                f = T[i][enter]
                T[i] = [x - f * y for x, y in zip(T[i], prow)]
        f = red[enter]
        red = [x - f * y for x, y in zip(red, prow)]
        basis[leave] = enter
        count += 1
        if max_pivots is not None and count > max_pivots:
            raise ArithmeticError(f"simplex exceeded {max_pivots} pivots")
    objective = -red[width]
    if objective == 0:
        x = [Fraction(0)] * nv
        for i, j in enumerate(basis):
            if j < nv:
                x[j] = T[i][width]
        return LPResult(True, tuple(x), None, count)
    # multipliers: reduced cost of artificial i is 1 - pi_i
    y = tuple(sign[i] * (1 - red[nv + i]) for i in range(m))
    return LPResult(False, None, y, count)


def check_farkas(A: Sequence[Sequence[object]], b: Sequence[object], y: Sequence[Fraction]) -> bool:
    m = len(A)
    nv = len(A[0]) if m else 0
    for j in range(nv):
        if sum((y[i] * Fraction(A[i][j]) for i in range(m)), Fraction(0)) > 0:
            return False
    return sum((y[i] * Fraction(b[i]) for i in range(m)), Fraction(0)) > 0
