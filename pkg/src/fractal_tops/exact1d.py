"""Exact rational interval arithmetic for one-dimensional systems ``x -> a*x + b``.

This is the ground truth the raster computations are checked against: top
cells of interval attractors are finite unions of intervals with rational
endpoints, so they can be computed with no resolution error at all.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

Coeffs = Sequence[tuple[Fraction, Fraction]]

INF = float("inf")


@dataclass(frozen=True)
class Piece:
    lo: Fraction
    hi: Fraction
    lo_closed: bool = True
    hi_closed: bool = True

    @property
    def valid(self) -> bool:
        return self.lo < self.hi or (self.lo == self.hi and self.lo_closed and self.hi_closed)

    @property
    def length(self) -> Fraction:
        return self.hi - self.lo

    def image(self, a: Fraction, b: Fraction) -> "Piece":
        x, y = a * self.lo + b, a * self.hi + b
        if a > 0:
            return Piece(x, y, self.lo_closed, self.hi_closed)
        return Piece(y, x, self.hi_closed, self.lo_closed)

    def __str__(self) -> str:
        if self.lo == self.hi:
            return f"{{{self.lo}}}"
        return f"{'[' if self.lo_closed else '('}{self.lo}, {self.hi}{']' if self.hi_closed else ')'}"


def _meet(p: Piece, q: Piece) -> Piece:
    if p.lo > q.lo:
        lo, lc = p.lo, p.lo_closed
    elif q.lo > p.lo:
        lo, lc = q.lo, q.lo_closed
    else:
        lo, lc = p.lo, p.lo_closed and q.lo_closed
    if p.hi < q.hi:
        hi, hc = p.hi, p.hi_closed
    elif q.hi < p.hi:
        hi, hc = q.hi, q.hi_closed
    else:
        hi, hc = p.hi, p.hi_closed and q.hi_closed
    return Piece(lo, hi, lc, hc)


class IntervalSet:
    """Finite union of intervals, kept sorted, disjoint and merged."""

    __slots__ = ("pieces",)

    def __init__(self, pieces: Iterable[Piece] = ()):
        self.pieces = self._normalize([p for p in pieces if p.valid])

    @staticmethod
    def _normalize(pieces: list[Piece]) -> tuple[Piece, ...]:
        pieces.sort(key=lambda p: (p.lo, not p.lo_closed))
        out: list[Piece] = []
        for p in pieces:
            if out:
                q = out[-1]
                touching = q.hi > p.lo or (q.hi == p.lo and (q.hi_closed or p.lo_closed))
                if touching:
                    if p.hi > q.hi:
                        out[-1] = Piece(q.lo, p.hi, q.lo_closed, p.hi_closed)
                    elif p.hi == q.hi:
                        out[-1] = Piece(q.lo, q.hi, q.lo_closed, q.hi_closed or p.hi_closed)
                    continue
            out.append(p)
        return tuple(out)

    @classmethod
    def closed(cls, lo, hi) -> "IntervalSet":
        return cls([Piece(Fraction(lo), Fraction(hi))])

    def image(self, a: Fraction, b: Fraction) -> "IntervalSet":
        return IntervalSet(p.image(a, b) for p in self.pieces)

    def union(self, other: "IntervalSet") -> "IntervalSet":
        return IntervalSet(self.pieces + other.pieces)

    def intersection(self, other: "IntervalSet") -> "IntervalSet":
        return IntervalSet(_meet(p, q) for p in self.pieces for q in other.pieces)

    def difference(self, other: "IntervalSet") -> "IntervalSet":
        current = list(self.pieces)
        for q in other.pieces:
            left = Piece(-INF, q.lo, False, not q.lo_closed)
            right = Piece(q.hi, INF, not q.hi_closed, False)
            nxt = []
            for p in current:
                for part in (_meet(p, left), _meet(p, right)):
                    if part.valid:
                        nxt.append(part)
            current = nxt
        return IntervalSet(current)

    @property
    def measure(self) -> Fraction:
        return sum((p.length for p in self.pieces), Fraction(0))

    @property
    def is_empty(self) -> bool:
        return not self.pieces

    @property
    def isolated_points(self) -> list[Fraction]:
        return [p.lo for p in self.pieces if p.lo == p.hi]

    def null_subset_of(self, other: "IntervalSet") -> bool:
        """``self`` is contained in ``other`` up to a set of measure zero."""
        return self.difference(other).measure == 0

    def same_up_to_null(self, other: "IntervalSet") -> bool:
        return self.null_subset_of(other) and other.null_subset_of(self)

    def __eq__(self, other) -> bool:
        return isinstance(other, IntervalSet) and self.pieces == other.pieces

    def __repr__(self) -> str:
        return "IntervalSet(" + " ∪ ".join(str(p) for p in self.pieces) + ")"


def attractor_hull(coeffs: Coeffs) -> tuple[Fraction, Fraction]:
    """Exact convex hull of the attractor.

    The endpoints satisfy ``lo = min_i f_i(lo or hi)`` and
    ``hi = max_i f_i(hi or lo)``; each choice of attaining maps gives a 2x2
    linear system, and exactly one choice is self-consistent.
    """
    coeffs = [(Fraction(a), Fraction(b)) for a, b in coeffs]

    def images(lo, hi):
        vals = []
        for a, b in coeffs:
            x, y = a * lo + b, a * hi + b
            vals.append((min(x, y), max(x, y)))
        return min(v[0] for v in vals), max(v[1] for v in vals)

    candidates = []
    for i, j in itertools.product(range(len(coeffs)), repeat=2):
        (ai, bi), (aj, bj) = coeffs[i], coeffs[j]
        # lo = ai*(lo if ai>0 else hi) + bi ; hi = aj*(hi if aj>0 else lo) + bj
        m11, m12 = (1 - ai, 0) if ai > 0 else (1, -ai)
        m21, m22 = (0, 1 - aj) if aj > 0 else (-aj, 1)
        det = m11 * m22 - m12 * m21
        if det == 0:
            continue
        lo = (bi * m22 - m12 * bj) / det
        hi = (m11 * bj - m21 * bi) / det
        if lo <= hi and images(lo, hi) == (lo, hi):
            candidates.append((lo, hi))
    if not candidates:
        raise ArithmeticError("no consistent hull found")
    return min(candidates, key=lambda c: c[1] - c[0])


def covers_hull(coeffs: Coeffs, hull: tuple[Fraction, Fraction]) -> bool:
    """Whether the first-level images of the hull cover it (attractor is an interval)."""
    h = IntervalSet.closed(*hull)
    u = IntervalSet()
    for a, b in coeffs:
        u = u.union(h.image(Fraction(a), Fraction(b)))
    return u == h


def cylinder(coeffs: Coeffs, word: Sequence[int], base: IntervalSet) -> IntervalSet:
    out = base
    for s in reversed(word):
        a, b = coeffs[s - 1]
        out = out.image(a, b)
    return out


@dataclass
class ExactTops:
    """Top cells of every word of length n, from the exact oracle."""

    depth: int
    hull: tuple[Fraction, Fraction]
    cells: dict[tuple[int, ...], IntervalSet]

    def words(self, include_isolated: bool = False) -> set[tuple[int, ...]]:
        out = {w for w, c in self.cells.items() if c.measure > 0}
        if include_isolated:
            out |= self.isolated_words()
        return out

    def isolated_words(self) -> set[tuple[int, ...]]:
        return {w for w, c in self.cells.items() if c.measure == 0 and not c.is_empty}


def exact_tops(coeffs: Coeffs, n: int, words_high_to_low: Sequence[tuple[int, ...]]) -> ExactTops:
    """Residual of each cylinder after removing all higher-priority cylinders.

    ``words_high_to_low`` lists all words of length n from highest priority to
    lowest; each word's cell is its cylinder minus the union claimed so far.
    """
    coeffs = [(Fraction(a), Fraction(b)) for a, b in coeffs]
    hull = attractor_hull(coeffs)
    base = IntervalSet.closed(*hull)
    if not covers_hull(coeffs, hull):
        firsts = [base.image(a, b) for a, b in coeffs]
        for p, q in itertools.combinations(firsts, 2):
            if not p.intersection(q).is_empty:
                raise ValueError("exact oracle needs an interval attractor or disjoint first-level cylinders")
    claimed = IntervalSet()
    cells = {}
    for w in words_high_to_low:
        cyl = cylinder(coeffs, w, base)
        cells[tuple(w)] = cyl.difference(claimed)
        claimed = claimed.union(cyl)
    return ExactTops(n, hull, cells)
