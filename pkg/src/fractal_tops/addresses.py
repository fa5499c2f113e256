"""Finite words, eventually periodic addresses and symbol priority orders.

Text syntax: ``121`` is a word; ``12(21)`` is the address with preperiod
``12`` followed by ``21`` repeated forever; ``(1)`` is 1-bar. Tile addresses
join a blowup word and a top word with a dot, e.g. ``112.212``.
"""
from __future__ import annotations

import enum
import itertools
import math
import re
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

from .errors import BadSymbol


class Cmp(enum.IntEnum):
    LT = -1
    EQ = 0
    GT = 1


def _check_symbols(symbols: Sequence[int], m: int) -> tuple[int, ...]:
    out = tuple(int(s) for s in symbols)
    for s in out:
        if not 1 <= s <= m:
            raise BadSymbol(f"symbol {s} outside 1..{m}")
    return out


def _parse_digits(text: str) -> tuple[int, ...]:
    text = text.strip()
    if not text or text in ("-", "∅"):
        return ()
    if "," in text or " " in text:
        return tuple(int(t) for t in re.split(r"[,\s]+", text) if t)
    return tuple(int(c) for c in text)


@dataclass(frozen=True)
class Word:
    symbols: tuple[int, ...]
    m: int

    def __post_init__(self):
        object.__setattr__(self, "symbols", _check_symbols(self.symbols, self.m))

    @classmethod
    def parse(cls, text: str, m: int) -> "Word":
        return cls(_parse_digits(text), m)

    def __len__(self) -> int:
        return len(self.symbols)

    def __iter__(self) -> Iterator[int]:
        return iter(self.symbols)

    def __getitem__(self, item):
        if isinstance(item, slice):
            return Word(self.symbols[item], self.m)
        return self.symbols[item]

    def __add__(self, other) -> "Word":
        if isinstance(other, Word):
            other = other.symbols
        return Word(self.symbols + tuple(other), self.m)

    def prepend(self, s: int) -> "Word":
        return Word((s,) + self.symbols, self.m)

    def reversed(self) -> "Word":
        return Word(self.symbols[::-1], self.m)

    def __str__(self) -> str:
        if not self.symbols:
            return "∅"
        sep = "," if self.m > 9 else ""
        return sep.join(str(s) for s in self.symbols)


@dataclass(frozen=True)
class PriorityOrder:
    """Symbols listed from highest to lowest priority."""

    symbols: tuple[int, ...]

    def __post_init__(self):
        syms = tuple(int(s) for s in self.symbols)
        if sorted(syms) != list(range(1, len(syms) + 1)):
            raise ValueError(f"{syms} is not a permutation of 1..{len(syms)}")
        object.__setattr__(self, "symbols", syms)

    @classmethod
    def default(cls, m: int) -> "PriorityOrder":
        """Symbol 1 highest, then 2, ..., m."""
        return cls(tuple(range(1, m + 1)))

    @classmethod
    def parse(cls, text: str) -> "PriorityOrder":
        """``"21"``, ``"2>1"`` or ``"2,1"``; highest symbol first."""
        return cls(_parse_digits(text.replace(">", ",")))

    @property
    def m(self) -> int:
        return len(self.symbols)

    def rank(self, s: int) -> int:
        """0 for the highest symbol."""
        return self.symbols.index(s)

    def weight(self, s: int) -> int:
        """m-1 for the highest symbol, 0 for the lowest."""
        return self.m - 1 - self.symbols.index(s)

    def sort_key(self, word: Iterable[int]) -> tuple[int, ...]:
        """Key whose natural ordering matches this priority order."""
        return tuple(self.weight(s) for s in word)

    def words(self, n: int, descending: bool = False) -> list[tuple[int, ...]]:
        """All words of length n, in increasing (or decreasing) priority."""
        low_to_high = self.symbols[::-1]
        seq = list(itertools.product(low_to_high, repeat=n))
        return seq[::-1] if descending else seq

    def __str__(self) -> str:
        return ">".join(str(s) for s in self.symbols)


def _primitive_root(p: tuple[int, ...]) -> tuple[int, ...]:
    n = len(p)
    for d in range(1, n + 1):
        if n % d == 0 and p[:d] * (n // d) == p:
            return p[:d]
    return p


@dataclass(frozen=True)
class InfiniteAddress:
    """Eventually periodic address ``preperiod + period period period ...``."""

    preperiod: tuple[int, ...]
    period: tuple[int, ...]
    m: int

    def __post_init__(self):
        pre = _check_symbols(self.preperiod, self.m)
        per = _check_symbols(self.period, self.m)
        if not per:
            raise ValueError("period must be nonempty")
        per = _primitive_root(per)
        while pre and pre[-1] == per[-1]:
            pre = pre[:-1]
            per = (per[-1],) + per[:-1]
        object.__setattr__(self, "preperiod", pre)
        object.__setattr__(self, "period", per)

    @classmethod
    def parse(cls, text: str, m: int) -> "InfiniteAddress":
        """``12(21)`` or ``(1)``; a bare word ``12`` is read as ``(12)``."""
        text = text.strip()
        mt = re.fullmatch(r"([^()]*)\(([^()]+)\)", text)
        if mt:
            return cls(_parse_digits(mt.group(1)), _parse_digits(mt.group(2)), m)
        return cls((), _parse_digits(text), m)

    @classmethod
    def constant(cls, s: int, m: int) -> "InfiniteAddress":
        return cls((), (s,), m)

    def __getitem__(self, i: int) -> int:
        """0-based symbol access."""
        if i < len(self.preperiod):
            return self.preperiod[i]
        return self.period[(i - len(self.preperiod)) % len(self.period)]

    def prefix(self, n: int) -> Word:
        return Word(tuple(self[i] for i in range(n)), self.m)

    def shift(self) -> "InfiniteAddress":
        if self.preperiod:
            return InfiniteAddress(self.preperiod[1:], self.period, self.m)
        return InfiniteAddress((), self.period[1:] + self.period[:1], self.m)

    def prepend(self, s: int) -> "InfiniteAddress":
        return InfiniteAddress((s,) + self.preperiod, self.period, self.m)

    def __str__(self) -> str:
        pre = str(Word(self.preperiod, self.m)) if self.preperiod else ""
        return f"{pre}({Word(self.period, self.m)})"


def lex_compare(a, b, order: PriorityOrder | None = None) -> Cmp:
    """Compare two words, or two infinite addresses, under ``order``.

    For words, a proper prefix is smaller than its extensions.
    """
    m = a.m
    order = order or PriorityOrder.default(m)
    if isinstance(a, InfiniteAddress) and isinstance(b, InfiniteAddress):
        horizon = max(len(a.preperiod), len(b.preperiod)) + math.lcm(len(a.period), len(b.period))
        xs, ys = a.prefix(horizon).symbols, b.prefix(horizon).symbols
    else:
        xs, ys = tuple(a), tuple(b)
    for x, y in zip(xs, ys):
        if x != y:
            return Cmp.GT if order.rank(x) < order.rank(y) else Cmp.LT
    if len(xs) == len(ys):
        return Cmp.EQ
    return Cmp.LT if len(xs) < len(ys) else Cmp.GT


def shift(a: InfiniteAddress) -> InfiniteAddress:
    return a.shift()


def reverse_prefix(a: InfiniteAddress, n: int) -> Word:
    """``i_n i_{n-1} ... i_1``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return a.prefix(n).reversed()


def factors(seq: Sequence[int], k: int) -> set[tuple[int, ...]]:
    return {tuple(seq[i : i + k]) for i in range(len(seq) - k + 1)}


def is_disjunctive_up_to(a: InfiniteAddress, k: int, horizon: int) -> bool:
    """Whether every word of length <= k occurs within the first ``horizon`` symbols.

    An eventually periodic address has all of its factors of length k inside
    ``preperiod + period + (k-1)`` symbols, so reading past that point adds
    nothing; the answer is then exact rather than a semi-decision.
    """
    if k < 1 or horizon < k:
        raise ValueError("need 1 <= k <= horizon")
    exact_len = len(a.preperiod) + len(a.period) + k - 1
    seq = a.prefix(min(horizon, exact_len)).symbols
    for length in range(1, k + 1):
        if len(factors(seq, length)) < a.m**length:
            return False
    return True


def all_words_up_to(m: int, k: int) -> list[tuple[int, ...]]:
    """Every word of length 1..k, in length-lexicographic order."""
    out = []
    for n in range(1, k + 1):
        out.extend(itertools.product(range(1, m + 1), repeat=n))
    return out


@dataclass(frozen=True)
class TileAddress:
    blowup_word: Word
    top_word: Word

    def __post_init__(self):
        if len(self.blowup_word) != len(self.top_word):
            raise ValueError("blowup and top words must have equal length")

    @property
    def level(self) -> int:
        return len(self.top_word)

    @classmethod
    def parse(cls, text: str, m: int) -> "TileAddress":
        if text.strip() in ("∅", ""):
            return cls(Word((), m), Word((), m))
        left, right = text.split(".")
        return cls(Word.parse(left, m), Word.parse(right, m))

    def __str__(self) -> str:
        if self.level == 0:
            return "∅"
        return f"{self.blowup_word}.{self.top_word}"
