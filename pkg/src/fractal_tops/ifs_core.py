"""Affine similitudes of the plane and iterated function systems built from them.

One-dimensional systems ``x -> a*x + b`` are embedded in the plane as
``(x, y) -> (a*x + b, |a|*y)`` so that the attractor sits on the x-axis and
every map stays a similitude.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import BadSymbol, NoUniqueFixedPoint, NotOneDimensional, SingularMap

PREDICATE_TOL = 1e-9
ROUNDTRIP_TOL = 1e-12
SINGULAR_TOL = 1e-15


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class AffineMap:
    """``x -> linear @ x + translation`` on R^2."""

    linear: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        lin = _frozen(self.linear).reshape(2, 2)
        tr = _frozen(self.translation).reshape(2)
        object.__setattr__(self, "linear", lin)
        object.__setattr__(self, "translation", tr)

    @classmethod
    def identity(cls) -> "AffineMap":
        return cls(np.eye(2), np.zeros(2))

    @classmethod
    def from_rows(cls, row1: Sequence[float], row2: Sequence[float]) -> "AffineMap":
        """Build from the bracket layout ``[[a, b, e], [c, d, g]]``."""
        a, b, e = (float(v) for v in row1)
        c, d, g = (float(v) for v in row2)
        return cls([[a, b], [c, d]], [e, g])

    @classmethod
    def from_1d(cls, scale: float, offset: float) -> "AffineMap":
        return cls([[scale, 0.0], [0.0, abs(scale)]], [offset, 0.0])

    @property
    def det(self) -> float:
        return float(np.linalg.det(self.linear))

    @property
    def rows(self) -> list[list[float]]:
        (a, b), (c, d) = self.linear.tolist()
        e, g = self.translation.tolist()
        return [[a, b, e], [c, d, g]]

    @property
    def coefficients(self) -> tuple[float, ...]:
        """``(a, b, c, d, e, g)``."""
        (a, b), (c, d) = self.linear.tolist()
        e, g = self.translation.tolist()
        return (a, b, c, d, e, g)

    def is_similitude(self, tol: float = PREDICATE_TOL) -> bool:
        gram = self.linear.T @ self.linear
        s2 = 0.5 * np.trace(gram)
        return s2 > 0 and bool(np.allclose(gram, s2 * np.eye(2), atol=tol, rtol=0.0))

    @property
    def scale(self) -> float:
        """Contraction factor: the similarity ratio, or the operator norm otherwise."""
        if self.is_similitude():
            return math.sqrt(abs(self.det))
        return float(np.linalg.norm(self.linear, 2))

    def __call__(self, p):
        return apply(self, p)

    def __matmul__(self, other: "AffineMap") -> "AffineMap":
        # (self @ other)(x) == self(other(x))
        return AffineMap(self.linear @ other.linear, self.linear @ other.translation + self.translation)

    def allclose(self, other: "AffineMap", tol: float = ROUNDTRIP_TOL) -> bool:
        return bool(
            np.allclose(self.linear, other.linear, atol=tol, rtol=0.0)
            and np.allclose(self.translation, other.translation, atol=tol, rtol=0.0)
        )

    def __repr__(self) -> str:
        return f"AffineMap({self.rows!r})"


def apply(m: AffineMap, p) -> np.ndarray:
    """Apply ``m`` to one point of shape (2,) or a batch of shape (N, 2)."""
    p = np.asarray(p, dtype=float)
    return p @ m.linear.T + m.translation


def invert(m: AffineMap) -> AffineMap:
    if abs(m.det) < SINGULAR_TOL:
        raise SingularMap(f"map is not invertible (det={m.det:g})")
    inv = np.linalg.inv(m.linear)
    return AffineMap(inv, -inv @ m.translation)


def fixed_point(m: AffineMap) -> np.ndarray:
    a = np.eye(2) - m.linear
    if abs(np.linalg.det(a)) < PREDICATE_TOL:
        raise NoUniqueFixedPoint("I - linear is singular")
    return np.linalg.solve(a, m.translation)


@dataclass(frozen=True, eq=False)
class Ifs:
    """An ordered list of contractive maps; symbol ``j`` names ``maps[j-1]``.

    ``exact`` optionally carries the rational coefficients ``(a, b)`` of a
    one-dimensional system, used by the exact interval oracle.
    """

    maps: tuple[AffineMap, ...]
    name: str = "ifs"
    dim: int = 2
    priority_order: tuple[int, ...] | None = None
    exact: tuple[tuple[Fraction, Fraction], ...] | None = None
    ratio_exponents: tuple[float, ...] = field(init=False)

    def __post_init__(self):
        maps = tuple(self.maps)
        object.__setattr__(self, "maps", maps)
        if len(maps) < 2:
            raise ValueError("an IFS needs at least two maps")
        for j, f in enumerate(maps, 1):
            if abs(f.det) < SINGULAR_TOL:
                raise SingularMap(f"map {j} is singular")
            if f.scale >= 1.0:
                raise ValueError(f"map {j} is not contractive (scale {f.scale:g})")
        fps = [fixed_point(f) for f in maps]
        if all(np.allclose(fps[0], q, atol=PREDICATE_TOL) for q in fps[1:]):
            raise ValueError("at least two maps must have distinct fixed points")
        if self.priority_order is not None:
            order = tuple(int(s) for s in self.priority_order)
            if sorted(order) != list(range(1, len(maps) + 1)):
                raise ValueError(f"priority order {order} is not a permutation of 1..{len(maps)}")
            object.__setattr__(self, "priority_order", order)
        r = max(f.scale for f in maps)
        object.__setattr__(self, "ratio_exponents", tuple(math.log(f.scale) / math.log(r) for f in maps))

    @property
    def m(self) -> int:
        return len(self.maps)

    @property
    def scales(self) -> tuple[float, ...]:
        return tuple(f.scale for f in self.maps)

    @property
    def r(self) -> float:
        return max(self.scales)

    @property
    def r_min(self) -> float:
        return min(self.scales)

    def fixed_points(self) -> np.ndarray:
        return np.array([fixed_point(f) for f in self.maps])

    @cached_property
    def inverses(self) -> tuple[AffineMap, ...]:
        return tuple(invert(f) for f in self.maps)

    def is_similitude_system(self) -> bool:
        return all(f.is_similitude() for f in self.maps)

    def one_d_coefficients(self) -> list[tuple[Fraction, Fraction]]:
        """Rational ``(a, b)`` pairs of a 1D system, exact when known."""
        if self.dim != 1:
            raise NotOneDimensional(f"{self.name} is {self.dim}-dimensional")
        if self.exact is not None:
            return list(self.exact)
        return [(Fraction(f.linear[0, 0]), Fraction(f.translation[0])) for f in self.maps]

    def to_json(self) -> dict:
        out: dict = {"name": self.name}
        if self.dim == 1 and self.exact is not None:
            out["dim"] = 1
            out["maps"] = [[str(a), str(b)] for a, b in self.exact]
        elif self.dim == 1:
            out["dim"] = 1
            out["maps"] = [[f.linear[0, 0], f.translation[0]] for f in self.maps]
        else:
            out["maps"] = [f.rows for f in self.maps]
        if self.priority_order is not None:
            out["priority_order"] = list(self.priority_order)
        return out


def _number(v) -> Fraction:
    # Decimal strings and integers parse exactly; JSON floats go through repr.
    if isinstance(v, str):
        return Fraction(v.strip())
    if isinstance(v, float):
        return Fraction(repr(v))
    return Fraction(v)


def ifs_from_dict(data: dict) -> Ifs:
    """Parse the JSON layout ``{"name", "maps", "priority_order"?, "dim"?}``.

    2D maps are ``[[a, b, e], [c, d, g]]``; 1D maps are ``[a, b]`` for
    ``x -> a*x + b``. Coefficients may be numbers or strings such as ``"2/3"``.
    """
    raw = data["maps"]
    name = data.get("name", "ifs")
    order = data.get("priority_order")
    one_d = data.get("dim") == 1 or all(
        isinstance(m, (list, tuple)) and len(m) == 2 and not isinstance(m[0], (list, tuple)) for m in raw
    )
    if one_d:
        exact = tuple((_number(a), _number(b)) for a, b in raw)
        maps = tuple(AffineMap.from_1d(float(a), float(b)) for a, b in exact)
        return Ifs(maps, name=name, dim=1, priority_order=order, exact=exact)
    maps = []
    for m in raw:
        if len(m) != 2 or len(m[0]) != 3 or len(m[1]) != 3:
            raise ValueError(f"bad map layout {m!r}; expected [[a,b,e],[c,d,g]]")
        maps.append(AffineMap.from_rows([float(_number(v)) for v in m[0]], [float(_number(v)) for v in m[1]]))
    return Ifs(tuple(maps), name=name, dim=2, priority_order=order)


def load_ifs(path: str | Path) -> Ifs:
    with open(path) as fh:
        return ifs_from_dict(json.load(fh))


def ifs_1d(pairs: Iterable[tuple], name: str = "ifs1d", priority_order=None) -> Ifs:
    """Convenience constructor for ``x -> a*x + b`` systems; accepts Fractions."""
    exact = tuple((_number(a), _number(b)) for a, b in pairs)
    maps = tuple(AffineMap.from_1d(float(a), float(b)) for a, b in exact)
    return Ifs(maps, name=name, dim=1, priority_order=priority_order, exact=exact)


def compose_word(ifs: Ifs, word: Iterable[int], inverse: bool = False) -> AffineMap:
    """``f_{w1} o ... o f_{wn}``, or ``f_{w1}^-1 o ... o f_{wn}^-1`` with ``inverse``.

    The inverse flag does not invert the forward composition: the factors are
    inverted individually and kept in word order.
    """
    maps = ifs.inverses if inverse else ifs.maps
    out = AffineMap.identity()
    for s in word:
        s = int(s)
        if not 1 <= s <= ifs.m:
            raise BadSymbol(f"symbol {s} outside 1..{ifs.m}")
        out = out @ maps[s - 1]
    return out


def uniform_ratio(ifs: Ifs, tol: float = PREDICATE_TOL) -> float | None:
    """Common contraction ratio, or None when the scales differ.

    The multi-ratio data live on the IFS itself: ``ifs.r`` and
    ``ifs.ratio_exponents``.
    """
    s = ifs.scales
    if max(s) - min(s) <= tol:
        return float(np.mean(s))
    return None
