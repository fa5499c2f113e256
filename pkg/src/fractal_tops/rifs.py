"""Reverse IFS on discrete sets: forward orbits, windowed invariance, fast basins.

Maps of a reverse system are stored with rational coefficients, so orbits on
lattices (and the translation sets D of blowups of rational systems) are
computed exactly; points are tuples of Fractions.
"""
from __future__ import annotations

import itertools
import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import numpy as np

from .attractor import Raster, Viewport, pullback_mask, transform_bbox
from .errors import DegenerateOrbit, NotCommonRatio, NotTranslationFamily, OrbitExplosion
from .ifs_core import PREDICATE_TOL, AffineMap, Ifs, invert, uniform_ratio

ORBIT_CAP = 10**7
RHO = (math.sqrt(5) - 1) / 2

Point = tuple[Fraction, ...]


@dataclass(frozen=True)
class RationalMap:
    """``x -> linear x + translation`` with rational entries, in dimension 1 or 2."""

    linear: tuple[tuple[Fraction, ...], ...]
    translation: tuple[Fraction, ...]

    def __post_init__(self):
        lin = tuple(tuple(Fraction(v) for v in row) for row in self.linear)
        tr = tuple(Fraction(v) for v in self.translation)
        if len(lin) != len(tr) or any(len(row) != len(tr) for row in lin):
            raise ValueError("shape mismatch between linear part and translation")
        object.__setattr__(self, "linear", lin)
        object.__setattr__(self, "translation", tr)

    @property
    def dim(self) -> int:
        return len(self.translation)

    def __call__(self, p: Point) -> Point:
        return tuple(sum((a * x for a, x in zip(row, p)), b) for row, b in zip(self.linear, self.translation))

    def __matmul__(self, other: "RationalMap") -> "RationalMap":
        n = self.dim
        lin = tuple(tuple(sum(self.linear[i][k] * other.linear[k][j] for k in range(n)) for j in range(n)) for i in range(n))
        return RationalMap(lin, self(other.translation))

    def to_affine(self) -> AffineMap:
        if self.dim == 1:
            return AffineMap.from_1d(float(self.linear[0][0]), float(self.translation[0]))
        (a, b), (c, d) = self.linear
        e, g = self.translation
        return AffineMap.from_rows([float(a), float(b), float(e)], [float(c), float(d), float(g)])

    def fixed_point(self) -> Point | None:
        """Exact fixed point, None when ``I - linear`` is singular."""
        n = self.dim
        if n == 1:
            a = 1 - self.linear[0][0]
            return None if a == 0 else (self.translation[0] / a,)
        (a, b), (c, d) = self.linear
        m11, m12, m21, m22 = 1 - a, -b, -c, 1 - d
        det = m11 * m22 - m12 * m21
        if det == 0:
            return None
        e, g = self.translation
        return ((e * m22 - m12 * g) / det, (m11 * g - m21 * e) / det)


@dataclass(frozen=True)
class Window:
    """Closed box ``lo <= p <= hi`` per coordinate."""

    lo: tuple[Fraction, ...]
    hi: tuple[Fraction, ...]

    @classmethod
    def radius(cls, r, dim: int = 2, center=None) -> "Window":
        c = tuple(Fraction(0) for _ in range(dim)) if center is None else tuple(Fraction(v) for v in center)
        r = Fraction(r)
        return cls(tuple(v - r for v in c), tuple(v + r for v in c))

    def contains(self, p: Point) -> bool:
        return all(a <= x <= b for a, x, b in zip(self.lo, p, self.hi))

    def shrink(self, margin) -> "Window":
        m = Fraction(margin)
        return Window(tuple(v + m for v in self.lo), tuple(v - m for v in self.hi))

    @property
    def half_width(self) -> Fraction:
        return min((b - a) / 2 for a, b in zip(self.lo, self.hi))


@dataclass(frozen=True)
class ReverseIfs:
    """Expansive maps on a discrete domain (a lattice, optionally cut down by a predicate)."""

    maps: tuple[RationalMap, ...]
    name: str = "rifs"
    domain: Callable[[Point], bool] | None = None
    domain_name: str = "lattice"

    @property
    def dim(self) -> int:
        return self.maps[0].dim

    @property
    def m(self) -> int:
        return len(self.maps)

    def in_domain(self, p: Point) -> bool:
        return self.domain is None or self.domain(p)


@dataclass
class DiscreteOrbit:
    points: dict[Point, int]  # point -> generation at which it was first reached
    window: Window

    def __len__(self) -> int:
        return len(self.points)

    def __contains__(self, p) -> bool:
        return tuple(Fraction(v) for v in p) in self.points

    @property
    def point_set(self) -> set[Point]:
        return set(self.points)

    def array(self) -> np.ndarray:
        pts = sorted(self.points)
        return np.array([[float(v) for v in p] for p in pts], dtype=float).reshape(len(pts), -1)

    def generation(self, n: int) -> set[Point]:
        """Points reached within ``n`` generations."""
        return {p for p, g in self.points.items() if g <= n}

    def without(self, p) -> "DiscreteOrbit":
        p = _as_point(p, len(next(iter(self.points))))
        return DiscreteOrbit({q: g for q, g in self.points.items() if q != p}, self.window)

    def to_csv(self) -> str:
        lines = []
        for p in sorted(self.points):
            lines.append(",".join(_fmt(v) for v in p) + f",{self.points[p]}")
        return "\n".join(lines) + "\n"


def _fmt(v: Fraction) -> str:
    return str(v.numerator) if v.denominator == 1 else f"{float(v):.17g}"


def _as_point(p, dim: int) -> Point:
    if isinstance(p, (int, float, Fraction, str)):
        p = (p,)
    out = tuple(Fraction(v) if not isinstance(v, float) else Fraction(repr(v)) for v in p)
    if len(out) != dim:
        raise ValueError(f"point {p} is not {dim}-dimensional")
    return out


def forward_orbit(
    rifs: ReverseIfs,
    seeds: Iterable,
    window: Window,
    max_gen: int | None = None,
    cap: int = ORBIT_CAP,
) -> DiscreteOrbit:
    """Breadth-first closure of ``seeds`` under all maps, kept inside ``window``.

    Seeds are generation 0. Points leaving the window are dropped; for
    expansive maps every branch eventually leaves, so the search ends.
    """
    seeds = [_as_point(s, rifs.dim) for s in seeds]
    if not seeds:
        raise ValueError("need at least one seed")
    seen: dict[Point, int] = {}
    queue: deque[Point] = deque()
    for s in seeds:
        if window.contains(s) and s not in seen:
            seen[s] = 0
            queue.append(s)
    while queue:
        p = queue.popleft()
        g = seen[p]
        if max_gen is not None and g >= max_gen:
            continue
        for t in rifs.maps:
            q = t(p)
            if q not in seen and window.contains(q):
                seen[q] = g + 1
                queue.append(q)
                if len(seen) > cap:
                    raise OrbitExplosion(f"orbit exceeded {cap} points")
    return DiscreteOrbit(seen, window)


@dataclass
class InvarianceReport:
    inner: Window
    missing: set[Point]  # in S but not an image of S
    extra: set[Point]  # an image of S but not in S
    checked: int

    @property
    def ok(self) -> bool:
        return not self.missing and not self.extra


def verify_invariance_window(rifs: ReverseIfs, orbit: DiscreteOrbit, window: Window | None = None, margin=None) -> InvarianceReport:
    """Compare ``S`` and ``T(S) = U t_i(S)`` on a window shrunk by ``margin``.

    The margin (default: half the half-width) keeps out points whose
    preimages could lie outside the window the orbit was built on.
    """
    window = window or orbit.window
    margin = window.half_width / 2 if margin is None else Fraction(margin)
    inner = window.shrink(margin)
    s_in = {p for p in orbit.points if inner.contains(p)}
    image = {q for p in orbit.points for t in rifs.maps if inner.contains(q := t(p))}
    return InvarianceReport(inner, s_in - image, image - s_in, len(s_in))


def expansivity_check(rifs: ReverseIfs, points: Sequence, pairs: int = 10_000, seed: int = 0, tol: float = PREDICATE_TOL) -> float:
    """Smallest ``d(t x, t y) / d(x, y)`` over random pairs of domain points.

    Non-strict: a ratio of exactly 1 passes (pairs across the strip of the
    Fibonacci example are not stretched). Raises if some map is not injective
    on the sample or shrinks a pair by more than ``tol``.
    """
    pts = np.array([[float(v) for v in p] for p in points])
    if len(pts) < 2:
        raise DegenerateOrbit("need at least two points")
    rng = np.random.default_rng(seed)
    i = rng.integers(0, len(pts), pairs)
    j = rng.integers(0, len(pts), pairs)
    keep = i != j
    x, y = pts[i[keep]], pts[j[keep]]
    d0 = np.linalg.norm(x - y, axis=1)
    worst = math.inf
    for t in rifs.maps:
        f = t.to_affine()
        if rifs.dim == 1:
            tx, ty = x * f.linear[0, 0] + f.translation[0], y * f.linear[0, 0] + f.translation[0]
        else:
            tx, ty = x @ f.linear.T + f.translation, y @ f.linear.T + f.translation
        images = {tuple(t(p)) for p in points}
        if len(images) != len(set(points)):
            raise ValueError(f"a map of {rifs.name} is not injective on the sample")
        worst = min(worst, float((np.linalg.norm(tx - ty, axis=1) / d0).min()))
    if worst < 1 - tol:
        raise ValueError(f"maps of {rifs.name} contract a sampled pair (ratio {worst:g})")
    return worst


# the two examples


def example1() -> ReverseIfs:
    """``t1(x) = 2x``, ``t2(x) = 2x - 1`` on the integers."""
    return ReverseIfs(
        (RationalMap(((2,),), (0,)), RationalMap(((2,),), (-1,))),
        name="dyadic-integers",
    )


def _sign_sqrt5_minus(x: Fraction, u: Fraction) -> int:
    """Sign of ``sqrt(5) x - u``, exactly."""
    if x >= 0 and u <= 0:
        return 0 if x == 0 and u == 0 else 1
    if x <= 0 and u >= 0:
        return -1
    diff = 5 * x * x - u * u
    s = (diff > 0) - (diff < 0)
    return s if x > 0 else -s


def in_golden_strip(p: Point) -> bool:
    """``rho x <= y <= rho x + 1`` with ``rho = (sqrt 5 - 1)/2``, decided exactly.

    ``rho x <= y`` is ``sqrt5 x <= 2y + x`` and ``y <= rho x + 1`` is
    ``2y + x - 2 <= sqrt5 x``; both reduce to sign tests of integer quadratics.
    """
    x, y = p
    return _sign_sqrt5_minus(x, 2 * y + x) <= 0 and _sign_sqrt5_minus(x, 2 * y + x - 2) >= 0


def in_golden_strip_float(p, eps: float = 1e-9) -> bool | None:
    """Float version; None inside the ``eps`` band where doubles cannot decide."""
    x, y = float(p[0]), float(p[1])
    lo, hi = y - RHO * x, RHO * x + 1 - y
    if lo < -eps or hi < -eps:
        return False
    if lo > eps and hi > eps:
        return True
    return None


def example2() -> ReverseIfs:
    """``t1(x,y) = (-x-y, -x)``, ``t2(x,y) = (1-x-y, 1-x)`` on lattice points of the golden strip."""
    lin = ((-1, -1), (-1, 0))
    return ReverseIfs(
        (RationalMap(lin, (0, 0)), RationalMap(lin, (1, 1))),
        name="fibonacci-strip",
        domain=in_golden_strip,
        domain_name="golden strip",
    )


def strip_lattice_points(window: Window) -> set[Point]:
    """All integer points of the golden strip inside ``window`` (the enumeration oracle)."""
    out = set()
    for x in range(math.ceil(window.lo[0]), math.floor(window.hi[0]) + 1):
        for y in range(math.floor(RHO * x) - 1, math.floor(RHO * x) + 3):
            p = (Fraction(x), Fraction(y))
            if window.contains(p) and in_golden_strip(p):
                out.add(p)
    return out


@dataclass
class GapReport:
    lengths: list[float]  # distinct gap lengths, ascending
    counts: list[int]
    scale: float  # 1/sqrt(1 + rho^2): projected length of a unit step in x
    singular: list[tuple[float, int]] = field(default_factory=list)

    def generic(self) -> tuple[list[float], list[int]]:
        """The gap lengths that occur more than once."""
        keep = [i for i, c in enumerate(self.counts) if c > 1]
        return [self.lengths[i] for i in keep], [self.counts[i] for i in keep]

    def summary(self) -> str:
        parts = [f"{v / self.scale:.12f}*c x{n}" for v, n in zip(self.lengths, self.counts)]
        return f"{len(self.lengths)} gap lengths (c={self.scale:.12f}): " + ", ".join(parts)


def fib_projection(orbit: DiscreteOrbit, tol: float = 1e-9) -> GapReport:
    """Orthogonal projection onto ``y = rho x``; distinct consecutive gaps and their counts."""
    if len(orbit) < 3:
        raise DegenerateOrbit(f"need at least 3 points, got {len(orbit)}")
    pts = orbit.array()
    c = 1 / math.sqrt(1 + RHO * RHO)
    u = np.sort((pts[:, 0] + RHO * pts[:, 1]) * c)
    gaps = np.diff(u)
    lengths: list[float] = []
    counts: list[int] = []
    for g in np.sort(gaps):
        if lengths and abs(g - lengths[-1]) <= tol * max(1.0, abs(g)):
            counts[-1] += 1
        else:
            lengths.append(float(g))
            counts.append(1)
    rep = GapReport(lengths, counts, c)
    rep.singular = [(v, n) for v, n in zip(lengths, counts) if n == 1]
    return rep


# blowups of translation families


def translation_family(ifs: Ifs) -> tuple[Fraction | float, list]:
    """``(r, [b_j])`` when every map is ``x -> r x + b_j``; errors otherwise."""
    r = uniform_ratio(ifs)
    if r is None:
        raise NotCommonRatio(f"{ifs.name} has no common ratio")
    if ifs.dim == 1:
        coeffs = ifs.one_d_coefficients()
        a0 = coeffs[0][0]
        if any(a != a0 for a, _ in coeffs) or a0 < 0:
            raise NotTranslationFamily(f"{ifs.name} maps are not x -> r x + b_j")
        return a0, [(b,) for _, b in coeffs]
    for f in ifs.maps:
        if not np.allclose(f.linear, r * np.eye(2), atol=PREDICATE_TOL):
            raise NotTranslationFamily(f"{ifs.name} has rotations or reflections")
    return Fraction(repr(r)), [tuple(Fraction(repr(float(v))) for v in f.translation) for f in ifs.maps]


@dataclass
class BlowupDecomposition:
    rifs: ReverseIfs
    depth: int
    offsets: set[Point]  # D_n
    ratio: Fraction


def blowup_reverse_ifs(ifs: Ifs) -> ReverseIfs:
    """``t_j(x) = r^-1 (x + b_j - b_1)``."""
    r, bs = translation_family(ifs)
    dim = len(bs[0])
    inv = 1 / Fraction(r)
    lin = tuple(tuple(inv if i == j else Fraction(0) for j in range(dim)) for i in range(dim))
    maps = tuple(RationalMap(lin, tuple(inv * (b - b1) for b, b1 in zip(bj, bs[0]))) for bj in bs)
    return ReverseIfs(maps, name=f"{ifs.name}-blowup")


def blowup_decomposition(ifs: Ifs, n: int) -> BlowupDecomposition:
    """The reverse system of a translation family and ``D_n``, the orbit of 0 to generation n.

    ``A(1-bar | n) = A + D_n`` (Minkowski sum); see :func:`minkowski_raster`.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    rifs = blowup_reverse_ifs(ifs)
    zero = tuple(Fraction(0) for _ in range(rifs.dim))
    pts = {zero}
    frontier = {zero}
    for _ in range(n):
        frontier = {t(p) for p in frontier for t in rifs.maps}
        pts |= frontier
    r, _ = translation_family(ifs)
    return BlowupDecomposition(rifs, n, pts, Fraction(r))


def offsets_by_orbit(rifs: ReverseIfs, n: int) -> set[Point]:
    """``D_n`` through :func:`forward_orbit` with an unbounded window."""
    zero = tuple(Fraction(0) for _ in range(rifs.dim))
    big = Fraction(10) ** 30
    orb = forward_orbit(rifs, [zero], Window.radius(big, rifs.dim), max_gen=n)
    return set(orb.points)


def minkowski_raster(base: Raster, offsets: Iterable[Point], viewport: Viewport, method: str = "pull") -> Raster:
    """Raster of ``A + D`` on ``viewport``: the union of ``base`` translated by each offset.

    ``pull`` samples each translate at cell centres inside its bounding box;
    ``push`` moves the occupied base centres and rasterizes them, which keeps
    sets of measure zero visible on coarse viewports.
    """
    mask = np.zeros(viewport.shape, bool)
    lo, hi = base.bbox()
    offs = np.array([[float(d[0]), float(d[1]) if len(d) > 1 else 0.0] for d in offsets]).reshape(-1, 2)
    if method == "push":
        centers = base.occupied_centers()
        # many base centres share a target cell: snapping them to an eighth of
        # a target cell first moves no point by more than 0.18 cells
        step = min(c for c in viewport.cell if c > 0) / 8
        if step > min(c for c in base.viewport.cell if c > 0):
            centers = np.unique(np.round(centers / step), axis=0) * step
        chunk = max(1, 4_000_000 // max(len(centers), 1))
        for k in range(0, len(offs), chunk):
            pts = (centers[None, :, :] + offs[k : k + chunk, None, :]).reshape(-1, 2)
            ix, iy, inside = viewport.index_of(pts)
            mask[iy[inside], ix[inside]] = True
        return Raster(viewport, mask)
    if method != "pull":
        raise ValueError(f"unknown method {method!r}")
    for dv in offs:
        box = viewport.index_box(lo + dv, hi + dv)
        if box is None:
            continue
        ix0, ix1, iy0, iy1 = box
        mask[iy0:iy1, ix0:ix1] |= base.sample(viewport.centers(ix0, ix1, iy0, iy1) - dv)
    return Raster(viewport, mask)


# periodic points and fast basins


def periodic_points(
    rifs: ReverseIfs, max_len: int = 3, window: Window | None = None, lattice_only: bool = True
) -> dict[Point, tuple[int, ...]]:
    """Fixed points of the composites ``t_w`` over words of length <= ``max_len``.

    Only points in the domain (and window, and on the integer lattice unless
    ``lattice_only`` is off) are kept; each maps to the shortest word fixing it.
    """
    out: dict[Point, tuple[int, ...]] = {}
    for n in range(1, max_len + 1):
        for w in itertools.product(range(1, rifs.m + 1), repeat=n):
            f = rifs.maps[w[0] - 1]
            for s in w[1:]:
                f = f @ rifs.maps[s - 1]
            p = f.fixed_point()
            if p is None or not rifs.in_domain(p) or (window is not None and not window.contains(p)):
                continue
            if not lattice_only or all(v.denominator == 1 for v in p):
                out.setdefault(p, w)
    return out


def invariant_set_from_periodic(rifs: ReverseIfs, window: Window, max_len: int = 3) -> DiscreteOrbit:
    """Union of forward orbits of the lattice periodic points found up to ``max_len``."""
    return forward_orbit(rifs, list(periodic_points(rifs, max_len, window)), window)


def _copy_mask(base: Raster, g: AffineMap, viewport: Viewport) -> np.ndarray | None:
    """Raster of ``g(A)`` on ``viewport`` for an expanding ``g``.

    Pushing the occupied base centres is dense enough while ``g`` maps a
    base cell inside one viewport cell; beyond that, viewport centres are
    pulled back through ``g^-1``, which thickens the copy by about
    ``scale(g) * base cell``.
    """
    lo, hi = base.bbox()
    box = viewport.index_box(*transform_bbox(g, lo, hi))
    if box is None:
        return None
    out = np.zeros(viewport.shape, bool)
    if g.scale * base.viewport.cell_size <= viewport.cell_size:
        ix, iy, inside = viewport.index_of(base.occupied_centers() @ g.linear.T + g.translation)
        out[iy[inside], ix[inside]] = True
        return out
    return pullback_mask(base, invert(g), viewport, box)


def fast_basin(ifs: Ifs, viewport: Viewport, max_depth: int, base: Raster) -> Raster:
    """Union of the copies ``f_{-w}(A)``, ``|w| <= max_depth``, that meet ``viewport``.

    Each copy is rendered directly from the reference raster of A (see
    :func:`_copy_mask`), so sampling errors are not compounded from one
    depth to the next. Words giving the same map are drawn once. Pulled-back
    copies are thickened by ``scale(f_{-w}) * base cell``, which bounds the
    useful depth for a given base resolution.
    """
    out = np.zeros(viewport.shape, bool)
    seen = set()
    level = [AffineMap.identity()]
    inverses = ifs.inverses
    for depth in range(max_depth + 1):
        nxt = []
        for g in level:
            key = tuple(np.round(g.coefficients, 9))
            if key in seen:
                continue
            seen.add(key)
            m = _copy_mask(base, g, viewport)
            if m is not None:
                out |= m
            if depth < max_depth:
                # f_{-(w s)} = f_{-w} o f_s^-1
                nxt.extend(g @ h for h in inverses)
        level = nxt
    return Raster(viewport, out)


def basin_invariance_defect(ifs: Ifs, basin: Raster, shrink: float = 0.5, target: Raster | None = None, band: int = 1) -> float:
    """Fraction of basin cells in the central part whose ``f_i^-1`` images fall outside ``target``.

    ``target`` defaults to the basin itself; for a depth-limited basin pass
    the basin one depth deeper. ``target`` is dilated by ``band`` cells to
    absorb sampling error. Only images that stay inside the viewport are
    counted.
    """
    target = (target or basin).dilate(band) if band else (target or basin)
    vp = basin.viewport
    c = basin.occupied_centers()
    mid = (np.array(vp.lo) + np.array(vp.hi)) / 2
    half = (np.array(vp.hi) - np.array(vp.lo)) / 2 * shrink
    c = c[np.all(np.abs(c - mid) <= half, axis=1)]
    if len(c) == 0:
        return 0.0
    bad = total = 0
    for g in ifs.inverses:
        q = c @ g.linear.T + g.translation
        ix, iy, inside = vp.index_of(q)
        total += int(inside.sum())
        bad += int((~target.mask[iy[inside], ix[inside]]).sum())
    return bad / max(total, 1)
