"""Blowups, partial top tilings and the relations between consecutive levels.

Tiles are ``f_{-i|k}(pi_top(t|k))``. All tiles of one level share the map
``f_{-i|k}``, so a level is stored as a depth-k top field on the reference
raster of A plus that one map. Comparisons between levels k and k+1 are done
back in the frame of A: pulling a level-(k+1) tile back by ``f_{-i|k}^-1``
gives ``f_{i_{k+1}}^-1(pi_top(j))``, which is compared with ``pi_top(p)``.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .addresses import InfiniteAddress, PriorityOrder, TileAddress, Word
from .attractor import Raster, Viewport, pullback_mask, rasterize, transform_bbox
from .errors import ClassificationFailure, DepthTooLarge
from .exact1d import IntervalSet
from .ifs_core import AffineMap, Ifs, apply, compose_word, invert
from .tops import (
    EMPTY,
    TopField,
    compute_top_field,
    exact_top_cells,
    resolve_order,
    top_words,
)

CONTAINMENT_THRESHOLD = 0.98
MAX_BLOWUP_CELLS = 1 << 26


def _prefix(i, k: int, m: int) -> Word:
    if isinstance(i, InfiniteAddress):
        return i.prefix(k)
    w = Word(tuple(i), m)
    if len(w) < k:
        raise ValueError(f"address {w} shorter than level {k}")
    return w[:k]


def blowup_map(ifs: Ifs, i, n: int) -> AffineMap:
    """``f_{-i|n} = f_{i1}^-1 o ... o f_{in}^-1``."""
    return compose_word(ifs, _prefix(i, n, ifs.m), inverse=True)


def blowup_viewport(ifs: Ifs, i, n: int, base: Raster, resolution: int | None = None, max_cells: int = MAX_BLOWUP_CELLS) -> Viewport:
    """Viewport around ``f_{-i|n}`` of the bounding box of A.

    By default the cell count per axis matches the base raster, so cells
    grow with the blowup.
    """
    vp = base.viewport
    lo, hi = base.bbox()
    g = blowup_map(ifs, i, n)
    if vp.is_strip:
        xs = apply(g, np.array([[lo[0], 0.0], [hi[0], 0.0]]))[:, 0]
        nx = resolution or vp.nx
        out = Viewport.strip(float(xs.min()), float(xs.max()), nx)
    else:
        blo, bhi = transform_bbox(g, lo, hi)
        out = Viewport.square_cells(blo, bhi, resolution or max(vp.nx, vp.ny), pad_cells=1)
    if out.nx * out.ny > max_cells:
        raise DepthTooLarge(f"blowup viewport of {out.nx}x{out.ny} cells exceeds {max_cells}")
    return out


def blowup_region(
    ifs: Ifs, i, n: int, base: Raster, viewport: Viewport | None = None, resolution: int | None = None, method: str = "pull"
) -> Raster:
    """Raster of ``A_n = f_{-i|n}(A)``.

    ``pull`` samples cell centres through ``f_{-i|n}^-1``; ``push`` maps the
    occupied base centres forward, for attractors of measure zero.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    if n == 0 and viewport is None:
        return base.copy()
    vp = viewport or blowup_viewport(ifs, i, n, base, resolution)
    g = blowup_map(ifs, i, n)
    if method == "push":
        return rasterize(apply(g, base.occupied_centers()), vp)
    if method != "pull":
        raise ValueError(f"unknown method {method!r}")
    return Raster(vp, pullback_mask(base, invert(g), vp))


def blowup_isometry(ifs: Ifs, i, j, n: int) -> AffineMap:
    """``f_{-j|n} o (f_{-i|n})^-1``, carrying ``A(i|n)`` onto ``A(j|n)``."""
    return blowup_map(ifs, j, n) @ invert(blowup_map(ifs, i, n))


@dataclass(eq=False)
class Tile:
    """One tile: ``transform`` applied to a top cell (``key``) or to all of A (``key is None``)."""

    label: str
    transform: AffineMap
    cells: int
    bbox: tuple[np.ndarray, np.ndarray]
    key: int | None = None
    address: TileAddress | None = None
    top_word: tuple[int, ...] = ()
    scale: float | None = None


@dataclass(eq=False)
class PartialTiling:
    """The tiles of one level of a blowup, with the data needed to draw them."""

    ifs: Ifs
    level: int
    prefix: Word
    tiles: list[Tile]
    base: Raster
    field: TopField | None = None
    order: PriorityOrder | None = None

    def __len__(self) -> int:
        return len(self.tiles)

    def words(self) -> set[tuple[int, ...]]:
        return {t.top_word for t in self.tiles}

    def tile(self, word) -> Tile:
        word = tuple(word)
        for t in self.tiles:
            if t.top_word == word:
                return t
        raise KeyError(word)

    def _source_keys(self, pts: np.ndarray) -> np.ndarray:
        if self.field is None:
            return np.where(self.base.sample(pts), 0, EMPTY)
        return self.field.lookup(pts)

    def label_raster(self, viewport: Viewport) -> np.ndarray:
        """Index into ``tiles`` for each cell of ``viewport``, -1 where uncovered."""
        out = np.full(viewport.shape, -1, dtype=np.int64)
        centers = viewport.centers()
        groups: dict[int, list[int]] = {}
        for idx, t in enumerate(self.tiles):
            groups.setdefault(id(t.transform), []).append(idx)
        for idxs in groups.values():
            t0 = self.tiles[idxs[0]]
            pts = apply(invert(t0.transform), centers)
            if all(self.tiles[i].key is not None for i in idxs) and self.field is not None:
                keys = self.field.lookup(pts)
                lut = {self.tiles[i].key: i for i in idxs}
                for key, i in lut.items():
                    out[keys == key] = i
            else:
                for i in idxs:
                    out[self.base.sample(apply(invert(self.tiles[i].transform), centers))] = i
        return out

    def tile_mask(self, tile: Tile, viewport: Viewport) -> np.ndarray:
        pts = apply(invert(tile.transform), viewport.centers())
        if tile.key is None:
            return self.base.sample(pts)
        return self.field.lookup(pts) == tile.key

    def union_raster(self, viewport: Viewport) -> Raster:
        return Raster(viewport, self.label_raster(viewport) >= 0)

    def count_in_ball(self, center, radius: float) -> int:
        """Tiles whose bounding box meets the closed ball; finite by construction."""
        c = np.asarray(center, float)
        n = 0
        for t in self.tiles:
            lo, hi = t.bbox
            nearest = np.clip(c, lo, hi)
            if np.linalg.norm(nearest - c) <= radius:
                n += 1
        return n

    def manifest(self) -> str:
        """One line per tile: address, six transform coefficients, cell count, bbox."""
        lines = ["# address\ta\tb\tc\td\te\tg\tcells\txmin\tymin\txmax\tymax"]
        for t in sorted(self.tiles, key=lambda t: t.label):
            coeffs = "\t".join(f"{v:.12g}" for v in t.transform.coefficients)
            lo, hi = t.bbox
            box = "\t".join(f"{v:.9g}" for v in (lo[0], lo[1], hi[0], hi[1]))
            lines.append(f"{t.label}\t{coeffs}\t{t.cells}\t{box}")
        return "\n".join(lines) + "\n"


def _cell_bbox(mask: np.ndarray, vp: Viewport):
    iy, ix = np.nonzero(mask)
    dx, dy = vp.cell
    lo = np.array([vp.lo[0] + ix.min() * dx, 0.0 if vp.is_strip else vp.lo[1] + iy.min() * dy])
    hi = np.array([vp.lo[0] + (ix.max() + 1) * dx, 0.0 if vp.is_strip else vp.lo[1] + (iy.max() + 1) * dy])
    return lo, hi


def _image_bbox(g: AffineMap, lo, hi, strip: bool):
    if strip:
        xs = apply(g, np.array([[lo[0], 0.0], [hi[0], 0.0]]))[:, 0]
        return np.array([xs.min(), 0.0]), np.array([xs.max(), 0.0])
    return transform_bbox(g, lo, hi)


def partial_tiling(
    ifs: Ifs,
    i,
    k: int,
    base: Raster,
    field: TopField | None = None,
    min_cells: int | None = None,
    order: PriorityOrder | None = None,
    workers: int = 1,
) -> PartialTiling:
    """Tiles ``tile(i|k . t)`` for the depth-k top words ``t`` that survive ``min_cells``.

    Level 0 is the single tile A.
    """
    order = resolve_order(ifs, order)
    prefix = _prefix(i, k, ifs.m)
    g = blowup_map(ifs, i, k)
    strip = base.viewport.is_strip
    if k == 0:
        lo, hi = base.bbox()
        tile = Tile("∅", g, base.count, _image_bbox(g, lo, hi, strip), None, TileAddress(prefix, prefix), (), 1.0)
        return PartialTiling(ifs, 0, prefix, [tile], base, None, order)
    if field is None:
        field = compute_top_field(ifs, k, base, order, workers=workers)
    if field.depth != k:
        raise ValueError(f"field depth {field.depth} != level {k}")
    words = top_words(field, min_cells, ifs=ifs)
    tiles = []
    for w in sorted(words.words):
        key = field.key_of(w)
        lo, hi = _cell_bbox(field.keys == key, field.viewport)
        addr = TileAddress(prefix, Word(w, ifs.m))
        tiles.append(Tile(str(addr), g, words.sizes[w], _image_bbox(g, lo, hi, strip), key, addr, w, 1.0))
    return PartialTiling(ifs, k, prefix, tiles, base, field, order)


@dataclass
class TransitionReport:
    level: int
    symbol: int
    children: dict[tuple[int, ...], list[tuple[int, ...]]]
    new_tiles: list[tuple[int, ...]]
    containment: dict[tuple[int, ...], float]
    violations: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    sub_threshold_children: list[tuple[int, ...]] = field(default_factory=list)
    # parents p whose extension i_{k+1} p is not a top word at all
    missing_extensions: list[tuple[int, ...]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    @property
    def flags(self) -> dict[str, bool]:
        return {
            "exactly_one_child": not any("children" in v for v in self.violations),
            "new_tiles_first_symbol": not any("new tile" in v for v in self.violations),
            "child_words": not any("child word" in v for v in self.violations),
        }

    def summary(self) -> str:
        state = "ok" if self.ok else f"{len(self.violations)} violations"
        return (
            f"level {self.level}->{self.level + 1}: {len(self.children)} parents, "
            f"{len(self.new_tiles)} new tiles, {state}"
        )


def _neighbour_keys(f_keys: np.ndarray, vp: Viewport, pts: np.ndarray, radius: int = 1) -> np.ndarray:
    """Keys of the (2r+1)^2 cells around each point, shape (N, K); -1 outside."""
    ix, iy, inside = vp.index_of(pts)
    offs = [(ox, oy) for oy in ([0] if vp.is_strip else range(-radius, radius + 1)) for ox in range(-radius, radius + 1)]
    out = np.full((len(pts), len(offs)), EMPTY, dtype=np.int64)
    # points off the viewport still see neighbours that are on it
    dx, dy = vp.cell
    fx = np.floor((pts[:, 0] - vp.lo[0]) / dx).astype(np.int64)
    fy = np.zeros_like(fx) if vp.is_strip else np.floor((pts[:, 1] - vp.lo[1]) / dy).astype(np.int64)
    for c, (ox, oy) in enumerate(offs):
        jx, jy = fx + ox, fy + oy
        ok = (jx >= 0) & (jx < vp.nx) & (jy >= 0) & (jy < vp.ny)
        out[ok, c] = f_keys[jy[ok], jx[ok]]
    return out


def _band(m: AffineMap, vp: Viewport) -> int:
    """Neighbourhood radius, in cells, covering where ``m`` can move a cell centre's sampling error."""
    reach = abs(m.scale) * (0.5 if vp.is_strip else math.sqrt(0.5))
    return max(1, math.ceil(reach - 1e-9))


def _level_keys(t: PartialTiling) -> np.ndarray:
    if t.field is None:
        return np.where(t.base.mask, 0, EMPTY)
    return t.field.keys


def classify_transition(
    ifs: Ifs,
    i,
    k: int,
    tiling_k: PartialTiling,
    tiling_k1: PartialTiling,
    threshold: float = CONTAINMENT_THRESHOLD,
    strict: bool = True,
) -> TransitionReport:
    """Children and new tiles between levels k and k+1.

    A level-(k+1) tile is contained in a level-k tile when at least
    ``threshold`` of its cells, pulled back into the frame of A, land in the
    parent's top cell dilated by a band as wide as the pullback can move a
    cell centre (at least one cell). Each parent must have exactly one
    child, whose top word is ``i_{k+1}`` followed by the parent's word; every
    tile with no parent must have a first symbol other than ``i_{k+1}``.
    """
    if tiling_k.level != k or tiling_k1.level != k + 1:
        raise ValueError("tilings are not at consecutive levels k, k+1")
    prefix = _prefix(i, k + 1, ifs.m)
    s = prefix[k]
    vp = tiling_k.base.viewport
    f1 = tiling_k1.field
    parent_keys = _level_keys(tiling_k)
    back = ifs.inverses[s - 1]
    band = _band(back, vp)

    def parent_word(key):
        return () if tiling_k.field is None else tiling_k.field.word_of(key)

    parents = {t.top_word for t in tiling_k.tiles}
    report = TransitionReport(k, s, {p: [] for p in parents}, [], {})
    if prefix.reversed().symbols not in f1.counts():
        report.warnings.append(f"{prefix.reversed()} is not a depth-{k + 1} top word; address may not be reversible")

    def containment(word):
        cells = f1.mask(word)
        centers = vp.centers()[cells]
        pulled = apply(back, centers)
        exact = np.full(len(pulled), EMPTY, dtype=np.int64)
        ix, iy, inside = vp.index_of(pulled)
        exact[inside] = parent_keys[iy[inside], ix[inside]]
        hits = Counter(int(v) for v in exact if v >= 0)
        if not hits:
            return None, 0.0
        best = hits.most_common(1)[0][0]
        near = _neighbour_keys(parent_keys, vp, pulled, band)
        frac = float((near == best).any(axis=1).mean())
        return parent_word(best), frac

    for t in tiling_k1.tiles:
        p, frac = containment(t.top_word)
        report.containment[t.top_word] = frac
        if p is not None and frac >= threshold and p in parents:
            report.children[p].append(t.top_word)
        else:
            report.new_tiles.append(t.top_word)
            if t.top_word[0] == s:
                report.violations.append(f"new tile {t.top_word} starts with i_{k + 1}={s}")

    present = f1.counts()
    report.missing_extensions = sorted(p for p in parents if (s,) + p not in present)
    for p, kids in sorted(report.children.items()):
        expected = (s,) + p
        if not kids and expected in present:
            q, frac = containment(expected)
            if q == p and frac >= threshold:
                kids.append(expected)
                report.sub_threshold_children.append(expected)
        if len(kids) != 1:
            report.violations.append(f"parent {p} has {len(kids)} children {kids}")
        elif kids[0] != expected:
            report.violations.append(f"child word {kids[0]} of parent {p} is not {expected}")
    if strict and report.violations:
        raise ClassificationFailure("; ".join(report.violations), report.violations)
    return report


def verify_nesting_onebar(ifs: Ifs, K: int, tilings: Sequence[PartialTiling], threshold: float = CONTAINMENT_THRESHOLD) -> list[bool]:
    """For each k < K: every level-k tile reappears unchanged at level k+1.

    In the frame of A this is ``pi_top(1t) == f_1(pi_top(t))``; both
    inclusions are checked up to a band of at least one cell (see
    :func:`classify_transition`).
    """
    for t in tilings:
        if any(s != 1 for s in t.prefix):
            raise ValueError("nesting is only asserted for the address 1-bar")
    by_level = {t.level: t for t in tilings}
    f1, f1_inv = ifs.maps[0], ifs.inverses[0]
    out = []
    for k in range(K):
        lo_t, hi_t = by_level[k], by_level[k + 1]
        vp = lo_t.base.viewport
        lo_keys, hi_keys = _level_keys(lo_t), hi_t.field.keys
        ok = True
        for t in lo_t.tiles:
            child_key = hi_t.field.key_of((1,) + t.top_word)
            parent_key = 0 if lo_t.field is None else lo_t.field.key_of(t.top_word)
            child_cells = vp.centers()[hi_keys == child_key]
            parent_cells = vp.centers()[lo_keys == parent_key]
            if len(child_cells) == 0:
                ok = False
                break
            back = _neighbour_keys(lo_keys, vp, apply(f1_inv, child_cells), _band(f1_inv, vp))
            fwd = _neighbour_keys(hi_keys, vp, apply(f1, parent_cells))
            if (back == parent_key).any(axis=1).mean() < threshold or (fwd == child_key).any(axis=1).mean() < threshold:
                ok = False
                break
        out.append(ok)
    return out


# exact one-dimensional versions


@dataclass
class ExactTransition:
    level: int
    symbol: int
    children: dict[tuple[int, ...], list[tuple[int, ...]]]
    new_tiles: list[tuple[int, ...]]
    violations: list[str]
    missing_extensions: list[tuple[int, ...]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def _exact_level(ifs: Ifs, k: int, order: PriorityOrder) -> dict[tuple[int, ...], IntervalSet]:
    if k == 0:
        from .exact1d import attractor_hull

        return {(): IntervalSet.closed(*attractor_hull(ifs.one_d_coefficients()))}
    tops = exact_top_cells(ifs, k, order)
    return {w: c for w, c in tops.cells.items() if c.measure > 0}


def classify_transition_exact(ifs: Ifs, i, k: int, order: PriorityOrder | None = None, levels=None) -> ExactTransition:
    """Theorem-5 style classification with exact interval containment (1D only)."""
    order = resolve_order(ifs, order)
    s = _prefix(i, k + 1, ifs.m)[k]
    lv = levels or {}
    cur = lv.get(k) or _exact_level(ifs, k, order)
    nxt = lv.get(k + 1) or _exact_level(ifs, k + 1, order)
    a, b = ifs.one_d_coefficients()[s - 1]
    children = {p: [] for p in cur}
    new = []
    for j, cell in sorted(nxt.items()):
        pulled = cell.image(1 / a, -b / a)
        hosts = [p for p, pc in cur.items() if pulled.null_subset_of(pc)]
        if hosts:
            for p in hosts:
                children[p].append(j)
        else:
            new.append(j)
    violations = []
    for p, kids in sorted(children.items()):
        expected = (s,) + p
        if len(kids) != 1:
            violations.append(f"parent {p} has {len(kids)} children {kids}")
        elif kids[0] != expected:
            violations.append(f"child word {kids[0]} of parent {p} is not {expected}")
    for j in new:
        if j[0] == s:
            violations.append(f"new tile {j} starts with i_{k + 1}={s}")
    missing = sorted(p for p in cur if (s,) + p not in nxt)
    return ExactTransition(k, s, children, new, violations, missing)


def verify_nesting_exact(ifs: Ifs, K: int, order: PriorityOrder | None = None) -> list[bool]:
    order = resolve_order(ifs, order)
    levels = {k: _exact_level(ifs, k, order) for k in range(K + 1)}
    a, b = ifs.one_d_coefficients()[0]
    out = []
    for k in range(K):
        ok = True
        for t, cell in levels[k].items():
            child = levels[k + 1].get((1,) + t)
            if child is None or not child.same_up_to_null(cell.image(a, b)):
                ok = False
                break
        out.append(ok)
    return out


# stopping-time tilings for systems with the open set condition


def stopping_time_eta(word: Sequence[int], exponents: Sequence[float]) -> tuple[float, float]:
    """``(eta_minus, eta)``: exponent sums without and with the last symbol."""
    word = tuple(word)
    if not word:
        raise ValueError("stopping times need a nonempty word")
    eta = float(sum(exponents[s - 1] for s in word))
    return eta - exponents[word[-1] - 1], eta


def _stopping_words(m: int, exponents: Sequence[float], target: float, tol: float = 1e-9):
    stack = [((), 0.0)]
    out = []
    while stack:
        w, eta = stack.pop()
        for s in range(m, 0, -1):
            e = eta + exponents[s - 1]
            if e >= target - tol:
                out.append((w + (s,), eta, e))
            else:
                stack.append((w + (s,), e))
    return sorted(out)


def osc_stopping_tiling(ifs: Ifs, i, j: int, base: Raster) -> PartialTiling:
    """Copies ``f_{-i|j} f_w (A)`` over words w whose stopping band holds ``eta(i|j)``.

    ``Tile.scale`` is the ratio of ``f_w``; the level-normalised ratio
    ``scale / r**(eta(i|j) - 1)`` lies in ``[r**a_max, r]`` for integer
    exponents. Assumes the open set condition; it is not checked here.
    """
    if j < 1:
        raise ValueError("level must be >= 1")
    prefix = _prefix(i, j, ifs.m)
    target = stopping_time_eta(prefix, ifs.ratio_exponents)[1]
    g = blowup_map(ifs, prefix, j)
    lo, hi = base.bbox()
    strip = base.viewport.is_strip
    tiles = []
    for w, _, eta in _stopping_words(ifs.m, ifs.ratio_exponents, target):
        t = g @ compose_word(ifs, w)
        scale = ifs.r**eta
        tiles.append(Tile(f"{prefix}.{Word(w, ifs.m)}", t, base.count, _image_bbox(t, lo, hi, strip), None, None, w, scale))
    return PartialTiling(ifs, j, prefix, tiles, base, None, resolve_order(ifs, None))


def band_ratio(ifs: Ifs, tiling: PartialTiling) -> list[float]:
    """Tile scales normalised by ``r**(eta(i|j) - 1)``."""
    target = stopping_time_eta(tiling.prefix, ifs.ratio_exponents)[1]
    return [t.scale / ifs.r ** (target - 1) for t in tiling.tiles]


def _map_key(f: AffineMap, digits: int = 7) -> tuple:
    return tuple(round(v, digits) + 0.0 for v in f.coefficients)


def osc_cylinder_maps(ifs: Ifs, i, n: int) -> set[tuple]:
    """Keys of ``f_{-i|n} f_{w}`` over all words w of length n (single ratio)."""
    g = blowup_map(ifs, i, n)
    out = set()
    frontier = [AffineMap.identity()]
    for _ in range(n):
        frontier = [h @ f for h in frontier for f in ifs.maps]
    for h in frontier:
        out.add(_map_key(g @ h))
    return out


def osc_new_cylinder_count(ifs: Ifs, i, n: int) -> tuple[int, bool]:
    """Number of level-(n+1) cylinder copies absent at level n, and whether level n nests in n+1."""
    a = osc_cylinder_maps(ifs, i, n)
    b = osc_cylinder_maps(ifs, i, n + 1)
    return len(b - a), a <= b
