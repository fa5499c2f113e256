"""Fractal tops: the per-cell maximal address field and truncated top-word sets."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Mapping

import numpy as np

from .addresses import InfiniteAddress, PriorityOrder, Word, reverse_prefix
from .attractor import Raster, Viewport, image_box
from .errors import DepthTooLarge, EscapedAttractor, NotOneDimensional
from .exact1d import ExactTops, exact_tops
from .ifs_core import Ifs, apply, compose_word, invert

MAX_WORD_BITS = 24
EMPTY = -1


def resolve_order(ifs: Ifs, order: PriorityOrder | None) -> PriorityOrder:
    if order is not None:
        if order.m != ifs.m:
            raise ValueError(f"order {order} does not match m={ifs.m}")
        return order
    if ifs.priority_order is not None:
        return PriorityOrder(ifs.priority_order)
    return PriorityOrder.default(ifs.m)


def word_key(word: Iterable[int], order: PriorityOrder) -> int:
    """Integer whose numeric order is the priority order on words of one length."""
    key = 0
    for s in word:
        key = key * order.m + order.weight(s)
    return key


def key_word(key: int, n: int, order: PriorityOrder) -> tuple[int, ...]:
    m = order.m
    out = []
    for _ in range(n):
        key, d = divmod(key, m)
        out.append(order.symbols[m - 1 - d])
    return tuple(reversed(out))


def check_depth(m: int, n: int) -> None:
    if n < 0 or n * math.log2(m) > MAX_WORD_BITS:
        raise DepthTooLarge(f"depth {n} with {m} symbols exceeds {MAX_WORD_BITS} bits of words")


@dataclass(eq=False)
class TopField:
    """Depth-n top word of every covered cell of the base viewport.

    ``keys`` holds :func:`word_key` codes, ``-1`` where no cylinder reaches.
    """

    depth: int
    order: PriorityOrder
    base: Raster
    keys: np.ndarray

    @property
    def viewport(self) -> Viewport:
        return self.base.viewport

    @property
    def m(self) -> int:
        return self.order.m

    def key_of(self, word) -> int:
        return word_key(word, self.order)

    def word_of(self, key: int) -> tuple[int, ...]:
        return key_word(int(key), self.depth, self.order)

    def mask(self, word) -> np.ndarray:
        return self.keys == self.key_of(word)

    def counts(self) -> dict[tuple[int, ...], int]:
        ks, cs = np.unique(self.keys[self.keys >= 0], return_counts=True)
        return {self.word_of(k): int(c) for k, c in zip(ks, cs)}

    def lookup(self, points) -> np.ndarray:
        """Keys at scene points; -1 outside the viewport or where uncovered."""
        pts = np.asarray(points, float)
        shape = pts.shape[:-1]
        ix, iy, inside = self.viewport.index_of(pts.reshape(-1, 2))
        out = np.full(ix.shape, EMPTY, dtype=np.int64)
        out[inside] = self.keys[iy[inside], ix[inside]]
        return out.reshape(shape)

    def word_at(self, point) -> tuple[int, ...] | None:
        k = int(self.lookup(np.asarray(point, float).reshape(1, 2))[0])
        return None if k < 0 else self.word_of(k)

    @property
    def covered(self) -> int:
        return int((self.keys >= 0).sum())


def base_runs(base: Raster) -> np.ndarray:
    """Maximal runs of occupied cells of a 1D raster as scene intervals, shape (R, 2)."""
    row = base.mask[0].astype(np.int8)
    edges = np.diff(np.concatenate([[0], row, [0]]))
    starts, ends = np.nonzero(edges == 1)[0], np.nonzero(edges == -1)[0]
    x0, dx = base.viewport.lo[0], base.viewport.cell[0]
    return np.stack([x0 + starts * dx, x0 + ends * dx], axis=1)


def is_thin(base: Raster) -> bool:
    """True when most occupied cells lie on the raster boundary (dust or curve-like sets)."""
    if base.viewport.is_strip or base.count == 0:
        return False
    return base.erode(1).count < 0.5 * base.count


def _coarse_centers(base: Raster, b: int, cache: dict | None) -> np.ndarray:
    """Centres of the occupied cells of ``base`` block-reduced by ``b``."""
    if cache is not None and b in cache:
        return cache[b]
    vp = base.viewport
    iy, ix = np.nonzero(base.mask)
    nbx = -(-vp.nx // b)
    block = (iy // b) * nbx + ix // b
    _, inv, n = np.unique(block, return_inverse=True, return_counts=True)
    # mean of the occupied centres in each block
    cx = np.bincount(inv, weights=ix + 0.5) / n
    cy = np.bincount(inv, weights=iy + 0.5) / n
    dx, dy = vp.cell
    pts = np.stack([vp.lo[0] + cx * dx, vp.lo[1] + cy * dy], axis=1)
    if cache is not None:
        cache[b] = pts
    return pts


def cylinder_mask(ifs: Ifs, word, base: Raster, runs: np.ndarray | None = None, thin: bool = False, cache: dict | None = None):
    """``f_w(A)`` on the base viewport, as ``(box, block)`` or None when off-view.

    2D: cell centres pulled back through ``f_w^-1`` and sampled in the base;
    for ``thin`` attractors, whose raster has almost no interior, centre
    sampling aliases against the fine structure, so occupied base cells are
    pushed forward instead (block-reduced so that a block maps below a
    quarter cell). 1D: the occupied runs of the base are mapped as intervals; a
    cell is marked when its centre lies in an image interval or when an
    image interval lies inside it, so dust-like attractors are not lost to
    centre sampling.
    """
    vp = base.viewport
    f = compose_word(ifs, word)
    if not vp.is_strip:
        box = image_box(base, f, vp)
        if box is None:
            return None
        ix0, ix1, iy0, iy1 = box
        if not thin:
            return box, base.sample(apply(invert(f), vp.centers(ix0, ix1, iy0, iy1)))
        b = 1
        while f.scale * b * 2 <= 0.25:
            b *= 2
        ix, iy, inside = vp.index_of(apply(f, _coarse_centers(base, b, cache)))
        block = np.zeros((iy1 - iy0, ix1 - ix0), bool)
        ix, iy = ix[inside] - ix0, iy[inside] - iy0
        ok = (ix >= 0) & (ix < ix1 - ix0) & (iy >= 0) & (iy < iy1 - iy0)
        block[iy[ok], ix[ok]] = True
        return box, block
    if runs is None:
        runs = base_runs(base)
    a, b = f.linear[0, 0], f.translation[0]
    x, y = a * runs[:, 0] + b, a * runs[:, 1] + b
    lo, hi = np.minimum(x, y), np.maximum(x, y)
    box = vp.index_box((lo.min(), 0.0), (hi.max(), 0.0))
    if box is None:
        return None
    ix0, ix1, _, _ = box
    dx = vp.cell[0]
    c = vp.lo[0] + (np.arange(ix0, ix1) + 0.5) * dx
    # centre-in-interval: count interval starts minus ends at or below each centre
    inside = np.searchsorted(np.sort(lo), c, side="right") - np.searchsorted(np.sort(hi), c, side="left")
    block = inside > 0
    mid = np.floor(((lo + hi) / 2 - vp.lo[0]) / dx).astype(np.int64) - ix0
    ok = (mid >= 0) & (mid < ix1 - ix0)
    block[mid[ok]] = True
    return box, block.reshape(1, -1)


def _stamp_words(ifs: Ifs, words, base: Raster, order: PriorityOrder) -> np.ndarray:
    vp = base.viewport
    keys = np.full(vp.shape, EMPTY, dtype=np.int64)
    runs = base_runs(base) if vp.is_strip else None
    thin, cache = is_thin(base), {}
    for w in words:
        got = cylinder_mask(ifs, w, base, runs, thin, cache)
        if got is None:
            continue
        (ix0, ix1, iy0, iy1), inside = got
        block = keys[iy0:iy1, ix0:ix1]
        np.maximum(block, np.where(inside, word_key(w, order), EMPTY), out=block)
    return keys


def compute_top_field(
    ifs: Ifs,
    depth: int,
    base: Raster,
    order: PriorityOrder | None = None,
    workers: int = 1,
) -> TopField:
    """Paint every cylinder ``f_w(A)``, ``|w| = depth``, keeping the highest word per cell.

    Painting all words in increasing order with overwrite leaves each cell
    with its maximal word; a per-cell maximum over the stamps is the same
    thing and does not depend on how the words are split among workers.
    Cylinder membership is sampled at cell centres through ``f_w^-1``.
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    check_depth(ifs.m, depth)
    order = resolve_order(ifs, order)
    words = order.words(depth)
    if workers <= 1:
        keys = _stamp_words(ifs, words, base, order)
    else:
        chunks = [words[i::workers] for i in range(workers)]
        with ThreadPoolExecutor(workers) as ex:
            parts = list(ex.map(lambda ws: _stamp_words(ifs, ws, base, order), chunks))
        keys = np.maximum.reduce(parts)
    return TopField(depth, order, base, keys)


def brute_force_top_field(ifs: Ifs, depth: int, base: Raster, order: PriorityOrder | None = None) -> TopField:
    """Per-cell scan from the highest word down; the first cylinder that covers a cell wins."""
    order = resolve_order(ifs, order)
    check_depth(ifs.m, depth)
    vp = base.viewport
    keys = np.full(vp.shape, EMPTY, dtype=np.int64)
    runs = base_runs(base) if vp.is_strip else None
    thin = is_thin(base)
    for w in order.words(depth, descending=True):
        got = cylinder_mask(ifs, w, base, runs, thin)
        if got is None:
            continue
        full = np.zeros(vp.shape, bool)
        ix0, ix1, iy0, iy1 = got[0]
        full[iy0:iy1, ix0:ix1] = got[1]
        hit = full & (keys == EMPTY)
        keys[hit] = word_key(w, order)
    return TopField(depth, order, base, keys)


@dataclass
class TopWordSet:
    """Truncated top addresses of one depth with a size per word.

    Sizes are cell counts for raster data and exact lengths for the 1D oracle.
    """

    depth: int
    sizes: dict[tuple[int, ...], float | int | Fraction]
    unit: str = "cells"
    isolated: set[tuple[int, ...]] = field(default_factory=set)

    @property
    def words(self) -> set[tuple[int, ...]]:
        return set(self.sizes)

    def __contains__(self, word) -> bool:
        return tuple(word) in self.sizes

    def __len__(self) -> int:
        return len(self.sizes)

    def __iter__(self):
        return iter(sorted(self.sizes))

    def left_truncations(self) -> set[tuple[int, ...]]:
        return {w[1:] for w in self.sizes}

    def right_truncations(self) -> set[tuple[int, ...]]:
        return {w[:-1] for w in self.sizes}

    def listing(self, order: PriorityOrder | None = None) -> str:
        if order is None:
            ordered = sorted(self.sizes)
        else:
            ordered = sorted(self.sizes, key=order.sort_key, reverse=True)
        lines = [f"# depth {self.depth}, {len(self.sizes)} words, sizes in {self.unit}"]
        for w in ordered:
            lines.append(f"{''.join(map(str, w))}\t{self.sizes[w]}")
        return "\n".join(lines) + "\n"


def default_min_cells(cells_a: int, r_min: float, depth: int, dim: int = 1) -> int:
    """``max(1, cells(A) * r_min**(dim*depth) / 16)``, rounded down.

    Cell counts scale like length in 1D and like area in 2D, hence ``dim``.
    """
    return max(1, int(math.floor(cells_a * r_min ** (dim * depth) / 16)))


def resolvable_depth(ifs: Ifs, base: Raster, cells: float = 1.0) -> int:
    """Largest depth at which the smallest cylinder of A still spans ``cells`` cells."""
    lo, hi = base.bbox()
    extent = float(np.max((hi - lo) / np.asarray(base.viewport.cell)))
    if extent <= cells or ifs.r_min <= 0:
        return 0
    return int(math.floor(math.log(cells / extent) / math.log(ifs.r_min) + 1e-9))


def field_min_cells(ifs: Ifs, field_: TopField) -> int:
    return default_min_cells(field_.base.count, ifs.r_min, field_.depth, ifs.dim)


def top_words(field_: TopField, min_cells: int | float | None = None, ifs: Ifs | None = None) -> TopWordSet:
    """Words owning at least ``min_cells`` cells of the field.

    With ``min_cells=None`` the default threshold needs the IFS (for
    ``r_min`` and the dimension); without it, 1 is used.
    """
    if min_cells is None:
        min_cells = field_min_cells(ifs, field_) if ifs is not None else 1
    counts = field_.counts()
    return TopWordSet(field_.depth, {w: c for w, c in counts.items() if c >= min_cells})


def exact_top_cells(ifs: Ifs, depth: int, order: PriorityOrder | None = None) -> ExactTops:
    if ifs.dim != 1:
        raise NotOneDimensional(f"{ifs.name} is not one-dimensional")
    order = resolve_order(ifs, order)
    return exact_tops(ifs.one_d_coefficients(), depth, order.words(depth, descending=True))


def top_words_1d_exact(ifs: Ifs, depth: int, order: PriorityOrder | None = None, include_isolated: bool = False) -> TopWordSet:
    """Truncated top words from exact interval subtraction.

    Words are processed from highest to lowest; a word is kept when its
    residual has positive length. Residuals that are single points are
    reported in ``isolated`` and kept only with ``include_isolated``.
    """
    tops = exact_top_cells(ifs, depth, order)
    sizes = {w: c.measure for w, c in tops.cells.items() if c.measure > 0}
    isolated = tops.isolated_words()
    if include_isolated:
        sizes.update({w: Fraction(0) for w in isolated})
    return TopWordSet(depth, sizes, unit="length", isolated=isolated)


def exact_top_sets(ifs: Ifs, max_depth: int, order: PriorityOrder | None = None) -> dict[int, TopWordSet]:
    return {n: top_words_1d_exact(ifs, n, order) for n in range(1, max_depth + 1)}


def tops_orbit(ifs: Ifs, x, steps: int, field_1: TopField, search_cells: int = 2) -> Word:
    """Itinerary of the tops dynamical system ``x -> f_i^-1(x)`` with ``x in A_i``.

    ``A_i`` is read off the depth-1 field. A point landing on an uncovered
    cell takes the label of the nearest covered cell within ``search_cells``.
    """
    if field_1.depth != 1:
        raise ValueError("tops_orbit needs a depth-1 field")
    inverses = ifs.inverses
    x = np.asarray(x, float).reshape(2)
    out = []
    for step in range(steps):
        key = _label_near(field_1, x, search_cells)
        if key is None:
            raise EscapedAttractor(f"orbit left the attractor at step {step} (x={x.tolist()})")
        s = field_1.word_of(key)[0]
        out.append(s)
        x = apply(inverses[s - 1], x)
    return Word(tuple(out), ifs.m)


def _label_near(f: TopField, x: np.ndarray, radius: int) -> int | None:
    vp = f.viewport
    dx, dy = vp.cell
    fx = (x[0] - vp.lo[0]) / dx
    fy = 0.0 if vp.is_strip else (x[1] - vp.lo[1]) / dy
    ix, iy = int(math.floor(fx)), int(math.floor(fy))
    if vp.is_strip and abs(x[1]) > (radius + 1) * dy:
        return None
    best = None
    ys = [0] if vp.is_strip else range(iy - radius, iy + radius + 1)
    for jy in ys:
        for jx in range(ix - radius, ix + radius + 1):
            if 0 <= jx < vp.nx and 0 <= jy < vp.ny and f.keys[jy, jx] >= 0:
                d = (jx + 0.5 - fx) ** 2 + (0 if vp.is_strip else (jy + 0.5 - fy) ** 2)
                if best is None or d < best[0]:
                    best = (d, int(f.keys[jy, jx]))
    if best is None:
        return None
    # the cell containing x wins outright when it is labelled
    if 0 <= ix < vp.nx and 0 <= iy < vp.ny and f.keys[iy, ix] >= 0:
        return int(f.keys[iy, ix])
    return best[1]


def check_reversible(
    address: InfiniteAddress,
    up_to: int,
    sets: Mapping[int, TopWordSet] | Callable[[int], TopWordSet],
) -> list[bool]:
    """Depth-n flag: the reversed prefix ``i_n ... i_1`` is a depth-n top word.

    Finite-depth evidence only; reversibility is a statement about all n.
    """
    get = sets if callable(sets) else sets.__getitem__
    return [reverse_prefix(address, n).symbols in get(n) for n in range(1, up_to + 1)]
