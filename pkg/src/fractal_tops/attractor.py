"""Point clouds and rasters of attractors and of their cylinder images."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import ndimage

from .errors import ViewportMismatch
from .ifs_core import AffineMap, Ifs, apply, compose_word, invert

DEFAULT_RESOLUTION = 1024
DEFAULT_RESOLUTION_1D = 4096
DEFAULT_BURN_IN = 50


@dataclass(frozen=True, eq=False)
class Viewport:
    """Axis-aligned box split into ``nx`` by ``ny`` cells.

    ``ny == 1`` marks a one-dimensional strip along the x-axis.
    """

    lo: tuple[float, float]
    hi: tuple[float, float]
    nx: int
    ny: int

    def __post_init__(self):
        lo = (float(self.lo[0]), float(self.lo[1]))
        hi = (float(self.hi[0]), float(self.hi[1]))
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        if not (hi[0] > lo[0] and hi[1] > lo[1]):
            raise ValueError(f"degenerate viewport {lo} .. {hi}")
        if self.nx < 16 or not (self.ny == 1 or self.ny >= 16):
            raise ValueError(f"resolution {self.nx}x{self.ny} too small (need >= 16 per axis)")

    @classmethod
    def strip(cls, x0: float, x1: float, nx: int) -> "Viewport":
        dx = (x1 - x0) / nx
        return cls((x0, -dx / 2), (x1, dx / 2), nx, 1)

    @classmethod
    def square_cells(cls, lo, hi, resolution: int, pad_cells: float = 0.0) -> "Viewport":
        """Box around ``lo..hi`` whose longer side has ``resolution`` cells."""
        lo = np.asarray(lo, float)
        hi = np.asarray(hi, float)
        ext = hi - lo
        span = float(ext.max())
        if span <= 0:
            span = 1.0
        cell = span / (resolution - 2 * pad_cells) if pad_cells else span / resolution
        counts = np.maximum(np.ceil(ext / cell + 2 * pad_cells - 1e-9).astype(int), 16)
        mid = (lo + hi) / 2
        half = counts * cell / 2
        return cls(tuple(mid - half), tuple(mid + half), int(counts[0]), int(counts[1]))

    @property
    def is_strip(self) -> bool:
        return self.ny == 1

    @property
    def shape(self) -> tuple[int, int]:
        """Array shape ``(ny, nx)``."""
        return (self.ny, self.nx)

    @property
    def cell(self) -> tuple[float, float]:
        return ((self.hi[0] - self.lo[0]) / self.nx, (self.hi[1] - self.lo[1]) / self.ny)

    @property
    def cell_size(self) -> float:
        """Length of a cell along x, the unit for distances in cells."""
        return self.cell[0]

    def same_as(self, other: "Viewport") -> bool:
        return (
            self.nx == other.nx
            and self.ny == other.ny
            and np.allclose(self.lo, other.lo, rtol=0, atol=1e-12 * max(1.0, abs(self.hi[0] - self.lo[0])))
            and np.allclose(self.hi, other.hi, rtol=0, atol=1e-12 * max(1.0, abs(self.hi[0] - self.lo[0])))
        )

    def centers(self, ix0=0, ix1=None, iy0=0, iy1=None) -> np.ndarray:
        """Cell centres of the index block, shape ``(iy1-iy0, ix1-ix0, 2)``."""
        ix1 = self.nx if ix1 is None else ix1
        iy1 = self.ny if iy1 is None else iy1
        dx, dy = self.cell
        xs = self.lo[0] + (np.arange(ix0, ix1) + 0.5) * dx
        ys = self.lo[1] + (np.arange(iy0, iy1) + 0.5) * dy
        if self.is_strip:
            ys = np.zeros_like(ys)
        gx, gy = np.meshgrid(xs, ys)
        return np.stack([gx, gy], axis=-1)

    def index_of(self, points) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Cell indices ``(ix, iy)`` and an inside-flag for each point."""
        p = np.atleast_2d(np.asarray(points, float))
        dx, dy = self.cell
        fx = (p[:, 0] - self.lo[0]) / dx
        ix = np.floor(fx).astype(np.int64)
        # points sitting on the far edge up to rounding belong to the last cell
        ix = np.where((ix == self.nx) & (fx - self.nx < 1e-6), self.nx - 1, ix)
        ix = np.where((ix == -1) & (fx > -1e-6), 0, ix)
        if self.is_strip:
            iy = np.zeros_like(ix)
            inside = (ix >= 0) & (ix < self.nx) & (np.abs(p[:, 1]) <= dy)
        else:
            fy = (p[:, 1] - self.lo[1]) / dy
            iy = np.floor(fy).astype(np.int64)
            iy = np.where((iy == self.ny) & (fy - self.ny < 1e-6), self.ny - 1, iy)
            iy = np.where((iy == -1) & (fy > -1e-6), 0, iy)
            inside = (ix >= 0) & (ix < self.nx) & (iy >= 0) & (iy < self.ny)
        return ix, iy, inside

    def index_box(self, lo, hi, pad: int = 1) -> tuple[int, int, int, int] | None:
        """Index ranges covering the scene box ``lo..hi``, clipped; None if disjoint."""
        dx, dy = self.cell
        ix0 = max(int(math.floor((lo[0] - self.lo[0]) / dx)) - pad, 0)
        ix1 = min(int(math.floor((hi[0] - self.lo[0]) / dx)) + pad + 1, self.nx)
        if self.is_strip:
            iy0, iy1 = 0, 1
        else:
            iy0 = max(int(math.floor((lo[1] - self.lo[1]) / dy)) - pad, 0)
            iy1 = min(int(math.floor((hi[1] - self.lo[1]) / dy)) + pad + 1, self.ny)
        if ix0 >= ix1 or iy0 >= iy1:
            return None
        return ix0, ix1, iy0, iy1

    def corners(self) -> np.ndarray:
        (x0, y0), (x1, y1) = self.lo, self.hi
        if self.is_strip:
            return np.array([[x0, 0.0], [x1, 0.0]])
        return np.array([[x0, y0], [x1, y0], [x1, y1], [x0, y1]])

    def to_json(self) -> dict:
        return {"lo": list(self.lo), "hi": list(self.hi), "nx": self.nx, "ny": self.ny}


@dataclass(eq=False)
class Raster:
    viewport: Viewport
    mask: np.ndarray

    def __post_init__(self):
        self.mask = np.asarray(self.mask, dtype=bool)
        if self.mask.shape != self.viewport.shape:
            raise ValueError(f"mask shape {self.mask.shape} != viewport shape {self.viewport.shape}")

    @classmethod
    def empty(cls, viewport: Viewport) -> "Raster":
        return cls(viewport, np.zeros(viewport.shape, bool))

    @property
    def count(self) -> int:
        return int(self.mask.sum())

    def copy(self) -> "Raster":
        return Raster(self.viewport, self.mask.copy())

    def sample(self, points) -> np.ndarray:
        """Occupancy at arbitrary scene points (False outside the viewport)."""
        pts = np.asarray(points, float)
        shape = pts.shape[:-1]
        ix, iy, inside = self.viewport.index_of(pts.reshape(-1, 2))
        out = np.zeros(ix.shape, bool)
        out[inside] = self.mask[iy[inside], ix[inside]]
        return out.reshape(shape)

    def dilate(self, cells: int = 1) -> "Raster":
        return Raster(self.viewport, dilate_mask(self.mask, cells))

    def erode(self, cells: int = 1) -> "Raster":
        return Raster(self.viewport, erode_mask(self.mask, cells))

    def __or__(self, other: "Raster") -> "Raster":
        _check_same(self, other)
        return Raster(self.viewport, self.mask | other.mask)

    def __and__(self, other: "Raster") -> "Raster":
        _check_same(self, other)
        return Raster(self.viewport, self.mask & other.mask)

    def occupied_centers(self) -> np.ndarray:
        iy, ix = np.nonzero(self.mask)
        dx, dy = self.viewport.cell
        xs = self.viewport.lo[0] + (ix + 0.5) * dx
        ys = np.zeros_like(xs) if self.viewport.is_strip else self.viewport.lo[1] + (iy + 0.5) * dy
        return np.stack([xs, ys], axis=-1)

    def bbox(self) -> tuple[np.ndarray, np.ndarray] | None:
        if not self.mask.any():
            return None
        c = self.occupied_centers()
        half = np.array(self.viewport.cell) / 2
        if self.viewport.is_strip:
            half[1] = 0.0
        return c.min(axis=0) - half, c.max(axis=0) + half


def _structure(mask: np.ndarray) -> np.ndarray:
    if mask.shape[0] == 1:
        return np.ones((1, 3), bool)
    return np.ones((3, 3), bool)


def dilate_mask(mask: np.ndarray, cells: int = 1) -> np.ndarray:
    if cells <= 0:
        return mask.copy()
    return ndimage.binary_dilation(mask, structure=_structure(mask), iterations=cells)


def erode_mask(mask: np.ndarray, cells: int = 1) -> np.ndarray:
    if cells <= 0:
        return mask.copy()
    return ndimage.binary_erosion(mask, structure=_structure(mask), iterations=cells, border_value=0)


def _check_same(a: Raster, b: Raster) -> None:
    if not a.viewport.same_as(b.viewport):
        raise ViewportMismatch("rasters live on different viewports")


def rasterize(points, viewport: Viewport, workers: int = 1) -> Raster:
    """Occupancy raster of a point cloud; chunks are merged with bitwise OR."""
    pts = np.asarray(points, float).reshape(-1, 2)

    def one(chunk):
        mask = np.zeros(viewport.shape, bool)
        ix, iy, inside = viewport.index_of(chunk)
        mask[iy[inside], ix[inside]] = True
        return mask

    if workers <= 1 or len(pts) < 2 * workers:
        return Raster(viewport, one(pts))
    with ThreadPoolExecutor(workers) as ex:
        parts = list(ex.map(one, np.array_split(pts, workers)))
    return Raster(viewport, np.logical_or.reduce(parts))


def chaos_game(ifs: Ifs, n_points: int, seed: int = 0, burn_in: int = DEFAULT_BURN_IN, probabilities=None) -> np.ndarray:
    """``n_points`` samples of the attractor from independent random-map chains.

    Every chain runs ``burn_in`` random maps from a point of the fixed-point
    hull, so each sample is within ``diam * r**burn_in`` of the attractor.
    """
    if n_points <= 0:
        return np.zeros((0, 2))
    rng = np.random.default_rng(seed)
    fps = ifs.fixed_points()
    start = fps[rng.integers(0, len(fps), n_points)]
    lin = np.array([f.linear for f in ifs.maps])
    tr = np.array([f.translation for f in ifs.maps])
    p = None if probabilities is None else np.asarray(probabilities, float) / np.sum(probabilities)
    x = start
    for _ in range(burn_in):
        k = rng.choice(ifs.m, size=n_points, p=p)
        x = np.einsum("nij,nj->ni", lin[k], x) + tr[k]
    return x


def interval_hull_1d(ifs: Ifs):
    """Exact convex hull ``(lo, hi)`` of a 1D attractor, as Fractions."""
    from .exact1d import attractor_hull

    return attractor_hull(ifs.one_d_coefficients())


def is_interval_attractor(ifs: Ifs) -> bool:
    from .exact1d import attractor_hull, covers_hull

    coeffs = ifs.one_d_coefficients()
    return covers_hull(coeffs, attractor_hull(coeffs))


def _refine(ifs: Ifs, pts: np.ndarray, viewport: Viewport, seed: int = 0, max_rounds: int = 400) -> Raster:
    lin = np.array([f.linear for f in ifs.maps])
    tr = np.array([f.translation for f in ifs.maps])
    rng = np.random.default_rng(seed)
    ras = rasterize(pts, viewport)
    # images under all words of a fixed length pack the whole cloud into
    # each small cylinder, which fills most cells in one pass
    depth = max(1, int(math.log(256) / math.log(ifs.m)))
    sub = pts[rng.permutation(len(pts))[:50_000]]
    stack = [sub]
    for _ in range(depth):
        stack = [q @ lin[k].T + tr[k] for q in stack for k in range(ifs.m)]
    for q in stack:
        ras.mask |= rasterize(q, viewport).mask
    reps = np.concatenate([pts, *stack[:: max(1, len(stack) // 8)]])
    ix, iy, inside = viewport.index_of(reps)
    reps, flat = reps[inside], iy[inside] * viewport.nx + ix[inside]
    mask = ras.mask.reshape(-1)
    count, stale = int(mask.sum()), 0
    slot = np.empty(mask.size, dtype=np.int64)
    for _ in range(max_rounds):
        # one random representative per occupied cell: scatter in shuffled order
        perm = rng.permutation(len(reps))
        slot.fill(-1)
        slot[flat[perm]] = perm
        keep = slot[slot >= 0]
        reps, flat = reps[keep], flat[keep]
        images = np.concatenate([reps @ lin[k].T + tr[k] for k in range(ifs.m)])
        ix, iy, inside = viewport.index_of(images)
        img_flat = iy[inside] * viewport.nx + ix[inside]
        mask[img_flat] = True
        reps = np.concatenate([reps, images[inside]])
        flat = np.concatenate([flat, img_flat])
        new_count = int(mask.sum())
        stale = stale + 1 if new_count - count <= count * 3e-5 else 0
        count = new_count
        if stale >= 3:
            break
    return ras


def _cover_1d(ifs: Ifs, viewport: Viewport) -> Raster:
    """Cells meeting a hull cylinder ``f_w([lo, hi])`` with every such cylinder shorter than a cell.

    Each of these cylinders contains points of A, so at that depth the marked
    cells are exactly the cells meeting A, up to cells touched only at an endpoint.
    """
    lo, hi = interval_hull_1d(ifs)
    lo, hi = float(lo), float(hi)
    coeffs = [(float(a), float(b)) for a, b in ifs.one_d_coefficients()]
    dx = viewport.cell[0]
    ivs = np.array([[lo, hi]])
    while (ivs[:, 1] - ivs[:, 0]).max() > dx / 2:
        parts = []
        for a, b in coeffs:
            x, y = a * ivs[:, 0] + b, a * ivs[:, 1] + b
            parts.append(np.stack([np.minimum(x, y), np.maximum(x, y)], axis=1))
        ivs = np.concatenate(parts)
        if len(ivs) > 1 << 24:
            raise MemoryError("cover depth too large for this resolution")
    i0 = np.floor((ivs[:, 0] - viewport.lo[0]) / dx + 1e-9).astype(np.int64)
    i1 = np.floor((ivs[:, 1] - viewport.lo[0]) / dx - 1e-9).astype(np.int64)
    mask = np.zeros(viewport.nx, bool)
    for ix in (i0, i1):
        ok = (ix >= 0) & (ix < viewport.nx)
        mask[ix[ok]] = True
    return Raster(viewport, mask.reshape(viewport.shape))


def attractor_raster(
    ifs: Ifs,
    resolution: int | None = None,
    viewport: Viewport | None = None,
    n_points: int = 100_000,
    seed: int = 0,
) -> Raster:
    """Reference raster of the attractor.

    1D systems are rasterized over their exact hull: interval attractors
    exactly, others from a cover by short hull cylinders. In 2D a chaos-game cloud is refined by pushing one point
    per occupied cell through every map until the occupied set stops growing;
    all points stay on the attractor, so nothing outside it gets painted.
    """
    if ifs.dim == 1:
        resolution = resolution or DEFAULT_RESOLUTION_1D
        lo, hi = interval_hull_1d(ifs)
        if viewport is None:
            viewport = Viewport.strip(float(lo), float(hi), resolution)
        if is_interval_attractor(ifs):
            c = viewport.centers()[..., 0]
            return Raster(viewport, (c >= float(lo)) & (c <= float(hi)))
        return _cover_1d(ifs, viewport)
    resolution = resolution or DEFAULT_RESOLUTION
    pts = np.concatenate([chaos_game(ifs, n_points, seed), ifs.fixed_points()])
    if viewport is None:
        # a couple of unconstrained rounds reach the extreme points
        probe = pts
        lin = np.array([f.linear for f in ifs.maps])
        tr = np.array([f.translation for f in ifs.maps])
        for _ in range(3):
            probe = np.concatenate([probe] + [probe @ lin[k].T + tr[k] for k in range(ifs.m)])
            keep = np.random.default_rng(seed).permutation(len(probe))[: 4 * n_points]
            probe = probe[np.sort(keep)]
        ext_lo, ext_hi = probe.min(axis=0), probe.max(axis=0)
        viewport = Viewport.square_cells(ext_lo, ext_hi, resolution, pad_cells=1)
    return _refine(ifs, pts, viewport, seed)


def transform_bbox(m: AffineMap, lo, hi) -> tuple[np.ndarray, np.ndarray]:
    corners = np.array([[lo[0], lo[1]], [hi[0], lo[1]], [hi[0], hi[1]], [lo[0], hi[1]]])
    img = apply(m, corners)
    return img.min(axis=0), img.max(axis=0)


def pullback_mask(base: Raster, inverse_map: AffineMap, target: Viewport, box=None) -> np.ndarray:
    """Cells of ``target`` whose centre maps by ``inverse_map`` into ``base``.

    This is the raster of ``inverse_map^-1(base)`` sampled at cell centres.
    ``box`` restricts the work to an index block ``(ix0, ix1, iy0, iy1)``.
    """
    out = np.zeros(target.shape, bool)
    if box is None:
        box = (0, target.nx, 0, target.ny)
    ix0, ix1, iy0, iy1 = box
    c = target.centers(ix0, ix1, iy0, iy1)
    out[iy0:iy1, ix0:ix1] = base.sample(apply(inverse_map, c))
    return out


def image_box(base: Raster, forward: AffineMap, target: Viewport):
    bb = base.bbox()
    if bb is None:
        return None
    lo, hi = transform_bbox(forward, *bb)
    return target.index_box(lo, hi)


def cylinder_raster(ifs: Ifs, word, base: Raster, method: str = "push") -> Raster:
    """Raster of ``f_w(A)`` on the base viewport.

    ``push`` maps the occupied cell centres forward and dilates by one cell
    (conservative); ``pull`` samples every cell centre through ``f_w^-1``
    (exact at raster resolution).
    """
    f = compose_word(ifs, word)
    if len(tuple(word)) == 0:
        return base.copy()
    if method == "push":
        img = rasterize(apply(f, base.occupied_centers()), base.viewport)
        return img.dilate(1)
    if method == "pull":
        box = image_box(base, f, base.viewport)
        if box is None:
            return Raster.empty(base.viewport)
        return Raster(base.viewport, pullback_mask(base, invert(f), base.viewport, box))
    raise ValueError(f"unknown method {method!r}")


def hausdorff_estimate(a: Raster, b: Raster) -> float:
    """Symmetric Hausdorff distance between occupied cell centres, in scene units."""
    _check_same(a, b)
    if not a.mask.any() and not b.mask.any():
        return 0.0
    if not a.mask.any() or not b.mask.any():
        return math.inf
    dx, dy = a.viewport.cell
    sampling = (dy, dx)
    d_to_b = ndimage.distance_transform_edt(~b.mask, sampling=sampling)
    d_to_a = ndimage.distance_transform_edt(~a.mask, sampling=sampling)
    return float(max(d_to_b[a.mask].max(), d_to_a[b.mask].max()))


def save_points_csv(points, path: str | Path) -> None:
    np.savetxt(path, np.asarray(points), delimiter=",", fmt="%.17g")


def save_pgm(raster: Raster, path: str | Path) -> None:
    img = np.where(raster.mask[::-1], 0, 255).astype(np.uint8)
    h, w = img.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode())
        fh.write(img.tobytes())


def save_png(raster: Raster, path: str | Path) -> None:
    from PIL import Image

    img = np.where(raster.mask[::-1], 0, 255).astype(np.uint8)
    if img.shape[0] == 1:
        img = np.repeat(img, 16, axis=0)
    Image.fromarray(img, mode="L").save(path, optimize=False)
