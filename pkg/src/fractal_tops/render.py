"""SVG and PNG output for tilings, top fields and plain rasters.

Tiles are drawn from their cell sets: each row of a tile's cells becomes a
run, and runs repeated over consecutive rows merge into one rectangle. The
output depends only on the inputs, so repeated renders are byte-identical.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .attractor import Raster, Viewport
from .tiling import PartialTiling
from .tops import TopField, TopWordSet

COLOR_MODES = ("address-hash", "photo-sample", "flat")


@dataclass(frozen=True)
class RenderStyle:
    color_mode: str = "address-hash"
    photo: str | None = None
    stroke_width: float = 0.0
    labels: bool = False
    flat_color: str = "#2f4f4f"
    resolution: int = 512

    def __post_init__(self):
        if self.color_mode not in COLOR_MODES:
            raise ValueError(f"color mode must be one of {COLOR_MODES}")
        if self.color_mode == "photo-sample":
            if not self.photo or not Path(self.photo).is_file():
                raise ValueError("photo-sample mode needs a readable photo")


def address_color(label: str) -> tuple[int, int, int]:
    """Stable colour for a tile address: hue from a hash, moderate saturation and value."""
    h = hashlib.sha1(label.encode()).digest()
    hue = int.from_bytes(h[:2], "big") / 65536
    sat = 0.45 + 0.4 * h[2] / 255
    val = 0.6 + 0.35 * h[3] / 255
    i = int(hue * 6) % 6
    f = hue * 6 - int(hue * 6)
    p, q, t = val * (1 - sat), val * (1 - f * sat), val * (1 - (1 - f) * sat)
    rgb = [(val, t, p), (q, val, p), (p, val, t), (p, q, val), (t, p, val), (val, p, q)][i]
    return tuple(int(round(c * 255)) for c in rgb)


def _hex(rgb) -> str:
    return "#{:02x}{:02x}{:02x}".format(*rgb)


def _parse_hex(s: str) -> tuple[int, int, int]:
    s = s.lstrip("#")
    return tuple(int(s[i : i + 2], 16) for i in (0, 2, 4))


class PhotoSampler:
    """Colour of the photo beneath a scene point; the photo is stretched over the viewport."""

    def __init__(self, path: str, viewport: Viewport):
        from PIL import Image

        with Image.open(path) as im:
            self.pixels = np.asarray(im.convert("RGB"))
        self.viewport = viewport

    def __call__(self, point) -> tuple[int, int, int]:
        vp = self.viewport
        h, w = self.pixels.shape[:2]
        u = (point[0] - vp.lo[0]) / (vp.hi[0] - vp.lo[0])
        v = 0.5 if vp.is_strip else (point[1] - vp.lo[1]) / (vp.hi[1] - vp.lo[1])
        x = min(max(int(u * w), 0), w - 1)
        y = min(max(int((1 - v) * h), 0), h - 1)
        return tuple(int(c) for c in self.pixels[y, x])


def synthetic_photo(path: str | Path, size: int = 256, seed: int = 0) -> Path:
    """A smooth colourful test image, standing in for a photograph."""
    from PIL import Image

    rng = np.random.default_rng(seed)
    y, x = np.mgrid[0:size, 0:size] / size
    chans = []
    for _ in range(3):
        a, b, c, d = rng.uniform(1, 5, 4)
        p1, p2 = rng.uniform(0, 2 * np.pi, 2)
        chans.append(0.5 + 0.25 * np.sin(a * np.pi * x + p1) * np.cos(b * np.pi * y) + 0.25 * np.sin(c * x * y * 6 + d + p2))
    img = (np.clip(np.stack(chans, axis=-1), 0, 1) * 255).astype(np.uint8)
    path = Path(path)
    Image.fromarray(img, mode="RGB").save(path)
    return path


def tiling_viewport(tiling: PartialTiling, resolution: int = 512) -> Viewport:
    los = np.array([t.bbox[0] for t in tiling.tiles])
    his = np.array([t.bbox[1] for t in tiling.tiles])
    lo, hi = los.min(axis=0), his.max(axis=0)
    if tiling.base.viewport.is_strip:
        return Viewport.strip(float(lo[0]), float(hi[0]), resolution)
    return Viewport.square_cells(lo, hi, resolution, pad_cells=1)


def _rectangles(mask: np.ndarray) -> list[tuple[int, int, int, int]]:
    """Cover of a boolean image by rectangles ``(ix, iy, w, h)``: row runs merged down columns."""
    rects = []
    open_runs: dict[tuple[int, int], list[int]] = {}
    for iy in range(mask.shape[0]):
        row = mask[iy].astype(np.int8)
        edges = np.diff(np.concatenate([[0], row, [0]]))
        runs = set(zip(np.nonzero(edges == 1)[0].tolist(), np.nonzero(edges == -1)[0].tolist()))
        for key in list(open_runs):
            if key not in runs:
                x0, x1 = key
                y0, h = open_runs.pop(key)
                rects.append((x0, y0, x1 - x0, h))
        for key in sorted(runs):
            if key in open_runs:
                open_runs[key][1] += 1
            else:
                open_runs[key] = [iy, 1]
    for (x0, x1), (y0, h) in open_runs.items():
        rects.append((x0, y0, x1 - x0, h))
    return sorted(rects, key=lambda r: (r[1], r[0]))


def _tile_colors(tiling: PartialTiling, style: RenderStyle, vp: Viewport) -> list[tuple[int, int, int]]:
    if style.color_mode == "flat":
        return [_parse_hex(style.flat_color)] * len(tiling.tiles)
    if style.color_mode == "address-hash":
        return [address_color(t.label) for t in tiling.tiles]
    sampler = PhotoSampler(style.photo, vp)
    return [sampler((t.bbox[0] + t.bbox[1]) / 2) for t in tiling.tiles]


def _fmt(v: float) -> str:
    s = f"{v:.6f}".rstrip("0").rstrip(".")
    return "0" if s in ("-0", "") else s


def tiling_svg(tiling: PartialTiling, style: RenderStyle = RenderStyle(), viewport: Viewport | None = None) -> str:
    if not tiling.tiles:
        raise ValueError("nothing to render: the tiling has no tiles")
    vp = viewport or tiling_viewport(tiling, style.resolution)
    labels = tiling.label_raster(vp)
    colors = _tile_colors(tiling, style, vp)
    dx, dy = vp.cell
    strip = vp.is_strip
    if strip:
        # give a strip some visible height
        dy = max(dx * 8, (vp.hi[0] - vp.lo[0]) / 40)
    width = vp.hi[0] - vp.lo[0]
    height = dy if strip else vp.hi[1] - vp.lo[1]
    y_top = vp.lo[1] + height if not strip else dy
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="{_fmt(vp.lo[0])} 0 {_fmt(width)} {_fmt(height)}" '
        f'width="{vp.nx}" height="{max(1, int(round(vp.nx * height / width)))}">',
        f"<!-- level {tiling.level}, prefix {tiling.prefix}, {len(tiling.tiles)} tiles -->",
    ]
    order = sorted(range(len(tiling.tiles)), key=lambda k: tiling.tiles[k].label)
    for k in order:
        t = tiling.tiles[k]
        mask = labels == k
        if not mask.any():
            continue
        parts = []
        for ix, iy, w, h in _rectangles(mask):
            x = vp.lo[0] + ix * dx
            # scene y grows upward, SVG y downward
            y = y_top - ((iy + h) * dy + (0 if strip else vp.lo[1]))
            parts.append(f"M{_fmt(x)} {_fmt(y)}h{_fmt(w * dx)}v{_fmt(h * dy)}h{_fmt(-w * dx)}z")
        stroke = f' stroke="#000000" stroke-width="{_fmt(style.stroke_width)}"' if style.stroke_width > 0 else ""
        out.append(f'<g id="tile-{t.label}" fill="{_hex(colors[k])}"{stroke}><path d="{"".join(parts)}"/></g>')
        if style.labels:
            iy, ix = np.nonzero(mask)
            cx = vp.lo[0] + (ix.mean() + 0.5) * dx
            cy = y_top - ((iy.mean() + 0.5) * dy + (0 if strip else vp.lo[1]))
            size = _fmt(max(width, height) / 60)
            out.append(f'<text x="{_fmt(cx)}" y="{_fmt(cy)}" font-size="{size}" text-anchor="middle">{t.label}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def render_tiling(tiling: PartialTiling, style: RenderStyle, out: str | Path, png: str | Path | None = None, viewport: Viewport | None = None) -> Path:
    """Write the tiling as SVG (and optionally PNG); returns the SVG path."""
    vp = viewport or tiling_viewport(tiling, style.resolution)
    out = Path(out)
    out.write_text(tiling_svg(tiling, style, vp))
    if png is not None:
        tiling_png(tiling, style, png, vp)
    return out


def label_image(labels: np.ndarray, colors, background=(255, 255, 255)) -> np.ndarray:
    img = np.empty(labels.shape + (3,), np.uint8)
    img[...] = background
    palette = np.array(colors, dtype=np.uint8).reshape(-1, 3)
    hit = labels >= 0
    img[hit] = palette[labels[hit]]
    img = img[::-1]
    if img.shape[0] == 1:
        img = np.repeat(img, max(16, img.shape[1] // 32), axis=0)
    return img


def save_rgb(img: np.ndarray, path: str | Path) -> Path:
    from PIL import Image

    Image.fromarray(img, mode="RGB").save(path, optimize=False)
    return Path(path)


def tiling_png(tiling: PartialTiling, style: RenderStyle, path: str | Path, viewport: Viewport | None = None) -> Path:
    vp = viewport or tiling_viewport(tiling, style.resolution)
    return save_rgb(label_image(tiling.label_raster(vp), _tile_colors(tiling, style, vp)), path)


def render_top_field(field: TopField, path: str | Path, words: TopWordSet | None = None) -> tuple[Path, Path]:
    """PNG with one hashed colour per top word, and a sidecar listing of the words and cell counts."""
    path = Path(path)
    keys = field.keys
    uniq = np.unique(keys[keys >= 0])
    index = np.full(keys.shape, -1, dtype=np.int64)
    colors = []
    for n, k in enumerate(uniq):
        index[keys == k] = n
        colors.append(address_color("".join(map(str, field.word_of(k)))))
    save_rgb(label_image(index, colors or [(0, 0, 0)]), path)
    words = words or TopWordSet(field.depth, field.counts())
    listing = path.with_suffix(".txt")
    listing.write_text(words.listing(field.order))
    return path, listing


def render_raster(raster: Raster, path: str | Path, color=(0, 0, 0)) -> Path:
    labels = np.where(raster.mask, 0, -1)
    return save_rgb(label_image(labels, [color]), path)


def render_overlay(layers: list[tuple[Raster, tuple[int, int, int]]], path: str | Path) -> Path:
    """Several rasters on one viewport, later layers on top."""
    vp = layers[0][0].viewport
    labels = np.full(vp.shape, -1, dtype=np.int64)
    for n, (r, _) in enumerate(layers):
        labels[r.mask] = n
    return save_rgb(label_image(labels, [c for _, c in layers]), path)
