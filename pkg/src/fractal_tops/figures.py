"""Regenerates the figure set: attractors, tops, blowup sequences, tiling patches, fast basins, the Fibonacci strip.

Every file is a pure function of the configuration, so two runs write
byte-identical outputs.
"""
from __future__ import annotations

import logging
from pathlib import Path

import numpy as np

from .addresses import PriorityOrder
from .attractor import Raster, Viewport, rasterize
from .catalog import builtin
from .config import DEFAULTS
from .render import RenderStyle, render_overlay, render_raster, render_tiling, render_top_field, synthetic_photo
from .rifs import RHO, Window, example2, fast_basin, fib_projection, forward_orbit
from .verify import Session

log = logging.getLogger(__name__)


def _tops_sequence(s: Session, out: Path, stem: str, depths) -> list[Path]:
    files = []
    for n in depths:
        png, txt = render_top_field(s.field(n), out / f"{stem}_depth{n}.png", s.top_words(n))
        files += [png, txt]
    return files


def _tiling_sequence(s: Session, address: str, out: Path, stem: str, levels, style: RenderStyle) -> list[Path]:
    i = s.address(address)
    files = []
    for k in levels:
        t = s.tiling(i, k)
        svg = render_tiling(t, style, out / f"{stem}_k{k}.svg", png=out / f"{stem}_k{k}.png")
        man = out / f"{stem}_k{k}.tsv"
        man.write_text(t.manifest())
        files += [svg, svg.with_suffix(".png"), man]
    return files


def fig_tops_1d(out: Path, cfg: dict) -> list[Path]:
    """Tops of two-map systems with scalings 1/3, 1/2 and 2/3, and Example 3 under the reversed order."""
    files = []
    for name in ("cantor", "dyadic", "ex3", "ex4"):
        files += _tops_sequence(Session(builtin(name), cfg), out, f"tops_{name}", range(1, 7))
    s = Session(builtin("ex3"), cfg, PriorityOrder.parse("2>1"))
    files += _tops_sequence(s, out, "tops_ex3_order21", range(1, 7))
    return files


def fig_tilings_1d(out: Path, cfg: dict) -> list[Path]:
    style = RenderStyle(labels=True, stroke_width=0.0, resolution=cfg["resolution_1d"] // 4)
    files = []
    for name, address in (("ex3", "(1)"), ("ex4", "(1)"), ("ex4", "(12)")):
        stem = f"tiling_{name}_{address.strip('()')}"
        files += _tiling_sequence(Session(builtin(name), cfg), address, out, stem, range(0, 6), style)
    return files


def fig_leaf(out: Path, cfg: dict, photo: Path) -> list[Path]:
    s = Session(builtin("leaf"), cfg)
    files = [render_raster(s.base, out / "leaf_attractor.png", (20, 90, 30))]
    files += _tops_sequence(s, out, "tops_leaf", range(1, 7))
    style = RenderStyle(labels=False, resolution=cfg["resolution"] // 2)
    files += _tiling_sequence(s, "(1)", out, "blowup_leaf", range(0, 7), style)
    photo_style = RenderStyle(color_mode="photo-sample", photo=str(photo), resolution=cfg["resolution"] // 2)
    files += _tiling_sequence(s, "(1)", out, "leaf_patch_photo", [6], photo_style)
    return files


def fig_three_map(out: Path, cfg: dict) -> list[Path]:
    s = Session(builtin("three_map"), cfg)
    files = [render_raster(s.base, out / "three_map_attractor.png")]
    files += _tops_sequence(s, out, "tops_three_map", (1, 2, 3, 4))
    return files


def fig_fast_basins(out: Path, cfg: dict, depth: int = 4) -> list[Path]:
    files = []
    for name in ("sierpinski", "twisted_half"):
        s = Session(builtin(name), cfg)
        lo, hi = s.base.bbox()
        mid, half = (lo + hi) / 2, (hi - lo).max() * 2
        vp = Viewport.square_cells(mid - half, mid + half, cfg["resolution"] // 2)
        basin = fast_basin(s.ifs, vp, depth, s.base)
        a = Raster(vp, s.base.sample(vp.centers()))
        files.append(render_overlay([(basin, (60, 60, 160)), (a, (200, 40, 40))], out / f"fast_basin_{name}.png"))
    return files


def fig_fibonacci(out: Path, cfg: dict) -> list[Path]:
    R = cfg["fib_radius"]
    orbit = forward_orbit(example2(), [(0, 0), (0, 1)], Window.radius(R))
    csv = out / "fibonacci_orbit.csv"
    csv.write_text(orbit.to_csv())
    rep = fib_projection(orbit)
    txt = out / "fibonacci_gaps.txt"
    txt.write_text(rep.summary() + "\n")
    pts = orbit.array()
    vp = Viewport.square_cells((-R - 1, -R - 1), (R + 1, R + 1), 4 * (2 * R + 2))
    dots = rasterize(pts, vp).dilate(1)
    x = np.linspace(-R - 1, R + 1, 20 * (2 * R + 2))
    lines = rasterize(np.concatenate([np.stack([x, RHO * x], 1), np.stack([x, RHO * x + 1], 1)]), vp)
    png = render_overlay([(lines, (160, 160, 160)), (dots, (0, 0, 0))], out / "fibonacci_strip.png")
    return [csv, txt, png]


def generate_all(out: str | Path, config: dict | None = None) -> list[Path]:
    """Write every figure into ``out``; returns the written paths."""
    cfg = dict(DEFAULTS, **(config or {}))
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    photo = synthetic_photo(out / "photo.png", seed=cfg["seed"])
    files = [photo]
    for step in (fig_tops_1d, fig_tilings_1d, fig_three_map, fig_fast_basins, fig_fibonacci):
        log.info("figures: %s", step.__name__)
        files += step(out, cfg)
    files += fig_leaf(out, cfg, photo)
    return files
