import re

import numpy as np
import pytest

from fractal_tops.addresses import InfiniteAddress
from fractal_tops.render import (
    RenderStyle,
    _rectangles,
    address_color,
    render_tiling,
    render_top_field,
    synthetic_photo,
    tiling_svg,
)

from conftest import session_for

ONEBAR = InfiniteAddress.parse("(1)", 2)


@pytest.mark.parametrize("seed", [0, 1])
def test_rectangles_cover_mask_exactly(seed):
    rng = np.random.default_rng(seed)
    mask = rng.random((40, 50)) < 0.4
    back = np.zeros_like(mask)
    for ix, iy, w, h in _rectangles(mask):
        assert not back[iy : iy + h, ix : ix + w].any()  # no overlaps
        back[iy : iy + h, ix : ix + w] = True
    assert np.array_equal(back, mask)


def test_address_colors_are_stable():
    assert address_color("1.21") == address_color("1.21")
    assert address_color("1.21") != address_color("1.12")


def test_svg_is_deterministic_with_one_group_per_tile():
    s = session_for("ex4")
    t = s.tiling(ONEBAR, 3)
    a = tiling_svg(t, RenderStyle(labels=True))
    b = tiling_svg(t, RenderStyle(labels=True))
    assert a == b
    ids = re.findall(r'<g id="tile-([^"]+)"', a)
    assert sorted(ids) == sorted(tile.label for tile in t.tiles)
    assert len(re.findall(r"<text ", a)) == len(t)


def test_style_validation(tmp_path):
    with pytest.raises(ValueError):
        RenderStyle(color_mode="rainbow")
    with pytest.raises(ValueError):
        RenderStyle(color_mode="photo-sample", photo=str(tmp_path / "missing.png"))


def test_flat_and_photo_modes(tmp_path):
    s = session_for("ex3")
    t = s.tiling(ONEBAR, 2)
    flat = tiling_svg(t, RenderStyle(color_mode="flat"))
    assert set(re.findall(r'fill="(#[0-9a-f]{6})"', flat)) == {"#2f4f4f"}
    photo = synthetic_photo(tmp_path / "p.png", size=64, seed=5)
    svg = render_tiling(t, RenderStyle(color_mode="photo-sample", photo=str(photo), stroke_width=0.5), tmp_path / "t.svg", png=tmp_path / "t.png")
    text = svg.read_text()
    assert 'stroke-width="0.5"' in text
    assert (tmp_path / "t.png").stat().st_size > 0


def test_synthetic_photo_is_seeded(tmp_path):
    a = synthetic_photo(tmp_path / "a.png", seed=2).read_bytes()
    b = synthetic_photo(tmp_path / "b.png", seed=2).read_bytes()
    c = synthetic_photo(tmp_path / "c.png", seed=3).read_bytes()
    assert a == b != c


def test_top_field_listing(tmp_path):
    s = session_for("ex4")
    png, txt = render_top_field(s.field(3), tmp_path / "f.png", s.top_words(3))
    lines = txt.read_text().splitlines()
    assert lines[0] == "# depth 3, 5 words, sizes in cells"
    assert [l.split("\t")[0] for l in lines[1:]] == ["111", "112", "121", "211", "212"]
    assert png.stat().st_size > 0


def test_empty_tiling_is_an_error():
    s = session_for("ex3")
    t = s.tiling(ONEBAR, 1)
    from dataclasses import replace

    with pytest.raises(ValueError):
        tiling_svg(replace(t, tiles=[]))
