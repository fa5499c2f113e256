import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fractal_tops.addresses import InfiniteAddress
from fractal_tops.attractor import attractor_raster
from fractal_tops.catalog import builtin
from fractal_tops.errors import ClassificationFailure
from fractal_tops.ifs_core import apply
from fractal_tops.tiling import (
    band_ratio,
    blowup_isometry,
    blowup_map,
    blowup_region,
    classify_transition,
    classify_transition_exact,
    osc_cylinder_maps,
    osc_new_cylinder_count,
    osc_stopping_tiling,
    partial_tiling,
    stopping_time_eta,
    verify_nesting_exact,
    verify_nesting_onebar,
)

from conftest import session_for
from oracles import in_level, top_words_by_midpoints

ONE_D = ["cantor", "dyadic", "ex3", "ex4"]
ONEBAR = InfiniteAddress.parse("(1)", 2)
TWELVE = InfiniteAddress.parse("(12)", 2)


# ---- 1-bar: the pointwise fact behind nesting -------------------------------------------


@given(st.sampled_from(["dyadic", "ex3", "ex4"]), st.fractions(0, 1, max_denominator=500), st.integers(0, 6))
def test_top_word_of_f1_image_prepends_one(name, x, k):
    # [DERIVED] any word 1v covers f_1(x) iff v covers x, and 1 outranks 2
    coeffs = builtin(name).one_d_coefficients()
    a, b = coeffs[0]
    assert in_level(coeffs, a * x + b, k + 1, (1, 2)) == (1,) + in_level(coeffs, x, k, (1, 2))


@pytest.mark.parametrize("name", ONE_D)
def test_exact_nesting_onebar(name):
    assert verify_nesting_exact(builtin(name), 8) == [True] * 8


@pytest.mark.parametrize("name", ONE_D)
def test_exact_classification_onebar(name):
    ifs = builtin(name)
    for k in range(8):
        r = classify_transition_exact(ifs, ONEBAR, k)
        assert r.ok, r.violations
        # one child per parent, words 1p
        assert all(kids == [(1,) + p] for p, kids in r.children.items())
        assert all(j[0] != 1 for j in r.new_tiles)


@pytest.mark.parametrize("name", ["dyadic", "ex3", "ex4", "sierpinski"])
def test_raster_classification_onebar(name):
    s = session_for(name)
    for k in range(4):
        r = classify_transition(s.ifs, ONEBAR, k, s.tiling(ONEBAR, k), s.tiling(ONEBAR, k + 1))
        assert r.ok and not r.warnings
    tilings = [s.tiling(ONEBAR, k) for k in range(5)]
    assert verify_nesting_onebar(s.ifs, 4, tilings) == [True] * 4


def test_new_tile_count_matches_top_word_growth():
    # [DERIVED] under 1-bar, new tiles at level k+1 are the top words not starting with 1
    ifs = builtin("ex4")
    coeffs = ifs.one_d_coefficients()
    for k in range(1, 7):
        r = classify_transition_exact(ifs, ONEBAR, k)
        words = top_words_by_midpoints(coeffs, k + 1)
        assert sorted(r.new_tiles) == sorted(w for w in words if w[0] != 1)


# ---- pinned counterexamples for other addresses ------------------------------------------


def test_ex4_twelve_bar_level_one_has_a_childless_parent():
    # [DERIVED] 22 is never on top (f_11, f_12, f_21 cover f_22(A)), so tile(1.2) gets no child at level 2
    ifs = builtin("ex4")
    assert (2, 2) not in top_words_by_midpoints(ifs.one_d_coefficients(), 2)
    r = classify_transition_exact(ifs, TWELVE, 1)
    assert not r.ok
    assert r.missing_extensions == [(2,)]
    assert r.children[(2,)] == []


@pytest.mark.parametrize("name", ["ex3", "ex4"])
def test_twelve_bar_fails_on_odd_levels_only(name):
    ifs = builtin(name)
    bad = [k for k in range(8) if not classify_transition_exact(ifs, TWELVE, k).ok]
    assert bad == [1, 3, 5, 7]


def test_violations_are_explained_by_missing_extensions():
    # each offending parent p lacks the top word i_{k+1} p: either it has no child,
    # or its region is taken by a different word
    ifs = builtin("ex4")
    for k in range(8):
        r = classify_transition_exact(ifs, TWELVE, k)
        bad = sorted(p for p, kids in r.children.items() if kids != [(r.symbol,) + p])
        assert bad == r.missing_extensions
        assert not any(v.startswith("new tile") for v in r.violations)


def test_strict_classification_raises():
    s = session_for("ex4")
    with pytest.raises(ClassificationFailure):
        classify_transition(s.ifs, TWELVE, 1, s.tiling(TWELVE, 1), s.tiling(TWELVE, 2))
    r = classify_transition(s.ifs, TWELVE, 1, s.tiling(TWELVE, 1), s.tiling(TWELVE, 2), strict=False)
    assert r.missing_extensions == [(2,)] and not r.flags["exactly_one_child"]


# ---- tilings, blowups --------------------------------------------------------------------


def test_level_zero_is_attractor_and_manifest_lists_tiles():
    s = session_for("ex3")
    t0 = s.tiling(ONEBAR, 0)
    assert len(t0) == 1 and t0.tiles[0].label == "∅"
    t3 = s.tiling(ONEBAR, 3)
    lines = t3.manifest().splitlines()
    assert len(lines) == len(t3) + 1
    assert all(len(l.split("\t")) == 12 for l in lines)


def test_tiles_partition_the_blowup():
    s = session_for("ex4")
    for k in (1, 2, 3, 4):
        t = s.tiling(ONEBAR, k)
        region = blowup_region(s.ifs, ONEBAR, k, s.base)
        labels = t.label_raster(region.viewport)
        covered = labels >= 0
        # the tiles cover A(1|k) and are pairwise disjoint by construction (one label per cell)
        assert (covered == region.mask).mean() > 0.999


def test_blowup_of_ex3_is_interval_growing_by_three_halves():
    ifs = builtin("ex3")
    for n in range(6):
        g = blowup_map(ifs, ONEBAR, n)
        assert apply(g, np.array([[1.0, 0.0]]))[0, 0] == pytest.approx(1.5**n)


def test_blowup_isometry_carries_blowups():
    ifs = builtin("leaf")
    h = blowup_isometry(ifs, ONEBAR, TWELVE, 3)
    assert h.is_similitude() and h.scale == pytest.approx(1.0)
    want = blowup_map(ifs, TWELVE, 3)
    assert (h @ blowup_map(ifs, ONEBAR, 3)).allclose(want, tol=1e-9)


def test_count_in_ball_is_finite():
    s = session_for("ex3")
    t = s.tiling(ONEBAR, 4)
    assert 0 < t.count_in_ball((0.5, 0.0), 1.0) <= len(t)


def test_partial_tiling_without_cached_field():
    ifs = builtin("dyadic")
    base = attractor_raster(ifs, 512)
    t = partial_tiling(ifs, ONEBAR, 3, base)
    assert t.words() == {w for w in top_words_by_midpoints(ifs.one_d_coefficients(), 3)}


# ---- open set condition -------------------------------------------------------------------


@pytest.mark.parametrize("name", ["dyadic", "sierpinski"])
def test_osc_new_cylinder_count(name):
    ifs = builtin(name)
    m = ifs.m
    i = InfiniteAddress.constant(1, m)
    for n in range(7):
        new, nested = osc_new_cylinder_count(ifs, i, n)
        assert nested and new == m**n * (m - 1)


def test_dyadic_cylinder_copies_are_integer_translates():
    # [DERIVED] f_{-1}^n f_w (x) = x + j with j = 0 .. 2^n - 1
    ifs = builtin("dyadic")
    for n in range(6):
        got = osc_cylinder_maps(ifs, ONEBAR, n)
        assert got == {(1.0, 0.0, 0.0, 1.0, float(j), 0.0) for j in range(2**n)}


def test_stopping_time_tiling_moran_sum():
    # [DERIVED] for ratios 1/2 and 1/4 the dimension solves x + x^2 = 1;
    # a stopping set of words satisfies sum of (ratio_w)^D = 1
    ifs = builtin("two_ratio")
    base = attractor_raster(ifs, 4096)
    rho = (math.sqrt(5) - 1) / 2
    for address in ("(1)", "(2)", "(12)"):
        i = InfiniteAddress.parse(address, 2)
        for j in range(1, 6):
            t = osc_stopping_tiling(ifs, i, j, base)
            etas = [sum(ifs.ratio_exponents[s - 1] for s in tile.top_word) for tile in t.tiles]
            assert sum(rho**e for e in etas) == pytest.approx(1.0)
            ratios = band_ratio(ifs, t)
            assert all(ifs.r ** max(ifs.ratio_exponents) - 1e-12 <= q <= ifs.r + 1e-12 for q in ratios)


def test_stopping_time_eta():
    assert stopping_time_eta((1, 2, 2), (1.0, 2.0)) == (3.0, 5.0)
    with pytest.raises(ValueError):
        stopping_time_eta((), (1.0,))
