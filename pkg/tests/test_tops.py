from fractions import Fraction as F

import numpy as np
import pytest
from scipy import ndimage
from hypothesis import given
from hypothesis import strategies as st

from fractal_tops.addresses import InfiniteAddress, PriorityOrder
from fractal_tops.attractor import Raster, attractor_raster, rasterize
from fractal_tops.catalog import builtin
from fractal_tops.errors import DepthTooLarge, EscapedAttractor
from fractal_tops.ifs_core import apply
from fractal_tops.tops import (
    brute_force_top_field,
    check_reversible,
    compute_top_field,
    exact_top_sets,
    is_thin,
    key_word,
    resolvable_depth,
    top_words,
    top_words_1d_exact,
    tops_orbit,
    word_key,
)

from conftest import session_for
from oracles import top_words_by_midpoints


@given(st.integers(2, 4).flatmap(lambda m: st.tuples(st.just(m), st.permutations(range(1, m + 1)))), st.data())
def test_word_key_round_trip_and_order(mo, data):
    m, perm = mo
    order = PriorityOrder(tuple(perm))
    ws = order.words(3)
    keys = [word_key(w, order) for w in ws]
    assert keys == sorted(keys) == list(range(m**3))
    w = data.draw(st.sampled_from(ws))
    assert key_word(word_key(w, order), 3, order) == w


def test_depth_guard():
    with pytest.raises(DepthTooLarge):
        compute_top_field(builtin("ex3"), 30, attractor_raster(builtin("ex3"), 64))
    with pytest.raises(ValueError):
        compute_top_field(builtin("ex3"), 0, attractor_raster(builtin("ex3"), 64))


@pytest.mark.parametrize("name", ["ex4", "cantor", "leaf", "sierpinski", "three_map"])
def test_paint_equals_brute_force(name):
    s = session_for(name)
    for n in (1, 2, 3):
        assert np.array_equal(s.field(n).keys, brute_force_top_field(s.ifs, n, s.base).keys)


def test_workers_do_not_change_the_field():
    ifs = builtin("leaf")
    base = attractor_raster(ifs, 256)
    a = compute_top_field(ifs, 5, base, workers=1)
    b = compute_top_field(ifs, 5, base, workers=4)
    assert np.array_equal(a.keys, b.keys)


@pytest.mark.parametrize("name", ["ex3", "ex4", "dyadic", "cantor"])
@pytest.mark.parametrize("order", [None, "2>1"])
def test_raster_tops_equal_oracle_1d(name, order):
    # [DERIVED] the raster at default 1D resolution against the rational midpoint oracle
    o = PriorityOrder.parse(order) if order else None
    s = session_for(name, o)
    coeffs = s.ifs.one_d_coefficients()
    for n in range(1, min(8, s.resolvable) + 1):
        assert s.top_words(n).words == top_words_by_midpoints(coeffs, n, (o or PriorityOrder.default(2)).symbols), n


def test_field_covers_attractor_and_only_it():
    s = session_for("leaf")
    for n in (1, 4):
        f = s.field(n)
        covered = f.keys >= 0
        # centre sampling through f_w^-1 drops some cells on rims and seams of cylinders,
        # never more than two cells from a covered one
        assert covered[s.base.mask].mean() > 0.99
        # and the cover stays that close to A
        dist = ndimage.distance_transform_edt(~covered)
        assert dist[s.base.mask].max() <= 2.0
        back = ndimage.distance_transform_edt(~s.base.mask)
        assert back[covered].max() <= 2.5


def test_top_cells_of_depth_one_are_the_priority_partition():
    s = session_for("leaf")
    f1 = s.field(1)
    a1 = f1.mask((1,))
    # a cell holding 1 on top is in f_1(A); cells in f_1(A) are never labelled 2
    from fractal_tops.attractor import cylinder_raster

    c1 = cylinder_raster(s.ifs, (1,), s.base, "pull")
    assert np.array_equal(a1, c1.mask & (f1.keys >= 0))
    assert not (f1.mask((2,)) & c1.mask).any()


@pytest.mark.parametrize("name", ["leaf", "sierpinski", "twisted_half", "three_map"])
def test_truncation_lemma_raster(name):
    s = session_for(name)
    for n in range(2, 6):
        w = s.top_words(n)
        prev = set(s.field(n - 1).counts())
        assert w.left_truncations() <= prev and w.right_truncations() <= prev


@pytest.mark.parametrize("name", ["ex3", "ex4", "cantor", "dyadic", "two_ratio"])
def test_shift_invariance_exact(name):
    # S(Σ_n) = Σ_{n-1}: the left shift of top words is onto
    sets = exact_top_sets(builtin(name), 8)
    for n in range(2, 9):
        assert sets[n].left_truncations() == sets[n - 1].words


def test_disjoint_systems_have_every_word_on_top():
    for name in ("cantor", "sierpinski"):
        s = session_for(name)
        for n in (1, 2, 3, 4):
            assert len(s.top_words(n)) == s.ifs.m**n


def test_is_thin_and_resolvable_depth():
    assert is_thin(session_for("sierpinski").base)
    assert not is_thin(session_for("leaf").base)
    expected = {"cantor": 7, "dyadic": 12, "ex3": 20, "ex4": 20, "leaf": 28, "sierpinski": 10}
    for name, d in expected.items():
        assert resolvable_depth(session_for(name).ifs, session_for(name).base) == d


def test_top_words_threshold():
    s = session_for("ex4")
    f = s.field(4)
    assert top_words(f, min_cells=1).words >= top_words(f, min_cells=10**9).words
    assert len(top_words(f, min_cells=10**9)) == 0


def test_listing_orders_by_priority():
    w = top_words_1d_exact(builtin("ex4"), 2)
    lines = w.listing(PriorityOrder.default(2)).splitlines()
    assert lines[0].startswith("# depth 2, 3 words")
    assert [l.split("\t")[0] for l in lines[1:]] == ["11", "12", "21"]


def test_tops_orbit_reads_shift_of_address():
    # the tops dynamical system shifts the top address of a point
    s = session_for("ex3")
    f1 = s.field(1)
    x = np.array([0.3, 0.0])
    orbit = tops_orbit(s.ifs, x, 6, f1)
    f6 = s.field(6)
    assert orbit.symbols == f6.word_at(x)


def test_check_reversible_flags():
    ifs = builtin("ex4")
    sets = exact_top_sets(ifs, 6)
    assert all(check_reversible(InfiniteAddress.parse("(1)", 2), 6, sets))
    # under the default order f_22(A) is covered by the higher cylinders of 11, 12 and 21
    assert check_reversible(InfiniteAddress.parse("(2)", 2), 6, sets)[1:] == [False] * 5


def test_ex3_depth_one_cells():
    # [DERIVED] under 1 > 2: [0, 2/3] carries 1 and (2/3, 1] carries 2
    s = session_for("ex3")
    c = s.base.viewport.centers()[0, :, 0]
    f = s.field(1)
    assert np.array_equal(f.mask((1,))[0], c <= 2 / 3)
    assert np.array_equal(f.mask((2,))[0], c > 2 / 3)
    exact = top_words_1d_exact(s.ifs, 1)
    assert exact.sizes == {(1,): F(2, 3), (2,): F(1, 3)}


def test_small_word_sets():
    assert len(top_words(session_for("cantor").field(3), min_cells=1)) == 8
    assert len(top_words(session_for("dyadic").field(2), min_cells=1)) == 4
    assert all(v == F(1, 27) for v in top_words_1d_exact(builtin("cantor"), 3).sizes.values())


def test_tops_orbit_examples():
    s = session_for("ex3")
    f1 = s.field(1)
    assert tops_orbit(s.ifs, (0.0, 0.0), 8, f1).symbols == (1,) * 8
    assert tops_orbit(s.ifs, (1.0, 0.0), 8, f1).symbols == (2,) * 8
    with pytest.raises(EscapedAttractor):
        tops_orbit(s.ifs, (5.0, 0.0), 3, f1)


def test_topshift_lemma_1d():
    # the cells of k1 k2..kn lie in f_k1(cells of k2..kn), dilated by one cell
    s = session_for("ex4")
    vp = s.base.viewport
    for n in range(2, 7):
        hi, lo = s.field(n), s.field(n - 1)
        for w in hi.counts():
            src = Raster(vp, lo.mask(w[1:]))
            img = rasterize(apply(s.ifs.maps[w[0] - 1], src.occupied_centers()), vp).dilate(1)
            assert not (hi.mask(w) & ~img.mask).any(), (n, w)


def test_topshift_lemma_leaf():
    # in 2D a few cells where the depth-(n-1) field misses rim cells of A sit up to 3 cells out
    s = session_for("leaf")
    vp = s.base.viewport
    for n in (2, 3, 4):
        hi, lo = s.field(n), s.field(n - 1)
        for w in hi.counts():
            src = Raster(vp, lo.mask(w[1:]))
            img = rasterize(apply(s.ifs.maps[w[0] - 1], src.occupied_centers()), vp)
            cells = hi.mask(w)
            dist = ndimage.distance_transform_edt(~img.mask)[cells]
            assert dist.max() <= 3.0
            assert (dist > 1.5).sum() <= 1e-3 * cells.sum()
