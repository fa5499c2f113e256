import itertools
from fractions import Fraction as F

import pytest
from hypothesis import given
from hypothesis import strategies as st

from fractal_tops.addresses import PriorityOrder
from fractal_tops.catalog import builtin
from fractal_tops.exact1d import IntervalSet, Piece, attractor_hull, covers_hull, cylinder, exact_tops
from fractal_tops.tops import top_words_1d_exact

from oracles import cylinder_interval, hull01_system, top_words_by_midpoints

# ---- interval sets against pointwise membership ------------------------------------

ends = st.integers(0, 12).map(lambda k: F(k, 4))


@st.composite
def pieces(draw):
    a, b = sorted((draw(ends), draw(ends)))
    return Piece(a, b, draw(st.booleans()) or a == b, draw(st.booleans()) or a == b)


sets = st.lists(pieces(), max_size=4).map(IntervalSet)
probes = [F(k, 8) for k in range(-2, 27)]


def member(s: IntervalSet, x) -> bool:
    return any((p.lo < x or (p.lo == x and p.lo_closed)) and (x < p.hi or (x == p.hi and p.hi_closed)) for p in s.pieces)


@given(sets, sets)
def test_set_operations_pointwise(a, b):
    u, i, d = a.union(b), a.intersection(b), a.difference(b)
    for x in probes:
        assert member(u, x) == (member(a, x) or member(b, x))
        assert member(i, x) == (member(a, x) and member(b, x))
        assert member(d, x) == (member(a, x) and not member(b, x))


@given(sets)
def test_normal_form_is_disjoint_and_sorted(a):
    for p, q in zip(a.pieces, a.pieces[1:]):
        assert p.hi < q.lo or (p.hi == q.lo and not (p.hi_closed or q.lo_closed))


@given(sets, sets)
def test_measure_inclusion_exclusion(a, b):
    assert a.union(b).measure == a.measure + b.measure - a.intersection(b).measure


@given(sets, st.sampled_from([F(2, 3), F(-1, 2), F(3)]), st.sampled_from([F(0), F(1, 3)]))
def test_image_maps_membership(a, k, c):
    img = a.image(k, c)
    for x in probes:
        assert member(img, k * x + c) == member(a, x)


def test_null_subset():
    a = IntervalSet.closed(0, 1)
    b = IntervalSet([Piece(F(0), F(1), False, False)])
    assert a.same_up_to_null(b) and a != b
    assert a.difference(b).isolated_points == [0, 1]


# ---- hulls ---------------------------------------------------------------------------


def test_hulls():
    assert attractor_hull(builtin("ex3").one_d_coefficients()) == (0, 1)
    assert attractor_hull(builtin("ex4").one_d_coefficients()) == (0, 1)
    assert attractor_hull([(F(1, 3), F(0)), (F(1, 3), F(2, 3))]) == (0, 1)
    # x -> -x/2 + 1 alone fixes 2/3; with x/2 the hull is [0, 1]
    assert attractor_hull([(F(1, 2), F(0)), (F(-1, 2), F(1))]) == (0, 1)
    assert covers_hull(builtin("ex4").one_d_coefficients(), (0, 1))
    assert not covers_hull([(F(1, 3), F(0)), (F(1, 3), F(2, 3))], (0, 1))


@given(st.lists(st.integers(1, 2), max_size=6))
def test_cylinder_matches_composed_interval(w):
    coeffs = builtin("ex4").one_d_coefficients()
    got = cylinder(coeffs, w, IntervalSet.closed(0, 1))
    assert got == IntervalSet.closed(*cylinder_interval(coeffs, w))


# ---- exact tops against the midpoint/DFS oracle --------------------------------------------

ratios = st.sampled_from([F(1, 2), F(2, 3), F(3, 5), F(3, 4), F(-2, 3), F(-1, 2), F(-3, 4)])


@pytest.mark.parametrize("name", ["ex3", "ex4", "dyadic", "cantor"])
@pytest.mark.parametrize("order", [(1, 2), (2, 1)])
def test_exact_tops_match_oracle_on_builtins(name, order):
    ifs = builtin(name)
    coeffs = ifs.one_d_coefficients()
    for n in range(1, 8):
        got = top_words_1d_exact(ifs, n, PriorityOrder(order)).words
        assert got == top_words_by_midpoints(coeffs, n, order), (name, order, n)


@given(ratios, ratios, st.sampled_from([(1, 2), (2, 1)]), st.integers(1, 5))
def test_exact_tops_match_oracle_random(a1, a2, order, n):
    if abs(a1) + abs(a2) < 1:
        a2 = (1 - abs(a1)) * (1 if a2 > 0 else -1)
    coeffs = hull01_system(a1, a2)
    words = list(itertools.product((1, 2), repeat=n))
    words.sort(key=lambda w: [order.index(s) for s in w])
    tops = exact_tops(coeffs, n, words)
    assert tops.words() == top_words_by_midpoints(coeffs, n, order)
    # top cells partition the hull up to finitely many points
    total = sum((c.measure for c in tops.cells.values()), F(0))
    assert total == 1


@given(ratios, ratios, st.integers(2, 6))
def test_truncation_of_top_words(a1, a2, n):
    # every depth-n top word's n-1 prefix is itself a depth-(n-1) top word
    if abs(a1) + abs(a2) < 1:
        return
    coeffs = hull01_system(a1, a2)
    hi = top_words_by_midpoints(coeffs, n)
    lo = top_words_by_midpoints(coeffs, n - 1)
    assert {w[:-1] for w in hi} <= lo


def test_ex4_sizes_paper_counts():
    # [DERIVED] oracle counts for Example 4 under the default order
    coeffs = builtin("ex4").one_d_coefficients()
    sizes = [len(top_words_by_midpoints(coeffs, n)) for n in range(1, 9)]
    assert sizes == [2, 3, 5, 8, 13, 20, 31, 47]
    assert [len(top_words_1d_exact(builtin("ex4"), n)) for n in range(1, 9)] == sizes


def test_disjoint_system_is_accepted_and_overlapping_gap_rejected():
    cantor = [(F(1, 3), F(0)), (F(1, 3), F(2, 3))]
    assert exact_tops(cantor, 2, [(1, 1), (1, 2), (2, 1), (2, 2)]).words() == {(1, 1), (1, 2), (2, 1), (2, 2)}
    bad = [(F(1, 2), F(0)), (F(1, 4), F(1, 4)), (F(1, 4), F(3, 4))]
    with pytest.raises(ValueError):
        exact_tops(bad, 1, [(1,), (2,), (3,)])
