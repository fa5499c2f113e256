import json
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fractal_tops.catalog import builtin, builtin_names, resolve_ifs
from fractal_tops.errors import BadSymbol, NoUniqueFixedPoint, SingularMap
from fractal_tops.ifs_core import (
    AffineMap,
    Ifs,
    apply,
    compose_word,
    fixed_point,
    ifs_1d,
    ifs_from_dict,
    invert,
    load_ifs,
    uniform_ratio,
)

coef = st.floats(-2, 2, allow_nan=False, allow_infinity=False)


@st.composite
def invertible_maps(draw):
    a, b, c, d, e, g = (draw(coef) for _ in range(6))
    if abs(a * d - b * c) < 1e-2:
        a, d = a + 1.0, d + 1.0
    if abs(a * d - b * c) < 1e-2:
        a, b, c, d = 1.0, 0.3, -0.2, 0.9
    return AffineMap.from_rows([a, b, e], [c, d, g])


@st.composite
def similitudes(draw, rmax=0.9):
    r = draw(st.floats(0.05, rmax))
    th = draw(st.floats(0, 2 * math.pi))
    flip = draw(st.booleans())
    e, g = draw(coef), draw(coef)
    c, s = math.cos(th), math.sin(th)
    lin = np.array([[c, -s], [s, c]]) * r
    if flip:
        lin = lin @ np.diag([1.0, -1.0])
    return AffineMap(lin, [e, g])


pts = st.lists(st.tuples(coef, coef), min_size=1, max_size=20).map(np.array)


@given(invertible_maps(), pts)
def test_invert_round_trip(f, p):
    back = apply(invert(f), apply(f, p))
    assert np.allclose(back, p, atol=1e-9 * max(1.0, abs(1 / f.det)))


@given(invertible_maps(), invertible_maps(), pts)
def test_composition_is_function_composition(f, g, p):
    assert np.allclose(apply(f @ g, p), apply(f, apply(g, p)), atol=1e-9)


@given(similitudes(), similitudes())
def test_similitude_scales_multiply(f, g):
    assert f.is_similitude() and g.is_similitude()
    assert (f @ g).scale == pytest.approx(f.scale * g.scale, rel=1e-9)


@given(similitudes())
def test_fixed_point_is_fixed(f):
    p = fixed_point(f)
    assert np.allclose(apply(f, p), p, atol=1e-9)


def test_fixed_point_of_translation_raises():
    with pytest.raises(NoUniqueFixedPoint):
        fixed_point(AffineMap(np.eye(2), [1.0, 0.0]))


def test_singular_map_rejected():
    f = AffineMap([[1.0, 2.0], [0.5, 1.0]], [0, 0])
    with pytest.raises(SingularMap):
        invert(f)


def test_rows_and_coefficients_layout():
    f = AffineMap.from_rows([1, 2, 5], [3, 4, 6])
    assert f.rows == [[1, 2, 5], [3, 4, 6]]
    assert f.coefficients == (1, 2, 3, 4, 5, 6)
    assert np.allclose(f([1.0, 1.0]), [8.0, 13.0])


def test_one_d_embedding_keeps_similitudes():
    f = AffineMap.from_1d(-2 / 3, 1.0)
    assert f.is_similitude()
    assert f.scale == pytest.approx(2 / 3)
    assert np.allclose(f([0.5, 0.0]), [1 - 1 / 3, 0.0])


@given(st.lists(st.integers(1, 3), min_size=0, max_size=6), st.lists(st.integers(1, 3), min_size=0, max_size=6))
def test_compose_word_homomorphism(u, v):
    ifs = builtin("three_map")
    assert compose_word(ifs, u + v).allclose(compose_word(ifs, u) @ compose_word(ifs, v), tol=1e-12)


@given(st.lists(st.integers(1, 2), min_size=1, max_size=8))
def test_inverse_word_undoes_reversed_word(w):
    # f_{-w} = f_{w1}^-1 ... f_{wn}^-1 inverts f_{wn ... w1}
    ifs = builtin("leaf")
    g = compose_word(ifs, w, inverse=True) @ compose_word(ifs, list(reversed(w)))
    assert g.allclose(AffineMap.identity(), tol=1e-9)


def test_compose_word_rejects_bad_symbol():
    with pytest.raises(BadSymbol):
        compose_word(builtin("leaf"), [1, 3])


def test_compose_word_oracle_1d():
    # exact rational composition as an independent oracle
    ifs = builtin("ex4")
    coeffs = ifs.one_d_coefficients()
    for w in [(1,), (2,), (1, 2), (2, 2, 1), (2, 1, 2, 1)]:
        a, b = Fraction(1), Fraction(0)
        for s in w:  # (a x + b) o (p x + q) = a p x + a q + b
            p, q = coeffs[s - 1]
            a, b = a * p, a * q + b
        f = compose_word(ifs, w)
        assert f.linear[0, 0] == pytest.approx(float(a)) and f.translation[0] == pytest.approx(float(b))


def test_leaf_coefficients_match_paper():
    # [PAPER] the two leaf similitudes, same scaling factor
    leaf = builtin("leaf")
    assert leaf.maps[0].rows == [[0.7526, -0.2190, 0.2474], [0.2190, 0.7526, -0.0726]]
    assert leaf.maps[1].rows == [[-0.7526, 0.2190, 1.0349], [0.2190, 0.7526, 0.0678]]
    assert leaf.is_similitude_system()
    assert uniform_ratio(leaf) == pytest.approx(math.hypot(0.7526, 0.2190))


def test_examples_3_and_4_are_exact():
    # [PAPER] f1 = 2x/3, f2 = 2x/3 + 1/3 and f2 = 1 - 2x/3
    assert builtin("ex3").one_d_coefficients() == [(Fraction(2, 3), 0), (Fraction(2, 3), Fraction(1, 3))]
    assert builtin("ex4").one_d_coefficients() == [(Fraction(2, 3), 0), (Fraction(-2, 3), 1)]


def test_ifs_validation():
    f = AffineMap.from_1d(0.5, 0.0)
    with pytest.raises(ValueError):
        Ifs((f,))
    with pytest.raises(ValueError):
        Ifs((f, AffineMap.from_1d(0.3, 0.0)))  # common fixed point
    with pytest.raises(ValueError):
        Ifs((f, AffineMap.from_1d(1.5, 1.0)))  # not contractive
    with pytest.raises(ValueError):
        Ifs((f, AffineMap.from_1d(0.5, 0.5)), priority_order=(1, 1))


def test_uniform_ratio_and_exponents():
    assert uniform_ratio(builtin("dyadic")) == pytest.approx(0.5)
    two = builtin("two_ratio")
    assert uniform_ratio(two) is None
    assert two.r == 0.5 and two.r_min == 0.25
    assert two.ratio_exponents == pytest.approx((1.0, 2.0))


def test_json_round_trip(tmp_path):
    for name in builtin_names():
        ifs = builtin(name)
        path = tmp_path / f"{name}.json"
        path.write_text(json.dumps(ifs.to_json()))
        back = load_ifs(path)
        assert back.dim == ifs.dim and back.m == ifs.m
        assert all(a.allclose(b) for a, b in zip(back.maps, ifs.maps))
        if ifs.exact is not None:
            assert back.exact == ifs.exact


def test_parse_layouts_and_errors():
    one = ifs_from_dict({"maps": [["1/3", 0], [0.5, "0.5"]]})
    assert one.dim == 1 and one.exact[0] == (Fraction(1, 3), 0)
    with pytest.raises(ValueError):
        ifs_from_dict({"maps": [[[1, 0], [0, 1]], [[1, 0, 0], [0, 1, 0]]]})
    assert ifs_1d([("1/2", 0), ("1/2", "1/2")]).exact[1] == (Fraction(1, 2), Fraction(1, 2))


def test_resolve_ifs_by_path_or_name(tmp_path):
    assert resolve_ifs("leaf").name == "leaf"
    assert resolve_ifs("examples/leaf.json").name == "leaf"
    p = tmp_path / "mine.json"
    p.write_text(json.dumps({"name": "mine", "maps": [[0.5, 0], [0.5, 0.5]]}))
    assert resolve_ifs(str(p)).name == "mine"
    with pytest.raises(KeyError):
        resolve_ifs("no_such_system")
