import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ifslab import (AffineMap, OneParamFamily, classify, detect_degenerate, fixed_point,
                    instantiate, scaling_data)
from ifslab.core import similarity_ratio
from ifslab.errors import NotSimilarity, SingularSystem
from ifslab.families import load_fixture, rotation

angles = st.floats(0, 2 * np.pi, allow_nan=False)
ratios = st.floats(0.05, 2.0, allow_nan=False)


def test_affine_map_call_and_compose():
    f = AffineMap([[2.0, 0.0], [0.0, 3.0]], [1.0, -1.0])
    g = AffineMap(rotation(np.pi / 2), [0.0, 1.0])
    x = np.array([[1.0, 2.0], [-0.5, 0.25]])
    assert np.allclose(f.compose(g)(x), f(g(x)))
    assert f.dim == 2


def test_affine_map_equality_is_exact():
    a = AffineMap([[1.0]], [0.0])
    assert a == AffineMap([[1.0]], [0.0])
    assert a != AffineMap([[1.0 + 1e-15]], [0.0])
    assert len({a, AffineMap([[1.0]], [0.0])}) == 1


def test_instantiate_scales_linear_part_and_translation(rot45_pair):
    t = 0.7
    inst = instantiate(rot45_pair, t)
    for m, g in zip(rot45_pair.members, inst):
        assert np.allclose(g.L, t * m.L)
        assert np.allclose(g.a, t * m.a + m.q)
    with pytest.raises(ValueError):
        instantiate(rot45_pair, -0.1)


def test_fixed_point_solves_map():
    fam = load_fixture("shear_common_point")
    for m in fam.members:
        p = fixed_point(m, 0.5)
        assert np.allclose(m.at(0.5)(p), p, atol=1e-12)
    # t = 0 gives the offset
    assert np.array_equal(fixed_point(fam.members[0], 0.0), fam.members[0].q)


def test_fixed_point_singular_raises():
    fam = OneParamFamily.from_arrays([np.eye(2), 0.5 * np.eye(2)], [[1, 0], [0, 0]], [[0, 0], [1, 1]])
    with pytest.raises(SingularSystem):
        fixed_point(fam.members[0], 1.0)


@given(angles, ratios)
def test_similarity_ratio_of_rotation_scaling(phi, r):
    assert similarity_ratio(r * rotation(phi)) == pytest.approx(r, rel=1e-12)
    assert similarity_ratio(r * rotation(phi) @ np.diag([1.0, -1.0])) == pytest.approx(r, rel=1e-12)


def test_similarity_ratio_rejects_shear():
    assert similarity_ratio(np.array([[1.0, 0.5], [0.0, 1.0]])) is None
    assert similarity_ratio(np.diag([0.5, 0.25])) is None


@pytest.mark.parametrize("name, sim, semi, bounded", [
    ("rot45_pair", True, True, True),
    ("rot90_shrink", True, True, True),
    ("flip_interval", True, True, False),
    ("diagonal_dust", False, True, False),
    ("shear_common_point", False, False, False),
    ("real_pair", True, False, False),
    ("quarter_line", True, True, True),
])
def test_classification_of_fixtures(name, sim, semi, bounded):
    cl = classify(load_fixture(name))
    assert (cl.is_similarity, cl.is_semi_linear, cl.is_bounded) == (sim, semi, bounded)
    assert set(cl.to_dict()) >= {"similarity", "linear", "quasi_linear", "semi_linear", "bounded",
                                 "degenerate"}


def test_common_offset_family_is_quasi_linear_not_linear():
    cl = classify(load_fixture("shear_common_point"))
    assert cl.is_quasi_linear and not cl.is_linear


def test_linear_family():
    fam = OneParamFamily.from_arrays([0.5 * np.eye(2), 0.3 * rotation(1.0)], [[0, 0], [0, 0]],
                                     [[0, 0], [0, 0]])
    cl = classify(fam)
    assert cl.is_linear


def test_ties_in_ratio_are_not_bounded():
    fam = OneParamFamily.from_arrays([rotation(0.3), rotation(1.1)], [[0, 0], [0, 0]], [[0, 0], [1, 0]])
    assert not classify(fam).is_bounded


def test_degenerate_line_family():
    fam = load_fixture("complex_pair")
    kind, wit = detect_degenerate(fam)
    assert kind == "yes"
    point, basis = wit
    assert basis.shape == (1, 2)
    assert abs(basis[0] @ [0.0, 1.0]) < 1e-12   # the real axis


def test_nondegenerate(rot45_pair):
    assert detect_degenerate(rot45_pair) == ("no", None)


def test_scaling_data(rot45_pair):
    r, idx = scaling_data(rot45_pair)
    assert np.allclose(r, [1.0, 0.4]) and idx == 0
    with pytest.raises(NotSimilarity):
        scaling_data(load_fixture("diagonal_dust"))


def test_family_needs_two_members():
    with pytest.raises(ValueError):
        OneParamFamily.from_arrays([np.eye(2)], [[0, 0]], [[0, 0]])
