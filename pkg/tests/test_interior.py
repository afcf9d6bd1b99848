import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ifslab import OneParamFamily
from ifslab.attractor import Ball
from ifslab.core import AffineMap
from ifslab.errors import BudgetExceeded, NotApplicable
from ifslab.families import BUILDERS, load_fixture, rotation
from ifslab.interior import (EMPTY, NONEMPTY, UNKNOWN, ball_certificate, candidate_ball, cone_margin,
                             dense_orbit_count, interior_scan, interior_status,
                             measure_zero_threshold, nonempty_threshold_bound_2d, rational_distance,
                             rotation_angle)


def overlapping_square():
    # nine maps of ratio 0.6; the attractor is the unit square
    return [AffineMap(0.6 * np.eye(2), [x, y]) for x in (0, .2, .4) for y in (0, .2, .4)]


def test_measure_threshold_values(rot45_pair):
    assert measure_zero_threshold(rot45_pair) == pytest.approx(1.16 ** -0.5, abs=1e-12)
    assert measure_zero_threshold(load_fixture("rot90_shrink")) == pytest.approx(1.09 ** -0.5, abs=1e-12)
    # on the line the bound is 1 / sum of ratios
    assert measure_zero_threshold(load_fixture("quarter_line")) == pytest.approx(0.8)


def test_ball_certificate_on_square():
    m = overlapping_square()
    assert not ball_certificate(m, Ball([0.5, 0.5], 0.3), 1)
    assert ball_certificate(m, Ball([0.5, 0.5], 0.3), 2)


def test_ball_outside_attractor_is_never_certified():
    m = overlapping_square()
    for n in (1, 2, 3):
        assert not ball_certificate(m, Ball([1.5, 0.5], 0.3), n)


def test_touching_images_are_not_enough():
    # four half-size copies tile the square but their inscribed balls leave gaps
    m = [AffineMap(0.5 * np.eye(2), [x, y]) for x in (0, .5) for y in (0, .5)]
    assert not ball_certificate(m, Ball([0.5, 0.5], 0.3), 2)


def test_ball_certificate_budget():
    m = overlapping_square()
    with pytest.raises(BudgetExceeded):
        ball_certificate(m, Ball([0.5, 0.5], 0.3), 8)
    with pytest.raises(ValueError):
        ball_certificate(m, Ball([0.5, 0.5], 0.3), 0)


def test_interior_status_below_measure_bound(rot45_pair):
    st = interior_status(rot45_pair, 0.5)
    assert st.status == EMPTY and st.kind == "measure-bound"
    assert st.to_dict()["measure_threshold"] == pytest.approx(1.16 ** -0.5)


def test_interior_scan_of_shrinking_rotation_has_no_ball():
    scan = interior_scan(load_fixture("rot90_shrink"), [0.9, 0.97])
    assert [s.status for _, s in scan.rows] == [EMPTY, UNKNOWN]
    assert scan.to_dict()["measure_threshold"]["kind"] == "bound"


def test_candidate_ball_in_filled_square():
    from ifslab.attractor import BoxCover
    idx = np.array([[i, j] for i in range(10) for j in range(10)])
    b = candidate_ball(BoxCover([0.0, 0.0], 0.1, (10, 10), idx))
    assert np.linalg.norm(b.center) <= 0.1
    assert b.radius == pytest.approx(0.25)


@given(st.floats(0.01, 0.99), st.floats(0.01, 1.5), st.floats(0.2, 1.0))
def test_cone_margin_monotone_in_theta(eps, theta, s):
    # the inequality only gets easier as the cone narrows
    assert cone_margin(eps, theta / 2, s) >= cone_margin(eps, theta, s)


def test_rational_helpers():
    assert rational_distance(0.25) == 0.0
    assert rational_distance((5 ** 0.5 - 1) / 2) > 1e-5
    assert rotation_angle(0.3 * rotation(0.7)) == pytest.approx(0.7)
    assert rotation_angle(np.diag([1.0, -1.0])) is None


def test_dense_orbit_count_gaps():
    phi = math.pi * (5 ** 0.5 - 1) / 2
    M = dense_orbit_count(phi, 0.1)
    ang = np.sort(np.mod(np.arange(M + 1) * phi, 2 * math.pi))
    gaps = np.diff(np.concatenate([ang, [ang[0] + 2 * math.pi]]))
    assert gaps.max() <= 0.1
    if M > 1:
        ang = np.sort(np.mod(np.arange(M) * phi, 2 * math.pi))
        gaps = np.diff(np.concatenate([ang, [ang[0] + 2 * math.pi]]))
        assert gaps.max() > 0.1


def test_cone_bound_irrational_rotation():
    fam = BUILDERS["complex_pair_semilinear"](1.0)
    p = nonempty_threshold_bound_2d(fam)
    assert 0 < p.tau < p.t0 == 1.0
    assert p.ratio == pytest.approx((1 - p.epsilon) ** (1 / (p.M + 1)))
    assert cone_margin(p.epsilon, p.theta, p.s) > 0
    d = p.to_dict()
    assert d["kind"] == "bound" and "tau_as_printed" in d


@pytest.mark.parametrize("name", ["rot45_pair", "rot90_shrink", "complex_pair_semilinear"])
def test_cone_bound_rejects_rational_angles(name):
    with pytest.raises(NotApplicable):
        nonempty_threshold_bound_2d(load_fixture(name))


def test_cone_bound_rejects_non_semilinear():
    with pytest.raises(NotApplicable):
        nonempty_threshold_bound_2d(load_fixture("complex_pair"))


@given(st.floats(0.01, 6.2), st.integers(1, 60))
@settings(max_examples=60)
def test_gap_profile_matches_sorting(phi, k):
    from ifslab.interior import _gap_profile
    a = np.sort(np.mod(np.arange(k + 1) * phi, 2 * math.pi))
    brute = np.diff(np.concatenate([a, [a[0] + 2 * math.pi]])).max()
    assert _gap_profile(phi, 60)[k] == pytest.approx(brute, abs=1e-12)
