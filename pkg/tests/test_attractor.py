import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ifslab import instantiate
from ifslab import _backend
from ifslab.attractor import (Ball, BoxCover, chaos_game, compute_attractor, convex_hull,
                              directed_hausdorff, hausdorff, hutchinson_step, instance_trap,
                              outer_hull_bound, refine, trap_is_valid, trapping_ball,
                              word_fixed_points)
from ifslab.core import AffineMap
from ifslab.errors import EmptyInput, NotTrapping
from ifslab.families import load_fixture
from ifslab.geometry import point_polygon_distance


def cantor_maps():
    return [AffineMap([[1 / 3]], [0.0]), AffineMap([[1 / 3]], [2 / 3])]


def test_ball_rejects_nonpositive_radius():
    with pytest.raises(ValueError):
        Ball([0.0, 0.0], 0.0)


def test_trapping_ball_is_valid_for_fixtures():
    for name in ("rot45_pair", "diagonal_dust", "flip_interval", "shear_common_point", "rot90_shrink"):
        fam = load_fixture(name)
        for t in (0.2, 0.45, 0.7):
            assert trap_is_valid(instantiate(fam, t), trapping_ball(fam, t))


def test_invalid_trap_raises():
    inst = cantor_maps()
    with pytest.raises(NotTrapping):
        compute_attractor(inst, Ball([10.0], 0.1), 0.01)


def test_cantor_cover_matches_closed_form():
    inst = cantor_maps()
    cell = 3.0 ** -7
    cover = compute_attractor(inst, instance_trap(inst), cell)
    # level-7 Cantor intervals: the cover must contain every one of them
    k = 7
    lefts = np.array([sum(int(b) * 2 * 3.0 ** -(j + 1) for j, b in enumerate(np.binary_repr(w, k)))
                      for w in range(2 ** k)])
    assert cover.contains(lefts[:, None]).all()
    assert cover.contains((lefts + 3.0 ** -k)[:, None]).all()
    # and stays within a few cells of the set
    assert hausdorff(cover, lefts[:, None]) <= 3 * cell
    lo, hi = convex_hull(cover)
    assert lo <= 0.0 <= 1.0 <= hi and hi - lo <= 1.0 + 4 * cell


def test_cover_contains_chaos_game_points(rot45_pair):
    t = 0.8
    inst = instantiate(rot45_pair, t)
    cover = compute_attractor(inst, trapping_ball(rot45_pair, t), 0.02)
    pts = chaos_game(inst, 20_000, seed=3).points
    assert cover.contains(pts, slack=1e-12).all()


def test_closed_cover_is_invariant(diagonal_dust):
    inst = instantiate(diagonal_dust, 0.6)
    cover = compute_attractor(inst, trapping_ball(diagonal_dust, 0.6), 0.01)
    img = hutchinson_step(cover, inst).mask().astype(bool)
    assert not (img & ~cover.mask().astype(bool)).any()


def test_refine_halves_cell_and_stays_inside(diagonal_dust):
    inst = instantiate(diagonal_dust, 0.5)
    coarse = compute_attractor(inst, trapping_ball(diagonal_dust, 0.5), 0.02)
    fine = refine(coarse, inst)
    assert fine.cell == coarse.cell / 2
    assert coarse.contains(fine.centers()).all()
    assert len(fine) > 0


def test_backends_agree(rot45_pair):
    if "compiled" not in _backend.available():
        pytest.skip("compiled extension not built")
    inst = instantiate(rot45_pair, 0.85)
    trap = trapping_ball(rot45_pair, 0.85)
    a = compute_attractor(inst, trap, 0.02, backend="python")
    b = compute_attractor(inst, trap, 0.02, backend="compiled")
    assert np.array_equal(a.mask(), b.mask())
    pa = chaos_game(inst, 1000, seed=5, backend="python").points
    pb = chaos_game(inst, 1000, seed=5, backend="compiled").points
    assert np.array_equal(pa, pb)


def test_unknown_backend():
    with pytest.raises(ValueError):
        _backend.get("fortran")


def test_chaos_game_is_seeded(rot45_pair):
    inst = instantiate(rot45_pair, 0.7)
    a = chaos_game(inst, 500, seed=1).points
    assert np.array_equal(a, chaos_game(inst, 500, seed=1).points)
    assert not np.array_equal(a, chaos_game(inst, 500, seed=2).points)


def test_cover_hull_contains_attractor_points():
    fam = load_fixture("rot90_shrink_04")
    inst = instantiate(fam, 0.9)
    hull = convex_hull(compute_attractor(inst, trapping_ball(fam, 0.9), 1 / 256))
    pts = chaos_game(inst, 5000, seed=0).points
    assert point_polygon_distance(pts, hull).max() == 0.0


def test_quarter_line_hull_is_tight(quarter_line):
    inst = instantiate(quarter_line, 0.999)
    lo, hi = outer_hull_bound(inst, trapping_ball(quarter_line, 0.999))
    assert lo <= 1e-12 and hi >= 1.0
    assert hi - 1.0 < 1e-9 and abs(lo) < 1e-9


def test_word_fixed_points_lie_in_cover(diagonal_dust):
    inst = instantiate(diagonal_dust, 0.4)
    cover = compute_attractor(inst, trapping_ball(diagonal_dust, 0.4), 0.01)
    fp = word_fixed_points(inst, max_len=5)
    assert cover.contains(fp, slack=1e-12).all()


@given(st.lists(st.tuples(st.floats(-5, 5), st.floats(-5, 5)), min_size=1, max_size=30),
       st.lists(st.tuples(st.floats(-5, 5), st.floats(-5, 5)), min_size=1, max_size=30))
def test_hausdorff_is_a_metric_on_samples(a, b):
    A, B = np.array(a), np.array(b)
    h = hausdorff(A, B)
    assert h == hausdorff(B, A)
    assert hausdorff(A, A) == 0.0
    assert max(directed_hausdorff(A, B), directed_hausdorff(B, A)) == h


def test_hausdorff_empty_raises():
    with pytest.raises(EmptyInput):
        hausdorff(np.zeros((0, 2)), np.zeros((1, 2)))


def test_box_cover_geometry():
    c = BoxCover([0.0, 0.0], 0.5, (4, 4), [[0, 0], [3, 3]])
    assert np.allclose(c.origin, [-1.0, -1.0])
    assert np.allclose(c.centers(), [[-0.75, -0.75], [0.75, 0.75]])
    assert c.contains([[-1.0, -1.0], [0.0, 0.0]]).tolist() == [True, False]
    assert c.contains([[0.0, 0.0]], slack=0.71).all()
