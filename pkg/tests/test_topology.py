import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ifslab.attractor import BoxCover, compute_attractor, trapping_ball
from ifslab import instantiate
from ifslab.errors import EmptyInput, NotApplicable, NotSimilarity
from ifslab.families import load_fixture, rotation
from ifslab.topology import (CONNECTED, DISCONNECTED, SeparationWitness, cell_set_gap, check_witness,
                             components, connectivity_lower_bound, connectivity_status,
                             strongly_disconnected, transform_witness, weak_components,
                             weak_threshold)


def cover_from(cells, shape=(10, 10), cell=1.0):
    return BoxCover(np.zeros(2), cell, shape, np.array(cells))


def test_components_and_gap():
    c = cover_from([[0, 0], [0, 1], [5, 5], [5, 6]])
    cs = components(c)
    assert len(cs) == 2
    # closed cells [0,1]x[0,2] and [5,6]x[5,7]: nearest corners (1,2) and (5,5)
    assert cs.gap == pytest.approx(5.0)


def test_diagonal_neighbours_touch():
    c = cover_from([[0, 0], [1, 1]])
    assert len(components(c)) == 1


def test_cell_set_gap_axis():
    A = np.array([[0, 0]])
    B = np.array([[3, 0]])
    assert cell_set_gap(A, B, 0.5) == pytest.approx(1.0)


def test_dust_is_certified_disconnected(diagonal_dust):
    for t in (0.2, 0.8):
        st = connectivity_status(diagonal_dust, t)
        assert st.status == DISCONNECTED and st.gap > 0


def test_rot45_pair_statuses(rot45_pair):
    assert connectivity_status(rot45_pair, 0.5).status == DISCONNECTED
    assert connectivity_status(rot45_pair, 0.95).status == CONNECTED


def test_connectivity_bound_value(rot45_pair):
    # ratios 1 and 0.4 in the plane: (1 + 0.16)^(-1/2)
    assert connectivity_lower_bound(rot45_pair) == pytest.approx(1.16 ** -0.5, rel=1e-14)
    with pytest.raises(NotSimilarity):
        connectivity_lower_bound(load_fixture("diagonal_dust"))


def test_interval_weak_threshold():
    # {tx, t(x - 1) + 1} on the line: A_t = [0, 1] exactly when t >= 1/2
    fam = load_fixture("real_pair_semilinear")
    w = weak_threshold(fam, [0.2, 0.4, 0.45, 0.55, 0.6, 0.8], 1 / 512)
    assert (w.lo, w.hi) == (0.45, 0.55)
    assert w.lo < 0.5 < w.hi


def test_weak_threshold_needs_semilinear():
    with pytest.raises(NotApplicable):
        weak_threshold(load_fixture("real_pair"), [0.3, 0.6], 0.01)


def test_two_blobs_have_a_witness():
    c = cover_from([[0, 0], [1, 0], [0, 1], [7, 8], [8, 8]])
    w = strongly_disconnected(c)
    assert w is not None and w.margin > 0
    assert sorted(w.side_counts) == [1, 1]


def test_ring_has_no_separating_line():
    ring = [[i, j] for i in range(6) for j in range(6) if i in (0, 5) or j in (0, 5)]
    inner = [[2, 2], [2, 3], [3, 2], [3, 3]]
    c = cover_from(ring + inner)
    assert strongly_disconnected(c) is None
    assert len(weak_components(c)) == 1


def test_weak_components_partition():
    c = cover_from([[0, 0], [9, 9], [0, 9], [4, 4], [4, 5]])
    groups = weak_components(c)
    assert sum(len(g) for g in groups) == len(c)
    assert len(groups) == 4


def test_empty_cover_raises():
    with pytest.raises(EmptyInput):
        strongly_disconnected(cover_from(np.zeros((0, 2), dtype=int)))


@given(st.floats(0, 2 * np.pi), st.floats(0.3, 3.0), st.floats(0.3, 3.0),
       st.floats(-5, 5), st.floats(-5, 5))
@settings(max_examples=60)
def test_witness_affine_equivariance(phi, sx, sy, bx, by):
    left = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    right = left + [3.0, 0.5]
    w = SeparationWitness(normal=(1.0, 0.0), offset=2.0, margin=1.0, side_counts=(1, 1))
    assert check_witness([left, right], w)
    A = rotation(phi) @ np.diag([sx, sy])
    b = np.array([bx, by])
    w2 = transform_witness(w, A, b)
    moved = [P @ A.T + b for P in (left, right)]
    assert check_witness(moved, w2)
    u = np.array(w2.normal)
    assert min(np.abs(P @ u - w2.offset).min() for P in moved) >= w2.margin * (1 - 1e-9)
