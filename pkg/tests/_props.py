"""Random 2-D families and the property checks shared by the hypothesis
suite and the acceptance run."""

import json

import numpy as np

from ifslab.attractor import chaos_game, compute_attractor, hutchinson_step, trapping_ball
from ifslab.core import OneParamFamily, fixed_point, instantiate
from ifslab.families import rotation
from ifslab.io import dumps
from ifslab.jsr import jsr_bounds, spectral_norm, spectral_radius, t0_threshold
from ifslab.scan import family_scan
from ifslab.topology import (_component_hulls, check_witness, components, hull_diameter,
                             strongly_disconnected, transform_witness, weak_components)
from ifslab.attractor import BoxCover

RATIO_LO, RATIO_HI = 0.2, 0.95


def random_family(rng, similarity=True):
    """2 or 3 members with ratios in [0.2, 0.95]; affine (diag-scaled) when similarity=False."""
    N = int(rng.integers(2, 4))
    Ls, as_, qs = [], [], []
    for _ in range(N):
        if similarity:
            r = rng.uniform(RATIO_LO, RATIO_HI)
            L = r * rotation(rng.uniform(0, 2 * np.pi))
            if rng.random() < 0.3:
                L = L @ np.diag([1.0, -1.0])
        else:
            s = rng.uniform(RATIO_LO, RATIO_HI, size=2)
            L = rotation(rng.uniform(0, 2 * np.pi)) @ np.diag(s) @ rotation(rng.uniform(0, 2 * np.pi))
        Ls.append(L)
        as_.append(rng.uniform(-1, 1, size=2))
        qs.append(rng.uniform(-1, 1, size=2))
    return OneParamFamily.from_arrays(Ls, as_, qs, name="random")


def cover_of(family, t, per_diam=48):
    inst = instantiate(family, t)
    trap = trapping_ball(family, t)
    cell = max(hull_diameter(inst, trap), 1e-3) / per_diam
    return inst, compute_attractor(inst, trap, cell)


def check_jsr(Ls, depth=5):
    """Bracket contains rho and the level bounds, tightens with depth."""
    prev = None
    rho1 = max(spectral_radius(L) for L in Ls)
    nrm1 = max(spectral_norm(L) for L in Ls)
    for k in range(1, depth + 1):
        b = jsr_bounds(Ls, max_depth=k)
        assert b.lower <= b.upper * (1 + 1e-12)
        assert b.lower >= rho1 * (1 - 1e-12)
        assert b.upper <= nrm1 * (1 + 1e-12)
        if prev is not None:
            assert b.lower >= prev.lower * (1 - 1e-12)
            assert b.upper <= prev.upper * (1 + 1e-12)
        prev = b
    return prev


def check_t0_order(family):
    r = t0_threshold(family)
    assert 0 < r.lo <= r.hi
    return r


def check_fixed_points(family, t, cover=None):
    if cover is None:
        _, cover = cover_of(family, t)
    fps = np.array([fixed_point(m, t) for m in family.members])
    assert cover.contains(fps, slack=1e-9 * (1 + np.abs(fps).max())).all()


def check_hutchinson(instance, cover):
    """One more sweep stays inside the closed cover, and so does a chaos orbit."""
    img = hutchinson_step(cover, instance)
    extra = img.mask().astype(bool) & ~cover.mask().astype(bool)
    assert not extra.any(), f"{int(extra.sum())} image cells outside the cover"
    pts = chaos_game(instance, 2000, seed=7).points
    assert cover.contains(pts, slack=1e-9 * (1 + np.abs(pts).max())).all()


def check_weak_partition(cover):
    groups = weak_components(cover)
    allc = np.concatenate(groups)
    assert len(allc) == len(cover)
    keys = {tuple(c) for c in allc.tolist()}
    assert keys == {tuple(c) for c in cover.cells.tolist()}
    # distinct weak components are split by some line
    for i in range(min(len(groups), 4)):
        for j in range(i + 1, min(len(groups), 4)):
            sub = BoxCover(cover.center, cover.cell, cover.shape,
                           np.concatenate([groups[i], groups[j]]), cover.level)
            assert strongly_disconnected(sub) is not None
    return groups


def check_equivariance(cover, rng):
    """A witness moved by an affine map separates the moved hulls."""
    wit = strongly_disconnected(cover)
    if wit is None:
        return False
    hulls = _component_hulls(cover, components(cover))
    assert check_witness(hulls, wit)
    A = rotation(rng.uniform(0, 2 * np.pi)) @ np.diag(rng.uniform(0.5, 2.0, size=2))
    b = rng.uniform(-3, 3, size=2)
    moved = [H @ A.T + b for H in hulls]
    w2 = transform_witness(wit, A, b)
    assert check_witness(moved, w2)
    # the margin bound is honest: every moved vertex clears the line by it
    u = np.array(w2.normal)
    for H in moved:
        assert np.abs(H @ u - w2.offset).min() >= w2.margin * (1 - 1e-9)
    return True


def scan_bytes(family, ts, threads):
    sc = family_scan(family, ts, analyses=("connectivity", "hulls"), threads=threads)
    return dumps(sc.to_dict())


def check_reproducible(family, ts):
    runs = [scan_bytes(family, ts, n) for n in (1, 2, 8)]
    assert runs[0] == runs[1] == runs[2]
    json.loads(runs[0])
