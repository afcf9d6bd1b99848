"""Outer covers, trapping balls, chaos game, Hausdorff distances and hulls."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.spatial import cKDTree

from . import _backend
from .core import AffineMap, OneParamFamily, classify, fixed_point, instantiate, similarity_ratio
from .errors import (BudgetExceeded, EmptyInput, NoContractiveDepth, NotTrapping,
                     UnsupportedDimension)
from .geometry import halfplane_polygon, monotone_chain, slab_ranges, unit_directions
from .jsr import spectral_norm_batch

PEN_TOL = 1e-9       # minimum penetration of an image into a cell, in cells
HULL_DIRS = 256
MAX_TRAP_DEPTH = 12
COARSE_CELLS = 32
MAX_GRID_CELLS = 64_000_000


@dataclass(frozen=True, eq=False)
class Ball:
    """Closed ball; depth m means F^m(B) is contained in B."""

    center: np.ndarray
    radius: float
    depth: int = 1

    def __post_init__(self):
        object.__setattr__(self, "center", np.array(self.center, dtype=float).reshape(-1))
        if not self.radius > 0:
            raise ValueError("ball radius must be positive")

    @property
    def dim(self):
        return self.center.shape[0]

    def contains(self, pts, slack=0.0):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        return np.linalg.norm(pts - self.center, axis=1) <= self.radius + slack

    def to_dict(self):
        return {"center": self.center.tolist(), "radius": self.radius, "depth": self.depth}


@dataclass(frozen=True, eq=False)
class BoxCover:
    """Finite union of grid cells.

    The grid has `shape` cells and is centred on `center`; cell index i spans
    [center + (i - n/2) cell, center + (i + 1 - n/2) cell] along each axis.
    """

    center: np.ndarray
    cell: float
    shape: tuple
    cells: np.ndarray
    level: int = 0
    images: Optional[np.ndarray] = None  # optional (maps, *shape) masks of G_i & cover

    def __post_init__(self):
        object.__setattr__(self, "center", np.array(self.center, dtype=float).reshape(-1))
        c = np.asarray(self.cells, dtype=np.int64).reshape(-1, len(self.shape))
        object.__setattr__(self, "cells", c)

    @property
    def dim(self):
        return len(self.shape)

    @property
    def origin(self):
        return self.center - np.asarray(self.shape, dtype=float) * (self.cell / 2.0)

    def __len__(self):
        return self.cells.shape[0]

    def centers(self):
        n = np.asarray(self.shape, dtype=np.int64)
        return self.center + (2 * self.cells + 1 - n).astype(float) * (self.cell / 2.0)

    def lower_corners(self):
        return self.centers() - self.cell / 2.0

    def mask(self) -> np.ndarray:
        """Dense occupancy array, shape (nx,) or (nx, ny)."""
        m = np.zeros(self.shape, dtype=np.uint8)
        m[tuple(self.cells.T)] = 1
        return m

    @classmethod
    def from_mask(cls, center, cell, mask, level=0, images=None):
        idx = np.argwhere(mask)
        return cls(center=center, cell=cell, shape=tuple(mask.shape), cells=idx, level=level,
                   images=images)

    def contains(self, pts, slack=0.0):
        """True where a point lies in the union of cells (closed, plus slack)."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        if len(self) == 0:
            return np.zeros(len(pts), dtype=bool)
        tree = cKDTree(self.centers())
        # a closed cell is within half a diagonal of its centre
        r = self.cell * math.sqrt(self.dim) / 2.0 + slack
        nb = tree.query_ball_point(pts, r)
        C = self.centers()
        out = np.zeros(len(pts), dtype=bool)
        for k, lst in enumerate(nb):
            if lst:
                gap = np.maximum(np.abs(C[lst] - pts[k]) - self.cell / 2.0, 0.0)
                out[k] = bool((np.linalg.norm(gap, axis=1) <= slack).any())
        return out

    def to_dict(self):
        return {"origin": self.origin.tolist(), "center": self.center.tolist(),
                "cell": self.cell, "shape": list(self.shape), "level": self.level,
                "count": len(self)}


@dataclass(frozen=True, eq=False)
class PointSample:
    points: np.ndarray
    seed: int = 0
    weights: Optional[np.ndarray] = None

    def __post_init__(self):
        p = np.asarray(self.points, dtype=float)
        if p.ndim == 1:
            p = p[:, None]
        object.__setattr__(self, "points", p)

    @property
    def dim(self):
        return self.points.shape[1]

    def __len__(self):
        return self.points.shape[0]


# ---------------------------------------------------------------- trapping

def _instance_arrays(instance):
    Ls = np.stack([m.L for m in instance])
    As = np.stack([m.a for m in instance])
    return Ls, As


def _compose_words(Ls, As, m, limit=2_000_000):
    N, d = Ls.shape[0], Ls.shape[1]
    if N ** m > limit:
        raise BudgetExceeded(f"{N ** m} words of length {m}")
    PL, PA = Ls.copy(), As.copy()
    for _ in range(m - 1):
        n = PL.shape[0]
        # word s followed by map k: x -> PL_s (L_k x + a_k) + PA_s
        NL = np.einsum("sij,kjl->skil", PL, Ls).reshape(n * N, d, d)
        NA = (np.einsum("sij,kj->ski", PL, As) + PA[:, None, :]).reshape(n * N, d)
        PL, PA = NL, NA
    return PL, PA


def trap_is_valid(instance, ball: Ball, rtol=1e-9) -> bool:
    Ls, As = _instance_arrays(instance)
    PL, PA = _compose_words(Ls, As, ball.depth)
    c, R = ball.center, ball.radius
    img = np.einsum("sij,j->si", PL, c) + PA
    lhs = np.linalg.norm(img - c, axis=1) + spectral_norm_batch(PL) * R
    return bool(np.all(lhs <= R * (1 + rtol)))


def _general_trap(instance, max_depth=MAX_TRAP_DEPTH):
    Ls, As = _instance_arrays(instance)
    d = Ls.shape[1]
    fps = []
    for L, a in zip(Ls, As):
        try:
            fps.append(np.linalg.solve(np.eye(d) - L, a))
        except np.linalg.LinAlgError:
            pass
    c = np.mean(fps, axis=0) if fps else np.zeros(d)
    for m in range(1, max_depth + 1):
        try:
            PL, PA = _compose_words(Ls, As, m)
        except BudgetExceeded:
            break
        s = float(spectral_norm_batch(PL).max())
        if s < 1.0:
            img = np.einsum("sij,j->si", PL, c) + PA
            R = float(np.linalg.norm(img - c, axis=1).max()) / (1.0 - s)
            R = R * (1 + 1e-9) + 1e-12 * (1.0 + float(np.abs(c).max()))
            return Ball(c, max(R, 1e-300), depth=m)
    raise NoContractiveDepth(f"no word depth <= {max_depth} has all product norms below 1")


def instance_trap(instance) -> Ball:
    """Trapping ball for a list of affine maps (no family structure assumed)."""
    return _general_trap(instance)


def bounded_trap(family: OneParamFamily, t0: float, idx: int) -> Ball:
    """Ball B with F_t(B) in B for every t in [0, t0] (bounded families)."""
    qs = family.offsets()
    qstar = qs[idx]
    best = 0.0
    for i, m in enumerate(family.members):
        r = similarity_ratio(m.L) * t0
        if i == idx or r >= 1.0:
            continue
        Ln = t0 * m.L
        q = qs[i] - qstar
        v = max(np.linalg.norm(q - Ln @ q), np.linalg.norm(q)) / (1.0 - r)
        best = max(best, v)
    R = best * (1 + 1e-6) + 1e-9 * (1.0 + float(np.abs(qstar).max()))
    return Ball(qstar, R, depth=1)


def trapping_ball(family: OneParamFamily, t: float, classification=None, t0=None) -> Ball:
    """A ball B with F_t^m(B) inside B (m = B.depth, usually 1)."""
    if t < 0:
        raise ValueError("t must be non-negative")
    qs = family.offsets()
    if t == 0:
        c = qs.mean(axis=0)
        return Ball(c, float(np.linalg.norm(qs - c, axis=1).max()) + 1.0)
    cl = classification if classification is not None else classify(family)
    if cl.is_bounded:
        from .jsr import t0_threshold
        if t0 is None:
            t0 = t0_threshold(family).lo
        if t <= t0 * (1 + 1e-12):
            r = np.array(cl.scaling_ratios)
            return bounded_trap(family, t0, int(np.argmax(r)))
    return _general_trap(instantiate(family, t))


# ---------------------------------------------------------------- hull bound

def _embed(instance):
    """2x2 linear parts / translations; 1-D maps get an identity y-part."""
    Ls, As = _instance_arrays(instance)
    if Ls.shape[1] == 1:
        L2 = np.zeros((Ls.shape[0], 2, 2))
        L2[:, 0, 0] = Ls[:, 0, 0]
        L2[:, 1, 1] = 1.0
        A2 = np.zeros((Ls.shape[0], 2))
        A2[:, 0] = As[:, 0]
        return L2, A2
    return Ls, As


def _support_step(SH, AL, BE, M0, M1, h):
    return (SH + AL * h[M0] + BE * h[M1]).max(axis=0)


def _policy_bound(SH, AL, BE, M0, M1, h, tol, rounds=60):
    """Fixpoint of the support iteration by policy iteration, made sound.

    The returned h satisfies step(h) <= h, which puts the iteration's limit
    (and so the attractor's support) below it. None if that cannot be shown.
    """
    k = h.shape[0]
    rho = float((AL + BE).max())
    if not rho < 1.0:
        return None
    rows = np.arange(k)
    for _ in range(rounds):
        pi = np.argmax(SH + AL * h[M0] + BE * h[M1], axis=0)
        A = np.zeros((k, k))
        np.add.at(A, (rows, M0[pi, rows]), AL[pi, rows])
        np.add.at(A, (rows, M1[pi, rows]), BE[pi, rows])
        new = np.linalg.solve(np.eye(k) - A, SH[pi, rows])
        done = float(np.abs(new - h).max()) <= tol
        h = new
        if done:
            break
    res = max(float((_support_step(SH, AL, BE, M0, M1, h) - h).max()), 0.0)
    h = h + (res / (1.0 - rho)) * (1 + 1e-6) + tol
    if (_support_step(SH, AL, BE, M0, M1, h) <= h).all():
        return h
    return None


def _iterate_support(SH, AL, BE, M0, M1, h, tol, max_iter, plain=200):
    """Running minimum of the (sound) support iteration from h."""
    best = h.copy()
    for it in range(max_iter):
        new = _support_step(SH, AL, BE, M0, M1, h)
        done = float(np.abs(new - h).max()) <= tol
        h = new
        best = np.minimum(best, h)
        if done:
            return best
        if it + 1 == plain:
            pol = _policy_bound(SH, AL, BE, M0, M1, h, tol)
            if pol is not None:
                # the min of two post-fixpoints is one too
                return np.minimum(best, pol)
    return best


def outer_hull_bound(instance, trap: Ball, k: int = HULL_DIRS, tol: Optional[float] = None,
                     max_iter: int = 4000):
    """Support values of a convex set containing the attractor.

    2-D: returns (dirs, h) with A inside {x : x.u_j <= h_j}. 1-D: (lo, hi).
    Iterates h <- max_i (a_i.u + h(L_i^T u)), where h(w) between two sampled
    directions is bounded through sublinearity, so every iterate is sound and
    the running minimum is returned. Slow iterations switch to policy
    iteration, whose result is inflated until it is a post-fixpoint.
    """
    Ls, As = _instance_arrays(instance)
    d = Ls.shape[1]
    c, R = trap.center, trap.radius
    if tol is None:
        tol = 1e-12 * (R + float(np.abs(c).max()))
    if d == 1:
        # directions +1 (index 0) and -1 (index 1)
        l, a = Ls[:, 0, 0], As[:, 0]
        pos = l >= 0
        M0 = np.stack([np.where(pos, 0, 1), np.where(pos, 1, 0)])
        AL = np.stack([np.abs(l), np.abs(l)])
        SH = np.stack([a, -a])
        M0, AL, SH = M0.T, AL.T, SH.T
        h = np.array([c[0] + R, -c[0] + R])
        best = _iterate_support(SH, AL, np.zeros_like(AL), M0, M0, h, tol, max_iter)
        return float(-best[1]), float(best[0])
    if d != 2:
        raise UnsupportedDimension("hull bound supports d <= 2")
    U = unit_directions(k)
    step = 2.0 * np.pi / k
    idx, al, be, sh = [], [], [], []
    for L, a in zip(Ls, As):
        W = U @ L  # rows are L^T u_j
        ang = np.mod(np.arctan2(W[:, 1], W[:, 0]), 2.0 * np.pi)
        m = np.floor(ang / step).astype(np.int64) % k
        m1 = (m + 1) % k
        u0, u1 = U[m], U[m1]
        det = u0[:, 0] * u1[:, 1] - u0[:, 1] * u1[:, 0]
        alpha = (W[:, 0] * u1[:, 1] - W[:, 1] * u1[:, 0]) / det
        beta = (u0[:, 0] * W[:, 1] - u0[:, 1] * W[:, 0]) / det
        idx.append((m, m1))
        al.append(np.maximum(alpha, 0.0) * (1 + 1e-12))
        be.append(np.maximum(beta, 0.0) * (1 + 1e-12))
        sh.append(U @ a)
    M0 = np.array([m0 for m0, _ in idx])
    M1 = np.array([m1 for _, m1 in idx])
    AL, BE, SH = np.array(al), np.array(be), np.array(sh)
    h = U @ c + R
    return U, _iterate_support(SH, AL, BE, M0, M1, h, tol, max_iter)


# ---------------------------------------------------------------- grid kernels

def map_params(L2, b2, h, tol_cells=PEN_TOL):
    """Per-map constants for the cell-image overlap test (local coordinates)."""
    hh = h / 2.0
    tol = tol_cells * h
    rows = []
    for L, b in zip(L2, b2):
        Rx = (abs(L[0, 0]) + abs(L[0, 1])) * hh + hh - tol
        Ry = (abs(L[1, 0]) + abs(L[1, 1])) * hh + hh - tol
        e1, e2 = L[:, 0], L[:, 1]
        n1 = np.array([-e1[1], e1[0]])
        n1 = n1 / np.linalg.norm(n1)
        n2 = np.array([-e2[1], e2[0]])
        n2 = n2 / np.linalg.norm(n2)
        R1 = abs(n1 @ e2) * hh + (abs(n1[0]) + abs(n1[1])) * hh - tol
        R2 = abs(n2 @ e1) * hh + (abs(n2[0]) + abs(n2[1])) * hh - tol
        rows.append([L[0, 0], L[0, 1], L[1, 0], L[1, 1], b[0], b[1],
                     Rx, Ry, n1[0], n1[1], R1, n2[0], n2[1], R2])
    return np.ascontiguousarray(rows, dtype=float)


def _local_maps(instance, center2):
    """Maps expressed around the grid centre: u -> L u + (L c + a - c)."""
    L2, A2 = _embed(instance)
    b = np.einsum("kij,j->ki", L2, center2) + A2 - center2
    if len(instance[0].a) == 1:
        b[:, 1] = 0.0
    return L2, b


def _grid_centers(n, h):
    return (2 * np.arange(n, dtype=np.int64) + 1 - n).astype(float) * (h / 2.0)


def clip_region(bound, trap: Ball, d, interior=None):
    """Interval (d = 1) or polygon (d = 2) of the hull bound, inside the trap box.

    interior: a point of the attractor (speeds up the polygon); the support
    values are widened by a relative 1e-12 so thin regions stay non-empty.
    """
    if d == 1:
        return bound
    U, hv = bound
    c, R = trap.center, trap.radius
    hv = hv + 1e-12 * (R + float(np.abs(c).max()))
    return halfplane_polygon(U, hv, (c[0] - R, c[1] - R, c[0] + R, c[1] + R), interior)


def _first_fixed_point(instance):
    m = instance[0]
    return np.linalg.solve(np.eye(m.dim) - m.L, m.a)


def _clip_mask(shape2, h, center2, region, d):
    nx, ny = shape2
    xs = _grid_centers(nx, h) + center2[0]
    hh = h / 2.0
    if d == 1:
        lo, hi = region
        m = (xs + hh >= lo) & (xs - hh <= hi)
        return m[:, None]
    poly = region
    ys = _grid_centers(ny, h) + center2[1]
    mask = np.zeros((nx, ny), dtype=bool)
    if len(poly) == 0:
        return mask
    edges = np.concatenate([ys - hh, [ys[-1] + hh]])
    xmin, xmax = slab_ranges(poly, edges)
    ok = xmin <= xmax
    mask[:, ok] = (xs[:, None] + hh >= xmin[None, ok]) & (xs[:, None] - hh <= xmax[None, ok])
    return mask


def _ball_mask(shape2, h, R, d):
    nx, ny = shape2
    xs = _grid_centers(nx, h)
    hh = h / 2.0
    gx = np.maximum(np.abs(xs) - hh, 0.0)
    if d == 1:
        return (gx <= R)[:, None]
    ys = _grid_centers(ny, h)
    gy = np.maximum(np.abs(ys) - hh, 0.0)
    return gx[:, None] ** 2 + gy[None, :] ** 2 <= R * R


@dataclass
class GridStats:
    levels: list = field(default_factory=list)


def _prune(occ, params, h, max_layers, backend, per_map=None):
    mod = _backend.get(backend)
    layers = mod.prune(occ, params, float(h), int(max_layers), per_map)
    if layers < 0:
        raise BudgetExceeded(f"no cover fixpoint within {max_layers} sweeps")
    return layers


CLOSE_PAD = 4


def _close(occ, params, h, backend, max_cells=MAX_GRID_CELLS):
    """Add image cells until the cover is closed under one conservative sweep.

    After pruning, the cover already equals its image inside the starting set,
    so this only picks up cells just outside it. If an image leaves the grid,
    the grid is padded symmetrically (its centre is unchanged) and closing
    resumes; beyond max_cells it raises NotTrapping. Returns the array.
    """
    mod = _backend.get(backend)
    pad = CLOSE_PAD
    while mod.close(occ, params, float(h)) < 0:
        width = ((pad, pad), (pad, pad)) if occ.shape[1] > 1 else ((pad, pad), (0, 0))
        occ = np.ascontiguousarray(np.pad(occ, width))
        if occ.size > max_cells:
            raise NotTrapping("cover image keeps leaving the grid")
        pad *= 2
    return occ


def _per_map(nm, shape2):
    return np.zeros((nm,) + tuple(shape2), dtype=np.int32)


def _image_masks(per, occ, d):
    if per is None:
        return None
    G = (per > 0) & occ.astype(bool)[None]
    return G[:, :, 0] if d == 1 else G


def _children(occ, d):
    if d == 1:
        return np.ascontiguousarray(np.repeat(occ, 2, axis=0))
    return np.ascontiguousarray(np.repeat(np.repeat(occ, 2, axis=0), 2, axis=1))


def compute_attractor(instance: Sequence[AffineMap], trap: Ball, cell: float,
                      max_iters: Optional[int] = None, clip: bool = True,
                      backend: Optional[str] = None, coarse_cells: int = COARSE_CELLS,
                      stats: Optional[GridStats] = None, region=None,
                      close: bool = True, images: bool = False) -> BoxCover:
    """Outer cover of the attractor on a grid of edge `cell`.

    The cover is the greatest set of cells, starting from those meeting the
    trap, in which every cell is hit by the image of some cell of the set.
    Every set of cells meeting the attractor has that property, so the result
    contains the attractor. region: precomputed clip_region (else computed).
    close: also add image cells until one more sweep adds nothing; without it
    the cover is still an outer cover, only not invariant.
    images: keep, per map, the cells of the (unclosed) cover hit by its image.
    """
    instance = list(instance)
    d = instance[0].dim
    if d not in (1, 2):
        raise UnsupportedDimension("grid covers support d in {1, 2}")
    if not cell > 0:
        raise ValueError("cell must be positive")
    if close and images:
        raise ValueError("per-map images need close=False")
    if not trap_is_valid(instance, trap):
        raise NotTrapping("F^m(trap) is not contained in the trap")
    R = trap.radius
    K = int(math.ceil(R / cell)) + CLOSE_PAD
    levels = max(0, int(math.floor(math.log2(max(2 * K / coarse_cells, 1.0)))))
    K = int(math.ceil(K / 2 ** levels)) * 2 ** levels
    center2 = np.zeros(2)
    center2[:d] = trap.center
    L2, b2 = _local_maps(instance, center2)
    if clip and region is None:
        region = clip_region(outer_hull_bound(instance, trap, tol=1e-3 * cell), trap, d,
                             _first_fixed_point(instance))
    occ = None
    for lv in range(levels, -1, -1):
        h = cell * 2 ** lv
        n = 2 * K // 2 ** lv
        shape2 = (n, n) if d == 2 else (n, 1)
        if occ is None:
            occ = _ball_mask(shape2, h, R, d)
        else:
            occ = _children(occ, d)
        if region is not None:
            occ &= _clip_mask(shape2, h, center2, region, d)
        occ = np.ascontiguousarray(occ, dtype=np.uint8)
        params = map_params(L2, b2, h)
        budget = max_iters if max_iters is not None else 10 * n + 10
        per = _per_map(len(instance), shape2) if images and lv == 0 else None
        layers = _prune(occ, params, h, budget, backend, per)
        if lv == 0 and close:
            occ = _close(occ, params, h, backend)
        if stats is not None:
            stats.levels.append({"cell": h, "n": n, "layers": layers,
                                 "count": int(occ.sum())})
    mask = occ[:, 0] if d == 1 else occ
    return BoxCover.from_mask(trap.center, cell, mask.astype(bool), level=levels,
                              images=_image_masks(per, occ, d))


def refine(cover: BoxCover, instance, max_iters=None, clip_region=None, backend=None,
           close: bool = True, images: bool = False) -> BoxCover:
    """Halve the cell size, starting from the children of an existing cover."""
    d = cover.dim
    instance = list(instance)
    if len(cover):
        cover = crop(cover, pad=CLOSE_PAD // 2)
    occ = cover.mask()
    if d == 1:
        occ = occ[:, None]
    occ = _children(occ, d)
    h = cover.cell / 2.0
    center2 = np.zeros(2)
    center2[:d] = cover.center
    if clip_region is not None:
        occ &= _clip_mask(occ.shape, h, center2, clip_region, d)
    occ = np.ascontiguousarray(occ, dtype=np.uint8)
    L2, b2 = _local_maps(list(instance), center2)
    params = map_params(L2, b2, h)
    budget = max_iters if max_iters is not None else 10 * max(occ.shape) + 10
    if close and images:
        raise ValueError("per-map images need close=False")
    per = _per_map(len(instance), occ.shape) if images else None
    _prune(occ, params, h, budget, backend, per)
    if close:
        occ = _close(occ, params, h, backend)
    mask = occ[:, 0] if d == 1 else occ
    return BoxCover.from_mask(cover.center, h, mask.astype(bool), level=cover.level + 1,
                              images=_image_masks(per, occ, d))


def image_cover(cover: BoxCover, instance, pad: int = 0, backend=None) -> BoxCover:
    """Cells hit by the conservative image of the cover under the given maps.

    pad extra cells are added on every side so images leaving the grid are kept.
    """
    d = cover.dim
    occ = cover.mask()
    if d == 1:
        occ = occ[:, None]
    occ = np.ascontiguousarray(occ, dtype=np.uint8)
    nx, ny = occ.shape
    out_shape = (nx + 2 * pad, ny + 2 * pad) if d == 2 else (nx + 2 * pad, 1)
    out = np.zeros(out_shape, dtype=np.uint8)
    center2 = np.zeros(2)
    center2[:d] = cover.center
    L2, b2 = _local_maps(list(instance), center2)
    params = map_params(L2, b2, cover.cell)
    _backend.get(backend).image_mask(occ, params, float(cover.cell), out)
    mask = out[:, 0] if d == 1 else out
    return BoxCover.from_mask(cover.center, cover.cell, mask.astype(bool), level=cover.level)


def crop(cover: BoxCover, pad: int = 0) -> BoxCover:
    """Same cells on the smallest aligned grid holding them plus pad cells."""
    lo = cover.cells.min(axis=0) - pad
    hi = cover.cells.max(axis=0) + pad + 1
    shape = tuple(int(v) for v in hi - lo)
    origin = cover.origin + lo * cover.cell
    center = origin + np.asarray(shape, dtype=float) * (cover.cell / 2.0)
    images = None
    if cover.images is not None:
        # cells outside the old grid are empty, so pad before slicing
        width = [(0, 0)] + [(max(0, -int(a)), max(0, int(b) - n))
                            for a, b, n in zip(lo, hi, cover.shape)]
        G = np.pad(cover.images, width)
        sl = tuple(slice(int(a) + w[0], int(b) + w[0]) for a, b, w in zip(lo, hi, width[1:]))
        images = G[(slice(None),) + sl]
    return BoxCover(center, cover.cell, shape, cover.cells - lo, cover.level, images)


def hutchinson_step(cover: BoxCover, instance, backend=None) -> BoxCover:
    """One conservative Hutchinson sweep on the cover's own grid."""
    return image_cover(cover, instance, pad=0, backend=backend)


# ---------------------------------------------------------------- sampling

def chaos_game(instance, n: int, weights=None, seed: int = 0, burn_in: int = 100,
               backend: Optional[str] = None, start=None) -> PointSample:
    """Random orbit driven by a 64-bit LCG (MMIX constants), top 53 bits as u."""
    instance = list(instance)
    N = len(instance)
    d = instance[0].dim
    w = np.full(N, 1.0 / N) if weights is None else np.asarray(weights, dtype=float)
    if w.shape != (N,) or np.any(w <= 0):
        raise ValueError("weights must be positive, one per map")
    w = w / w.sum()
    cum = np.cumsum(w)
    cum[-1] = 1.0
    rows = np.ascontiguousarray([np.concatenate([m.L.reshape(-1), m.a]) for m in instance])
    if start is None:
        L0, a0 = instance[0].L, instance[0].a
        start = np.linalg.solve(np.eye(d) - L0, a0)
    x0 = np.ascontiguousarray(np.asarray(start, dtype=float).reshape(d))
    out = np.zeros((n, d))
    _backend.get(backend).chaos_game(rows, np.ascontiguousarray(cum), int(seed) & ((1 << 64) - 1),
                                     int(n), int(burn_in), x0, out)
    return PointSample(out, seed=int(seed), weights=w)


# ---------------------------------------------------------------- metrics

def _as_points(x):
    if isinstance(x, BoxCover):
        return x.centers()
    if isinstance(x, PointSample):
        return x.points
    p = np.asarray(x, dtype=float)
    return p[:, None] if p.ndim == 1 else p


def hausdorff(a, b) -> float:
    """Symmetric Hausdorff distance between cell-centre / point sets."""
    A, B = _as_points(a), _as_points(b)
    if len(A) == 0 or len(B) == 0:
        raise EmptyInput("Hausdorff distance of an empty set")
    if A.shape[1] != B.shape[1]:
        raise ValueError("dimension mismatch")
    dab = cKDTree(B).query(A)[0].max()
    dba = cKDTree(A).query(B)[0].max()
    return float(max(dab, dba))


def directed_hausdorff(a, b) -> float:
    """max over a of the distance to b."""
    A, B = _as_points(a), _as_points(b)
    if len(A) == 0 or len(B) == 0:
        raise EmptyInput("Hausdorff distance of an empty set")
    return float(cKDTree(B).query(A)[0].max())


def _cover_corner_extremes(cover: BoxCover):
    """Corners of the leftmost and rightmost cell of every row."""
    i, j = cover.cells[:, 0], cover.cells[:, 1]
    order = np.lexsort((i, j))
    i, j = i[order], j[order]
    first = np.r_[True, j[1:] != j[:-1]]
    last = np.r_[j[1:] != j[:-1], True]
    lo = cover.origin
    h = cover.cell
    pts = []
    for ii, jj, dx in ((i[first], j[first], 0), (i[last], j[last], 1)):
        x = lo[0] + (ii + dx) * h
        for dy in (0, 1):
            pts.append(np.stack([x, lo[1] + (jj + dy) * h], axis=1))
    return np.concatenate(pts)


def convex_hull(x):
    """Outer hull: CCW polygon (d = 2) or [lo, hi] interval (d = 1)."""
    if isinstance(x, BoxCover):
        if len(x) == 0:
            raise EmptyInput("empty cover")
        if x.dim == 1:
            lo = x.origin[0]
            return np.array([lo + x.cells[:, 0].min() * x.cell, lo + (x.cells[:, 0].max() + 1) * x.cell])
        return monotone_chain(_cover_corner_extremes(x))
    P = _as_points(x)
    if len(P) == 0:
        raise EmptyInput("empty point set")
    if P.shape[1] == 1:
        return np.array([P[:, 0].min(), P[:, 0].max()])
    return monotone_chain(P)


def apply_maps(instance, pts) -> np.ndarray:
    """Union of the images of a point set under every map."""
    P = _as_points(pts)
    return np.concatenate([m(P) for m in instance])


def word_fixed_points(instance, max_len: int = 4, limit: int = 4096) -> np.ndarray:
    """Fixed points of all compositions up to max_len; they lie in the attractor."""
    Ls, As = _instance_arrays(instance)
    d = Ls.shape[1]
    out = []
    for m in range(1, max_len + 1):
        if Ls.shape[0] ** m > limit:
            break
        PL, PA = _compose_words(Ls, As, m)
        M = np.eye(d) - PL
        try:
            out.extend(np.linalg.solve(M, PA[..., None])[..., 0])
        except np.linalg.LinAlgError:
            for L, a in zip(M, PA):
                try:
                    out.append(np.linalg.solve(L, a))
                except np.linalg.LinAlgError:
                    continue
    return np.array(out)


def family_fixed_points(family: OneParamFamily, t: float):
    return np.stack([fixed_point(m, t) for m in family.members])
