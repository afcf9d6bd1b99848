"""Connectivity of attractors from outer covers: components, certified
disconnection, separating lines, weak components and threshold scans."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import ndimage
from scipy.spatial import cKDTree
from scipy.spatial.distance import pdist

from .attractor import (BoxCover, Ball, _first_fixed_point, clip_region, compute_attractor, crop, convex_hull, image_cover,
                        outer_hull_bound, refine, trapping_ball, word_fixed_points)
from .core import OneParamFamily, classify, instantiate, similarity_ratio
from .errors import BudgetExceeded, EmptyInput, MonotonicityViolation, NotApplicable, NotSimilarity
from .geometry import monotone_chain, unit_directions
from .jsr import spectral_norm_batch, t0_threshold

DISCONNECTED = "disconnected-certified"
CONNECTED = "connected-evidence"
UNRESOLVED = "unresolved"

UNIFORM_DIRS = 4096
MAX_CRITICAL_DIRS = 4_000_000


@dataclass
class ComponentSet:
    components: list          # list of (k, d) int arrays of cell indices
    labels: np.ndarray        # dense label grid (0 = empty)
    gap: float                # min distance between distinct components (inf if one)
    cell: float

    def __len__(self):
        return len(self.components)


@dataclass(frozen=True)
class SeparationWitness:
    normal: tuple
    offset: float
    margin: float
    side_counts: tuple

    def to_dict(self):
        return {"normal": list(self.normal), "offset": self.offset, "margin": self.margin,
                "side_counts": list(self.side_counts)}


@dataclass
class ConnectivityStatus:
    status: str
    refinement_level: int
    cell: float
    components: int
    gap: Optional[float] = None
    certificate: Optional[str] = None
    witness: Optional[SeparationWitness] = None
    warning: Optional[str] = None
    history: list = field(default_factory=list)

    def to_dict(self):
        return {"status": self.status, "refinement_level": self.refinement_level,
                "cell": self.cell, "components": self.components, "gap": self.gap,
                "certificate": self.certificate,
                "witness": None if self.witness is None else self.witness.to_dict(),
                "warning": self.warning}


# ---------------------------------------------------------------- components

def _mask2(cover):
    m = cover.mask().astype(bool)
    return m[:, None] if m.ndim == 1 else m


def _structure(d):
    return np.ones((3,) * d, dtype=bool)


OFFSET_RADIUS = 6


def _offsets(d, r):
    """Integer offsets with Chebyshev norm <= r, sorted by cell box gap (in cells)."""
    rng = np.arange(-r, r + 1)
    O = np.stack(np.meshgrid(*([rng] * d), indexing="ij"), axis=-1).reshape(-1, d)
    g = np.sqrt((np.maximum(np.abs(O) - 1, 0) ** 2).sum(axis=1))
    order = np.argsort(g, kind="stable")
    return O[order], g[order]


def _shift_pairs(X, Y, o):
    """Views X[p], Y[p + o] over all p where both indices are valid."""
    sx, sy = [], []
    for k, n in zip(o, X.shape):
        k = int(k)
        m = max(n - abs(k), 0)
        sx.append(slice(max(0, -k), max(0, -k) + m))
        sy.append(slice(max(0, k), max(0, k) + m))
    return X[tuple(sx)], Y[tuple(sy)]


def _offset_gap(hit, shape, r=OFFSET_RADIUS):
    """Smallest gap over offsets, exact when below r - 1 cells, else inf."""
    d = len(shape)
    O, G = _offsets(d, r)
    for o, g in zip(O, G):
        if g > r - 1:
            break
        if hit(o):
            return float(g)
    return np.inf


def cell_set_gap(A: np.ndarray, B: np.ndarray, cell: float) -> float:
    """Exact Euclidean distance between two unions of closed grid cells."""
    A = np.asarray(A, dtype=np.int64)
    B = np.asarray(B, dtype=np.int64)
    if len(A) == 0 or len(B) == 0:
        raise EmptyInput("gap between empty cell sets")
    lo = np.minimum(A.min(axis=0), B.min(axis=0))
    shape = tuple(np.maximum(A.max(axis=0), B.max(axis=0)) - lo + 1)
    Ma = np.zeros(shape, dtype=bool)
    Mb = np.zeros(shape, dtype=bool)
    Ma[tuple((A - lo).T)] = True
    Mb[tuple((B - lo).T)] = True
    # the closest pair always involves boundary cells
    Ma &= ~ndimage.binary_erosion(Ma, structure=_structure(len(shape)), border_value=0)
    Mb &= ~ndimage.binary_erosion(Mb, structure=_structure(len(shape)), border_value=0)

    def hit(o):
        x, y = _shift_pairs(Ma, Mb, o)
        return bool((x & y).any())

    g = _offset_gap(hit, shape)
    if np.isfinite(g):
        return g * cell
    A = np.argwhere(Ma).astype(float)
    B = np.argwhere(Mb).astype(float)
    tree = cKDTree(B)
    dA = tree.query(A)[0]
    # box distance lies in [centre distance - sqrt(d), centre distance]
    r = float(dA.min()) + math.sqrt(A.shape[1]) + 1e-9
    best = np.inf
    cand = A[dA <= r]
    for a, nb in zip(cand, tree.query_ball_point(cand, r)):
        if nb:
            gg = np.maximum(np.abs(B[nb] - a) - 1.0, 0.0)
            best = min(best, float(np.sqrt((gg * gg).sum(axis=1)).min()))
    return best * cell


def _boundary(mask):
    inner = ndimage.binary_erosion(mask, structure=_structure(mask.ndim), border_value=0)
    return mask & ~inner


def _label_gap(lab) -> float:
    """Min box distance (in cells) between boundary cells with different labels."""
    bl = np.where(_boundary(lab > 0), lab, 0)

    def hit(o):
        x, y = _shift_pairs(bl, bl, o)
        return bool(((x > 0) & (y > 0) & (x != y)).any())

    g = _offset_gap(hit, lab.shape)
    if np.isfinite(g):
        return g
    idx = np.argwhere(bl > 0)
    lb = bl[tuple(idx.T)]
    n, d = idx.shape
    tree = cKDTree(idx.astype(float))
    best = np.inf
    todo = np.arange(n)
    k = 8
    while len(todo):
        kk = min(k, n)
        dist, nb = tree.query(idx[todo], k=kk)
        dist, nb = dist.reshape(len(todo), kk), nb.reshape(len(todo), kk)
        other = lb[nb] != lb[todo][:, None]
        if other.any():
            r, c = np.nonzero(other)
            gg = np.maximum(np.abs(idx[todo[r]] - idx[nb[r, c]]) - 1.0, 0.0)
            best = min(best, float(np.sqrt((gg * gg).sum(axis=1)).min()))
        if kk == n:
            break
        # unexamined pairs have centre distance beyond the k-th neighbour
        todo = todo[dist[:, -1] - math.sqrt(d) < best]
        k *= 4
    return best


def components(cover: BoxCover, with_gap: bool = True) -> ComponentSet:
    """8-connected (2-D) / adjacent-interval (1-D) components and the min gap.

    with_gap=False skips the gap (reported as inf).
    """
    if len(cover) == 0:
        raise EmptyInput("empty cover")
    m = cover.mask().astype(bool)
    lab, n = ndimage.label(m, structure=_structure(m.ndim))
    comps = [np.argwhere(lab == k) for k in range(1, n + 1)]
    gap = np.inf
    if n > 1 and with_gap:
        gap = _label_gap(lab) * cover.cell
    return ComponentSet(components=comps, labels=lab, gap=gap, cell=cover.cell)


def _component_gap(cs: ComponentSet, a: int, b: int) -> float:
    return cell_set_gap(cs.components[a], cs.components[b], cs.cell)


# ---------------------------------------------------------------- anchors

def _cells_of_point(cover: BoxCover, p, tol=1e-7):
    """Occupied closed cells containing point p (up to tol cells)."""
    rel = (np.asarray(p, dtype=float) - cover.origin) / cover.cell
    lo = np.floor(rel - tol).astype(int)
    hi = np.floor(rel + tol).astype(int)
    out = []
    shape = cover.shape
    ranges = [range(max(l, 0), min(h, n - 1) + 1) for l, h, n in zip(lo, hi, shape)]
    for ix in np.array(np.meshgrid(*ranges, indexing="ij")).reshape(len(shape), -1).T:
        out.append(tuple(int(v) for v in ix))
    return out


def anchor_labels(cover: BoxCover, labels: np.ndarray, anchors) -> dict:
    """Map component label -> anchor indices lying in it."""
    res = {}
    for k, p in enumerate(anchors):
        for c in _cells_of_point(cover, p):
            lb = int(labels[c])
            if lb:
                res.setdefault(lb, []).append(k)
                break
    return res


# ---------------------------------------------------------------- per-level test

def _overlap_margin(s: float) -> int:
    if s >= 1.0:
        return 4
    k = int(math.ceil(math.sqrt(2.0) * s / (1.0 - s)))
    return max(2, min(4, k))


def _dilate(mask, k):
    if k <= 0:
        return mask
    return ndimage.maximum_filter(mask, size=2 * k + 1, mode="constant", cval=0)


def _robust_overlap(G1, G2, k) -> bool:
    """Image covers overlap by more than the cover excess can explain."""
    ov = G1 & G2
    if not ov.any():
        return False
    E = (G1 & ~_dilate(G2, k)) | (G2 & ~_dilate(G1, k))
    if not E.any():
        return True
    dist = ndimage.distance_transform_cdt(~E, metric="chessboard")
    return bool(dist[ov].max() > 2 * k)


def _graph_components(n, edges):
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i, j in edges:
        parent[find(i)] = find(j)
    groups = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return sorted(groups.values())


def analyse_cover(cover: BoxCover, instance, anchors, s: float) -> ConnectivityStatus:
    """Status decided from one cover, or UNRESOLVED."""
    d = cover.dim
    N = len(instance)
    if cover.images is not None:
        # G_i & X from the pruning pass; f_i(A) lies in it since A lies in X
        cover = crop(cover, pad=1)
        G = [g[:, None] if d == 1 else g for g in cover.images]
    else:
        # room for the image overhang and the overlap dilation
        cover = crop(cover, pad=8)
        G = [_mask2(image_cover(cover, [f], pad=0)) for f in instance]
    st = _structure(2) if d == 2 else np.ones((3, 1), dtype=bool)
    touch = []
    for i in range(N):
        Di = ndimage.maximum_filter(G[i], footprint=st, mode="constant", cval=0)
        for j in range(i + 1, N):
            if (Di & G[j]).any():
                touch.append((i, j))
    groups = _graph_components(N, touch)
    cs = components(cover, with_gap=False)
    if len(groups) > 1:
        # the map images of A split into non-touching groups of cells
        A = np.argwhere(np.any([G[i] for i in groups[0]], axis=0))
        B = np.argwhere(np.any([G[i] for g in groups[1:] for i in g], axis=0))
        gap = cell_set_gap(A, B, cover.cell)
        return ConnectivityStatus(DISCONNECTED, cover.level, cover.cell, len(cs), gap=gap,
                                  certificate="image-split")
    if len(cs) > 1:
        hit = anchor_labels(cover, cs.labels, anchors)
        if len(hit) > 1:
            labs = sorted(hit)
            gap = np.inf
            for a_ in range(len(labs)):
                for b_ in range(a_ + 1, len(labs)):
                    gap = min(gap, _component_gap(cs, labs[a_] - 1, labs[b_] - 1))
            return ConnectivityStatus(DISCONNECTED, cover.level, cover.cell, len(cs), gap=gap,
                                      certificate="anchored-components")
        return ConnectivityStatus(UNRESOLVED, cover.level, cover.cell, len(cs))
    k = _overlap_margin(s)
    robust = [(i, j) for (i, j) in touch if _robust_overlap(G[i], G[j], k)]
    if len(_graph_components(N, robust)) == 1:
        return ConnectivityStatus(CONNECTED, cover.level, cover.cell, 1,
                                  certificate="single-component+overlap")
    return ConnectivityStatus(UNRESOLVED, cover.level, cover.cell, 1)


def _contraction(instance) -> float:
    return float(spectral_norm_batch(np.stack([f.L for f in instance])).max())


def instance_connectivity(instance, trap: Ball, cell: Optional[float] = None, levels: int = 5,
                          backend=None) -> ConnectivityStatus:
    """Refine from cell through `levels` halvings, stopping at the first decision.

    cell defaults to the diameter of the outer hull bound over 64.
    """
    instance = list(instance)
    tol = 1e-9 * (trap.radius + float(np.abs(trap.center).max()))
    region = clip_region(outer_hull_bound(instance, trap, tol=tol), trap, trap.dim,
                         _first_fixed_point(instance))
    if cell is None:
        diam = _diameter(region, trap.dim)
        cell = (diam if diam > 0 else trap.radius) / 64.0
    anchors = word_fixed_points(instance)
    s = _contraction(instance)
    cover = compute_attractor(instance, trap, cell, backend=backend, region=region, close=False,
                              images=True)
    cover = BoxCover(cover.center, cover.cell, cover.shape, cover.cells, 0, cover.images)
    hist = []
    st = None
    for lv in range(levels + 1):
        if lv > 0:
            cover = refine(cover, instance, clip_region=region, backend=backend, close=False,
                           images=True)
        st = analyse_cover(cover, instance, anchors, s)
        hist.append(st.components)
        if st.status != UNRESOLVED:
            break
    st.history = hist
    if st.status == UNRESOLVED and len(hist) > 1 and all(2 <= c <= 10 for c in hist):
        st.warning = "stable cover with 2-10 components at every level"
    return st


def _diameter(reg, d) -> float:
    if d == 1:
        return float(reg[1] - reg[0])
    if len(reg) < 2:
        return 0.0
    return float(pdist(reg).max())


def hull_diameter(instance, trap: Ball) -> float:
    return _diameter(clip_region(outer_hull_bound(instance, trap), trap, trap.dim), trap.dim)


def connectivity_status(family: OneParamFamily, t: float, cell_start: Optional[float] = None,
                        max_refinements: int = 5, backend=None) -> ConnectivityStatus:
    """Disconnection certificate or connectivity evidence for A_t."""
    inst = instantiate(family, t)
    trap = trapping_ball(family, t)
    return instance_connectivity(inst, trap, cell_start, max_refinements, backend=backend)


# ---------------------------------------------------------------- bounds

def connectivity_lower_bound(family: OneParamFamily) -> float:
    """tau such that A_t is connected for every t in (tau, t0) (similarity families)."""
    ratios = [similarity_ratio(m.L) for m in family.members]
    if any(r is None for r in ratios):
        raise NotSimilarity("connectivity bound needs a similarity family")
    t0 = 1.0 / max(ratios)
    rn = np.array(ratios) * t0
    d = family.d
    return float((rn.max() ** d + rn.min() ** d) ** (-1.0 / d) * t0)


# ---------------------------------------------------------------- separation

def _component_hulls(cover: BoxCover, cs: ComponentSet):
    hulls = []
    for comp in cs.components:
        sub = BoxCover(cover.center, cover.cell, cover.shape, comp, cover.level)
        H = convex_hull(sub)
        if cover.dim == 1:
            H = np.array([[H[0], 0.0], [H[1], 0.0]])
        hulls.append(np.atleast_2d(H))
    return hulls


def _gaps(hulls, dirs):
    """For each direction: widest projection gap, its position and left count."""
    k = len(hulls)
    lo = np.empty((k, len(dirs)))
    hi = np.empty((k, len(dirs)))
    for c, H in enumerate(hulls):
        P = H @ dirs.T
        lo[c] = P.min(axis=0)
        hi[c] = P.max(axis=0)
    order = np.argsort(lo, axis=0, kind="stable")
    slo = np.take_along_axis(lo, order, axis=0)
    shi = np.maximum.accumulate(np.take_along_axis(hi, order, axis=0), axis=0)
    g = slo[1:] - shi[:-1]                    # gap after the first j+1 components
    j = np.argmax(g, axis=0)
    cols = np.arange(len(dirs))
    best = g[j, cols]
    mid = 0.5 * (slo[j + 1, cols] + shi[j, cols])
    return best, mid, j + 1, order


def _critical_dirs(hulls):
    """Normals of segments joining vertices of distinct components."""
    V = np.concatenate(hulls)
    comp = np.concatenate([np.full(len(H), i) for i, H in enumerate(hulls)])
    n = len(V)
    if n * (n - 1) // 2 > MAX_CRITICAL_DIRS:
        raise BudgetExceeded(f"{n} hull vertices give too many critical directions")
    iu, ju = np.triu_indices(n, 1)
    keep = comp[iu] != comp[ju]
    D = V[ju[keep]] - V[iu[keep]]
    ang = np.mod(np.arctan2(D[:, 1], D[:, 0]) + np.pi / 2, np.pi)
    ang = np.unique(np.round(ang, 12))
    return ang


def _witness(hulls, dirs, tol):
    best, mid, left, order = _gaps(hulls, dirs)
    k = int(np.argmax(best))
    if best[k] <= tol:
        return None
    u = dirs[k]
    return SeparationWitness(normal=(float(u[0]), float(u[1])), offset=float(mid[k]),
                             margin=float(best[k] / 2.0),
                             side_counts=(int(left[k]), len(hulls) - int(left[k])))


def _separate(hulls, tol):
    """Best separating line among axis, uniform and critical directions."""
    if len(hulls) < 2:
        return None
    w = _witness(hulls, np.array([[1.0, 0.0], [0.0, 1.0]]), tol)
    u = _witness(hulls, unit_directions(UNIFORM_DIRS)[: UNIFORM_DIRS // 2], tol)
    cands = [x for x in (w, u) if x is not None]
    if not cands:
        ang = _critical_dirs(hulls)
        if len(ang) == 0:
            return None
        # one direction strictly inside each arc between critical angles
        ext = np.concatenate([ang, [ang[0] + np.pi]])
        mids = 0.5 * (ext[:-1] + ext[1:])
        for lo in range(0, len(mids), 65536):
            th = mids[lo:lo + 65536]
            c = _witness(hulls, np.stack([np.cos(th), np.sin(th)], axis=1), tol)
            if c is not None:
                cands.append(c)
                break
    if not cands:
        return None
    return max(cands, key=lambda x: x.margin)


def _side_of(hulls, wit):
    u = np.array(wit.normal)
    return np.array([float((H @ u).max()) < wit.offset for H in hulls])


def strongly_disconnected(cover: BoxCover) -> Optional[SeparationWitness]:
    """A line meeting no cell with cells on both sides, or None if none exists."""
    if len(cover) == 0:
        raise EmptyInput("empty cover")
    cs = components(cover)
    if len(cs) < 2:
        return None
    hulls = _component_hulls(cover, cs)
    return _separate(hulls, tol=1e-12 * cover.cell)


def check_witness(polys, wit: SeparationWitness) -> bool:
    """Every polygon lies strictly on one side and both sides are used."""
    u = np.array(wit.normal)
    side = []
    for P in polys:
        p = np.atleast_2d(P) @ u
        if p.max() < wit.offset:
            side.append(0)
        elif p.min() > wit.offset:
            side.append(1)
        else:
            return False
    return 0 in side and 1 in side


def transform_witness(wit: SeparationWitness, A, b) -> SeparationWitness:
    """The same separating line after x -> A x + b (A invertible, d = 2)."""
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    m = np.linalg.solve(A.T, np.asarray(wit.normal, dtype=float))
    s = float(np.linalg.norm(m))
    u = m / s
    # margins are not preserved by a non-similarity, so the new one is a lower bound
    smin = float(np.linalg.svd(A, compute_uv=False).min())
    return SeparationWitness(normal=(float(u[0]), float(u[1])), offset=float((wit.offset + m @ b) / s),
                             margin=wit.margin * smin, side_counts=wit.side_counts)


def weak_components(cover: BoxCover) -> list:
    """Maximal weakly connected groups of cells, by recursive line splitting.

    A separating line of a set leaves each weakly connected subset on one side,
    so splitting recursively until no line separates a group gives exactly the
    weak components.
    """
    if len(cover) == 0:
        raise EmptyInput("empty cover")
    cs = components(cover)
    hulls = _component_hulls(cover, cs)
    tol = 1e-12 * cover.cell
    leaves = []
    stack = [list(range(len(hulls)))]
    while stack:
        grp = stack.pop()
        wit = _separate([hulls[i] for i in grp], tol) if len(grp) > 1 else None
        if wit is None:
            leaves.append(grp)
            continue
        side = _side_of([hulls[i] for i in grp], wit)
        stack.append([g for g, s in zip(grp, side) if not s])
        stack.append([g for g, s in zip(grp, side) if s])
    groups = [np.concatenate([cs.components[i] for i in sorted(g)]) for g in leaves]
    groups.sort(key=lambda a: tuple(a.min(axis=0)))
    total = sum(len(g) for g in groups)
    if total != len(cover):
        raise AssertionError("weak components do not partition the cover")
    return groups


# ---------------------------------------------------------------- weak threshold

@dataclass
class WeakThreshold:
    tau: float
    lo: float
    hi: float
    probes: list

    def to_dict(self):
        return {"tau": self.tau, "bracket": [self.lo, self.hi], "kind": "evidence",
                "probes": [{"t": t, "strongly_disconnected": s} for t, s in self.probes]}


def probe_strong_disconnection(family, t, cell, backend=None):
    """True if the cover at t has a separating line with attractor points on both sides."""
    inst = instantiate(family, t)
    trap = trapping_ball(family, t)
    cover = compute_attractor(inst, trap, cell, backend=backend, close=False)
    wit = strongly_disconnected(cover)
    if wit is None:
        return False, None
    anchors = word_fixed_points(inst)
    u = np.array(wit.normal) if cover.dim == 2 else np.array([wit.normal[0]])
    p = anchors @ u
    # anchors are points of A; A avoids the strip, so both sides must be hit
    ok = bool((p < wit.offset - wit.margin).any() and (p > wit.offset + wit.margin).any())
    return ok, wit


def weak_threshold(family: OneParamFamily, t_grid, cell: float, backend=None) -> WeakThreshold:
    """Bracket for the weak-connectivity threshold of a semi-linear family."""
    cl = classify(family)
    if not cl.is_semi_linear or cl.is_linear:
        raise NotApplicable("weak threshold needs a semi-linear, non-linear family")
    t0 = t0_threshold(family).lo
    ts = sorted(float(t) for t in t_grid)
    if not ts or ts[0] <= 0 or ts[-1] >= t0:
        raise ValueError("t_grid must lie inside (0, t0)")
    probes = [(t, probe_strong_disconnection(family, t, cell, backend)[0]) for t in ts]
    flags = [p for _, p in probes]
    k = next((i for i, f in enumerate(flags) if not f), len(flags))
    if any(flags[k:]):
        raise MonotonicityViolation("strong disconnection found above a weakly connected probe")
    lo = 0.0 if k == 0 else ts[k - 1]
    hi = t0 if k == len(ts) else ts[k]
    tau = t0 if k == len(ts) else 0.5 * (lo + hi)
    return WeakThreshold(tau=tau, lo=lo, hi=hi, probes=probes)
