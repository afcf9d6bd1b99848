"""Interior certificates: measure bound, ball covering, rotation-cone bound, scans."""

from __future__ import annotations

import bisect
import functools
import heapq
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import ndimage
from scipy.spatial import cKDTree

from .attractor import (Ball, BoxCover, _compose_words, _instance_arrays, compute_attractor,
                        outer_hull_bound, clip_region, trapping_ball)
from .core import OneParamFamily, classify, instantiate, similarity_ratio
from .errors import BudgetExceeded, MonotonicityViolation, NoFeasibleCone, NotApplicable
from .jsr import t0_threshold

EMPTY = "empty-certified"
NONEMPTY = "nonempty-certified"
UNKNOWN = "unknown"

MAX_WORDS = 10_000_000
RATIONAL_Q = 64
RATIONAL_TOL = 1e-6
FEAS_MARGIN = 1e-9
M_CAP = 200_000
MAX_SUBCELLS = 4_000_000


@dataclass
class InteriorStatus:
    status: str
    kind: Optional[str] = None        # "measure-bound" | "ball" | None
    bound: Optional[float] = None     # measure threshold for EMPTY
    ball: Optional[Ball] = None
    depth: Optional[int] = None

    def to_dict(self):
        out = {"status": self.status, "certificate_kind": self.kind}
        if self.bound is not None:
            out["measure_threshold"] = self.bound
        if self.ball is not None:
            out["ball"] = {"center": self.ball.center.tolist(), "radius": self.ball.radius}
            out["depth_n"] = self.depth
        return out


@dataclass(frozen=True)
class ConeParams:
    epsilon: float
    theta: float
    M: int
    s: float
    ratio: float          # (1 - epsilon)^(1 / (M + 1))
    tau: float            # ratio * t0
    phi: float = 0.0
    proxy_gap: float = 0.0
    t0: float = 1.0

    def margin(self) -> float:
        return cone_margin(self.epsilon, self.theta, self.s)

    def to_dict(self):
        return {"epsilon": self.epsilon, "theta": self.theta, "M": self.M, "s": self.s,
                "ratio": self.ratio, "tau": self.tau, "phi": self.phi,
                "t0": self.t0, "tau_as_printed": (1.0 - self.epsilon) ** (self.M + 1) * self.t0,
                "irrationality_proxy": {"max_q": RATIONAL_Q, "min_distance": self.proxy_gap,
                                        "tolerance": RATIONAL_TOL},
                "kind": "bound"}


# ---------------------------------------------------------------- measure bound

def measure_zero_threshold(family: OneParamFamily) -> float:
    """Below (sum |det L_i|)^(-1/d) the attractor has measure zero."""
    dets = np.abs(np.linalg.det(family.linear_parts()))
    return float(dets.sum() ** (-1.0 / family.d))


# ---------------------------------------------------------------- ball covering

def _subcell_size(r_min, d):
    # sub-cell diameter below a quarter of the smallest image radius
    return 0.99 * r_min / (4.0 * math.sqrt(d))


def _covered(P, h, centers, radii, tree, c, r):
    """Per sub-cell (centres P, side h): does one image ball hold it, inflated by its diameter?

    Also returns whether the sub-cell centre lies in some image ball.
    """
    d = P.shape[1]
    diam = h * math.sqrt(d)
    need = diam / 2.0 + diam
    nbs = tree.query_ball_point(P, float(radii.max()) + diam)
    cnt = np.fromiter((len(x) for x in nbs), dtype=np.int64, count=len(P))
    ok = np.zeros(len(P), dtype=bool)
    inside = np.zeros(len(P), dtype=bool)
    if cnt.sum() == 0:
        return ok, inside
    idx = np.fromiter((j for x in nbs for j in x), dtype=np.int64, count=int(cnt.sum()))
    row = np.repeat(np.arange(len(P)), cnt)
    dist = np.linalg.norm(centers[idx] - P[row], axis=1)
    # an image ball holding all of B holds every sub-cell
    whole = np.linalg.norm(centers[idx] - c, axis=1) + r
    hit = np.minimum(dist + need, whole) <= radii[idx]
    np.logical_or.at(ok, row[hit], True)
    np.logical_or.at(inside, row[dist < radii[idx]], True)
    return ok, inside


def ball_certificate(instance, ball: Ball, n: int, subdivision: Optional[int] = None,
                     rtol: float = 1e-12, max_cells: int = MAX_SUBCELLS) -> bool:
    """True if the ball is covered by its n-fold word images, so it lies in A.

    Each image f_w(B) contains the ball of radius sigma_min(L_w) r about f_w(c).
    The ball is split into sub-cells; every sub-cell, inflated by its diameter,
    must fit in one image ball. Cells that fail are halved until they reach the
    finest size (a quarter of the smallest image radius, or 2r/subdivision).
    rtol absorbs rounding in the radii.
    """
    instance = list(instance)
    Ls, As = _instance_arrays(instance)
    N, d = Ls.shape[0], Ls.shape[1]
    if n < 1:
        raise ValueError("n must be >= 1")
    if N ** n > MAX_WORDS:
        raise BudgetExceeded(f"{N ** n} word images exceed {MAX_WORDS}")
    PL, PA = _compose_words(Ls, As, n, limit=MAX_WORDS)
    c, r = np.asarray(ball.center, dtype=float), float(ball.radius)
    centers = np.einsum("wij,j->wi", PL, c) + PA
    smin = np.linalg.svd(PL, compute_uv=False)[:, -1]
    radii = smin * r * (1.0 + rtol)
    if subdivision is None:
        h_min = _subcell_size(float(radii.min()), d)
    else:
        h_min = 2.0 * r / int(subdivision)
    tree = cKDTree(centers)
    # first level: sub-cells of about a quarter of the largest image radius
    k = max(1, int(math.ceil(2.0 * r / max(_subcell_size(float(radii.max()), d), h_min))))
    h = 2.0 * r / k
    g = -r + (np.arange(k) + 0.5) * h
    P = np.stack(np.meshgrid(*([g] * d), indexing="ij"), axis=-1).reshape(-1, d)
    corners = np.array(np.meshgrid(*([[-1.0, 1.0]] * d), indexing="ij")).reshape(d, -1).T
    while True:
        # keep sub-cells meeting the ball
        P = P[np.sqrt((np.maximum(np.abs(P) - h / 2.0, 0.0) ** 2).sum(axis=1)) <= r]
        if len(P) > max_cells:
            raise BudgetExceeded(f"{len(P)} sub-cells exceed {max_cells}")
        ok, inside = _covered(P + c, h, centers, radii, tree, c, r)
        if ok.all():
            return True
        # a centre outside every image ball stays uncovered at any refinement
        if not inside[~ok].all():
            return False
        bad = P[~ok]
        if h / 2.0 < h_min * (1.0 - 1e-12):
            return False
        h /= 2.0
        P = (bad[:, None, :] + corners[None] * (h / 2.0)).reshape(-1, d)


def candidate_ball(cover: BoxCover) -> Optional[Ball]:
    """Ball at the cover cell deepest in the Chebyshev distance transform."""
    if len(cover) == 0:
        return None
    m = np.pad(cover.mask().astype(bool), 1)
    dist = ndimage.distance_transform_cdt(m, metric="chessboard")
    idx = np.unravel_index(int(np.argmax(dist)), dist.shape)
    D = float(dist[idx])
    cell = np.array(idx) - 1
    n = np.asarray(cover.shape)
    center = cover.center + (2 * cell + 1 - n) * (cover.cell / 2.0)
    return Ball(center, 0.5 * D * cover.cell)


# ---------------------------------------------------------------- cone bound

def cone_margin(eps, theta, s) -> float:
    """2(1-eps) cos(theta) - 1 - (1-eps)^2 (1-s^2); positive means feasible."""
    e = 1.0 - eps
    return 2.0 * e * math.cos(theta) - 1.0 - e * e * (1.0 - s * s)


def rational_distance(x: float, max_q: int = RATIONAL_Q) -> float:
    """min over p/q with q <= max_q of |x - p/q|."""
    q = np.arange(1, max_q + 1)
    return float(np.abs(x - np.round(x * q) / q).min())


def rotation_angle(L) -> Optional[float]:
    """Angle of a rotation-scaling matrix; None for reflections or non-similarities."""
    L = np.asarray(L, dtype=float)
    if L.shape != (2, 2) or similarity_ratio(L) is None or np.linalg.det(L) <= 0:
        return None
    return float(math.atan2(L[1, 0], L[0, 0]))


@functools.lru_cache(maxsize=8)
def _gap_profile(phi: float, cap: int) -> np.ndarray:
    """G[k] = max angular gap of {j phi mod 2 pi : 0 <= j <= k}, non-increasing.

    Built backwards: start from all cap + 1 points and delete them in reverse
    order from a circular linked list; each deletion merges two gaps.
    """
    two_pi = 2.0 * math.pi
    a = np.fmod(np.arange(cap + 1) * phi, two_pi)
    a[a < 0] += two_pi
    order = np.argsort(a, kind="stable")
    nxt = np.empty(cap + 1, dtype=np.int64)
    prv = np.empty(cap + 1, dtype=np.int64)
    nxt[order] = np.roll(order, -1)
    prv[order] = np.roll(order, 1)
    gaps = np.diff(a[order], append=a[order[0]] + two_pi)
    G = np.empty(cap + 1)
    g = float(gaps.max()) if cap > 0 else two_pi
    G[cap] = g
    av, nx, pv = a.tolist(), nxt.tolist(), prv.tolist()
    for k in range(cap, 0, -1):
        p, n = pv[k], nx[k]
        merged = av[n] - av[p]
        if merged <= 0:
            merged += two_pi
        if merged > g:
            g = merged
        G[k - 1] = g
        nx[p], pv[n] = n, p
    G.flags.writeable = False
    return G


def dense_orbit_count(phi: float, theta: float, cap: int = M_CAP) -> Optional[int]:
    """Smallest M with max angular gap of {k phi mod 2 pi : 0 <= k <= M} at most theta."""
    G = _gap_profile(float(phi), int(cap))
    # G is non-increasing: search the reversed copy
    k = int(np.searchsorted(-G, -theta, side="left"))
    if k > cap:
        return None
    return max(k, 1) if G[0] > theta else 0


def nonempty_threshold_bound_2d(family: OneParamFamily, n_eps: int = 48,
                                n_theta: int = 48) -> ConeParams:
    """Rotation-cone bound tau below t0: interior is non-empty on (tau, t0)."""
    if family.d != 2:
        raise NotApplicable("cone bound needs d = 2")
    cl = classify(family)
    if not cl.is_semi_linear or cl.is_linear:
        raise NotApplicable("cone bound needs a semi-linear, non-linear family")
    if not cl.is_similarity:
        raise NotApplicable("cone bound needs similarity linear parts")
    r = np.array(cl.scaling_ratios)
    rmax = float(r.max())
    top = int(np.argmax(r))
    phi = rotation_angle(family.members[top].L)
    if phi is None:
        raise NotApplicable("maximal member is not a rotation-scaling")
    gap = rational_distance(phi / math.pi)
    if not gap > RATIONAL_TOL:
        raise NotApplicable(f"rotation angle is within {RATIONAL_TOL} of a rational multiple of pi")
    # g: a member whose fixed point differs from that of the rotation; s = 1 is allowed
    qs = family.offsets()
    q0 = qs[top]
    off = np.linalg.norm(qs - q0, axis=1) > 1e-12 * (1.0 + float(np.abs(qs).max()))
    if not off.any():
        raise NotApplicable("every member shares the rotation's fixed point")
    s = float(r[off].max() / rmax)
    t0 = t0_threshold(family).lo
    eps_grid = np.logspace(-8, math.log10(0.5), n_eps)
    th_grid = np.logspace(-4, math.log10(math.pi / 2 - 1e-3), n_theta)
    Ms = {}
    best = None
    for th in th_grid:
        feas = [e for e in eps_grid if cone_margin(e, th, s) >= FEAS_MARGIN]
        if not feas:
            continue
        if th not in Ms:
            Ms[th] = dense_orbit_count(phi, th)
        M = Ms[th]
        if M is None:
            continue
        e = max(feas)   # largest feasible eps gives the smallest tau for this theta
        # the proof needs t^(M+1) > 1 - eps, so tau = (1 - eps)^(1/(M+1)) t0
        ratio = (1.0 - e) ** (1.0 / (M + 1))
        if best is None or ratio < best.ratio:
            best = ConeParams(float(e), float(th), int(M), s, float(ratio), float(ratio * t0),
                              phi=phi, proxy_gap=gap, t0=float(t0))
    if best is None:
        raise NoFeasibleCone("no (epsilon, theta) grid point satisfies the cone inequality")
    return best


# ---------------------------------------------------------------- scans

def default_interior_cell(instance, trap: Ball, per_diam: int = 128) -> float:
    reg = clip_region(outer_hull_bound(instance, trap), trap, trap.dim)
    if trap.dim == 1:
        diam = float(reg[1] - reg[0])
    else:
        P = np.asarray(reg)
        diam = float(np.linalg.norm(P[:, None] - P[None], axis=2).max()) if len(P) > 1 else 0.0
    return (diam if diam > 0 else trap.radius) / per_diam


def interior_status(family: OneParamFamily, t: float, cell: Optional[float] = None,
                    max_n: int = 8, t_m: Optional[float] = None, backend=None) -> InteriorStatus:
    if t_m is None:
        t_m = measure_zero_threshold(family)
    if t < t_m:
        return InteriorStatus(EMPTY, kind="measure-bound", bound=t_m)
    inst = instantiate(family, t)
    trap = trapping_ball(family, t)
    if cell is None:
        cell = default_interior_cell(inst, trap)
    cover = compute_attractor(inst, trap, cell, backend=backend)
    ball = candidate_ball(cover)
    if ball is None or ball.radius <= 0:
        return InteriorStatus(UNKNOWN)
    for n in range(1, max_n + 1):
        try:
            if ball_certificate(inst, ball, n):
                return InteriorStatus(NONEMPTY, kind="ball", ball=ball, depth=n)
        except BudgetExceeded:
            break
    return InteriorStatus(UNKNOWN)


@dataclass
class InteriorScan:
    rows: list
    measure_threshold: float
    tame: bool = False
    t2_bracket: Optional[tuple] = None
    notes: list = field(default_factory=list)

    def to_dict(self):
        out = {"rows": [dict(t=t, **st.to_dict()) for t, st in self.rows],
               "measure_threshold": {"value": self.measure_threshold, "kind": "bound"}}
        if self.tame:
            lo, hi = self.t2_bracket
            out["t2_bracket"] = {"lo": lo, "hi": hi, "kind": "evidence", "assumes": "tame"}
        return out


def interior_scan(family: OneParamFamily, t_grid, cell: Optional[float] = None, max_n: int = 8,
                  threads=None, backend=None) -> InteriorScan:
    """Per-t interior status; for similarity semi-linear families also a t2 bracket."""
    from .parallel import pmap
    ts = [float(t) for t in t_grid]
    t_m = measure_zero_threshold(family)
    sts = pmap(lambda t: interior_status(family, t, cell, max_n, t_m, backend), ts, threads)
    rows = list(zip(ts, sts))
    cl = classify(family)
    tame = cl.is_similarity and cl.is_semi_linear
    scan = InteriorScan(rows=rows, measure_threshold=t_m, tame=tame)
    if tame:
        srt = sorted(rows, key=lambda x: x[0])
        full = [t for t, st in srt if st.status == NONEMPTY]
        empty = [t for t, st in srt if st.status == EMPTY]
        if full and empty and max(empty) > min(full):
            raise MonotonicityViolation(
                f"empty interior certified at t={max(empty)} above a non-empty one at t={min(full)}")
        lo = max(empty) if empty else 0.0
        hi = min(full) if full else t0_threshold(family).hi
        scan.t2_bracket = (lo, hi)
    return scan
