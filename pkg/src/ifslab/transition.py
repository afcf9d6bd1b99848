"""Bounded families near the existence threshold t0.

The lower transition attractor is the closure of the orbit of the special fixed
point under F_{t0}; the transition hull is the union of the nested hulls
conv A_t; upper transition attractors are only estimated (Cauchy tables).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .attractor import (Ball, BoxCover, PointSample, bounded_trap, chaos_game, compute_attractor,
                        convex_hull, directed_hausdorff, hausdorff)
from .core import OneParamFamily, classify, instantiate
from .errors import BudgetExceeded, CertificateInconsistency, NestingViolation, NotBounded
from .geometry import point_polygon_distance, polygon_hausdorff
from .jsr import t0_threshold

DEFAULT_MAX_POINTS = 1_000_000
EPS_REL = 1e-6
CAUCHY_CELLS = 5.0
NEST_CELLS = 2.0
SPECIAL_WEIGHT = 0.9


def special_function(family: OneParamFamily):
    """(index, q_star) of the unique maximal-ratio member; index is 0-based."""
    cl = classify(family)
    if not cl.is_bounded:
        raise NotBounded("family is not bounded (needs semi-linear similarity with a unique "
                         "maximal-ratio member)")
    idx = int(np.argmax(cl.scaling_ratios))
    return idx, family.offsets()[idx].copy()


def _threshold(family):
    return float(t0_threshold(family).lo)


def transition_trap(family: OneParamFamily) -> Ball:
    """Ball B with F_t(B) in B for all t in [0, t0]."""
    idx, _ = special_function(family)
    return bounded_trap(family, _threshold(family), idx)


class _Snap:
    """Points deduplicated within eps using an eps-grid and neighbour-cell lookup."""

    def __init__(self, d, eps):
        self.eps = eps
        self.cells = {}
        self.pts = []
        self.nbr = np.array(np.meshgrid(*([[-1, 0, 1]] * d), indexing="ij")).reshape(d, -1).T

    def add(self, p) -> bool:
        key = np.floor(p / self.eps).astype(np.int64)
        for o in self.nbr:
            for j in self.cells.get(tuple(key + o), ()):
                if np.linalg.norm(self.pts[j] - p) <= self.eps:
                    return False
        self.cells.setdefault(tuple(key), []).append(len(self.pts))
        self.pts.append(p)
        return True


def lower_transition_attractor(family: OneParamFamily, epsilon: Optional[float] = None,
                               max_points: int = DEFAULT_MAX_POINTS) -> PointSample:
    """Orbit of q_star under F_{t0}, breadth first, merged within epsilon.

    Stops when a whole generation adds no new point. Default epsilon is
    1e-6 times the trapping radius.
    """
    idx, qstar = special_function(family)
    t0 = _threshold(family)
    trap = bounded_trap(family, t0, idx)
    eps = EPS_REL * trap.radius if epsilon is None else float(epsilon)
    if not eps > 0:
        raise ValueError("epsilon must be positive")
    inst = instantiate(family, t0)
    Ls = np.stack([m.L for m in inst])
    As = np.stack([m.a for m in inst])
    snap = _Snap(family.d, eps)
    snap.add(np.asarray(qstar, dtype=float))
    frontier = np.asarray(qstar, dtype=float)[None]
    while len(frontier):
        # images in word order: point-major, then map index
        img = (np.einsum("kij,pj->pki", Ls, frontier) + As[None]).reshape(-1, family.d)
        new = []
        for p in img:
            if snap.add(p):
                new.append(p)
                if len(snap.pts) > max_points:
                    raise BudgetExceeded(f"orbit exceeds {max_points} points at epsilon {eps}")
        frontier = np.array(new).reshape(-1, family.d)
    P = np.array(snap.pts)
    slack = 1e-9 * (trap.radius + float(np.abs(trap.center).max())) + eps
    if not trap.contains(P, slack=slack).all():
        raise CertificateInconsistency("orbit left the trapping ball")
    return PointSample(P)


def invariance_residual(sample, family: OneParamFamily) -> float:
    """Hausdorff distance between F_{t0}(S) and S."""
    t0 = _threshold(family)
    inst = instantiate(family, t0)
    P = sample.centers() if isinstance(sample, BoxCover) else np.asarray(
        sample.points if isinstance(sample, PointSample) else sample, dtype=float)
    if P.ndim == 1:
        P = P[:, None]
    img = np.concatenate([m(P) for m in inst])
    return hausdorff(img, P)


def _hull_excess(inner, outer, d) -> float:
    """How far the hull `inner` sticks out of the hull `outer`."""
    if d == 1:
        return float(max(outer[0] - inner[0], inner[1] - outer[1], 0.0))
    return float(point_polygon_distance(inner, outer).max())


def _hull_distance(a, b, d) -> float:
    if d == 1:
        return float(max(abs(a[0] - b[0]), abs(a[1] - b[1])))
    return polygon_hausdorff(a, b)


@dataclass
class HullSequence:
    t: list
    hulls: list
    cell: float
    max_excess: float = 0.0

    @property
    def k_star(self):
        return self.hulls[-1]

    def to_dict(self):
        return {"cell": self.cell, "slack": NEST_CELLS * self.cell, "max_excess": self.max_excess,
                "hulls": [{"t": t, "vertices": np.asarray(h).tolist()} for t, h in zip(self.t, self.hulls)],
                "k_star": {"vertices": np.asarray(self.k_star).tolist(), "kind": "evidence"}}


def _cover_at(family, t, trap, cell, backend=None):
    return compute_attractor(instantiate(family, t), trap, cell, backend=backend)


def transition_hull(family: OneParamFamily, t_grid, cell: float, threads=None,
                    backend=None) -> HullSequence:
    """K_t = conv A_t along an increasing t grid; K_star is the last hull.

    Raises NestingViolation if some K_s sticks out of a later K_t by more
    than 2 cell.
    """
    from .parallel import pmap
    ts = [float(t) for t in t_grid]
    if any(b <= a for a, b in zip(ts, ts[1:])):
        raise ValueError("t_grid must be increasing")
    t0 = _threshold(family)
    if ts and (ts[0] <= 0 or ts[-1] >= t0):
        raise ValueError(f"t_grid must lie in (0, t0) = (0, {t0})")
    trap = transition_trap(family)
    d = family.d
    hulls = pmap(lambda t: convex_hull(_cover_at(family, t, trap, cell, backend)), ts, threads)
    seq = HullSequence(ts, hulls, cell)
    for k in range(1, len(hulls)):
        ex = _hull_excess(hulls[k - 1], hulls[k], d)
        seq.max_excess = max(seq.max_excess, ex)
        if ex > NEST_CELLS * cell:
            raise NestingViolation(f"hull at t={ts[k - 1]} exceeds hull at t={ts[k]} by {ex}")
    return seq


def upper_sample(family: OneParamFamily, t: float, n: int = 200_000, seed: int = 0,
                 backend=None) -> PointSample:
    """Chaos-game preview of A_t; the special member gets weight 0.9 near t0."""
    idx, _ = special_function(family)
    t0 = _threshold(family)
    N = family.N
    w = np.full(N, 1.0 / N)
    if t > 0.95 * t0 and N > 1:
        w = np.full(N, (1.0 - SPECIAL_WEIGHT) / (N - 1))
        w[idx] = SPECIAL_WEIGHT
    inst = instantiate(family, t)
    return chaos_game(inst, n, weights=w, seed=seed, backend=backend,
                      start=family.offsets()[idx])


@dataclass
class UpperEvidence:
    t: list
    covers: list
    distances: list
    verdict: str
    cell: float
    hull_gaps: list = field(default_factory=list)
    clusters: list = field(default_factory=list)

    @property
    def cauchy_table(self):
        return [(self.t[k], self.t[k + 1], self.distances[k]) for k in range(len(self.distances))]

    def to_dict(self):
        out = {"verdict": self.verdict, "kind": "evidence", "threshold": CAUCHY_CELLS * self.cell,
               "cauchy_table": [{"t_k": a, "t_k1": b, "hausdorff": h} for a, b, h in self.cauchy_table],
               "hull_gaps": [{"t": t, "gap": g} for t, g in zip(self.t, self.hull_gaps)]}
        if self.clusters:
            out["clusters"] = self.clusters
        return out


def cauchy_verdict(distances, cell: float) -> str:
    """'cauchy-evidence' if the distances do not grow (up to one cell) and end below 5 cell."""
    if not distances:
        return "inconclusive"
    D = np.asarray(distances, dtype=float)
    steady = bool((np.diff(D) <= cell).all()) if len(D) > 1 else True
    return "cauchy-evidence" if steady and D[-1] <= CAUCHY_CELLS * cell else "inconclusive"


def _clusters(ts, distances, cell):
    groups = [[ts[0]]]
    for k, dist in enumerate(distances):
        if dist <= CAUCHY_CELLS * cell:
            groups[-1].append(ts[k + 1])
        else:
            groups.append([ts[k + 1]])
    return groups


def upper_transition_evidence(family: OneParamFamily, t_sequence, cell: float,
                              k_star=None, threads=None, backend=None) -> UpperEvidence:
    """Successive Hausdorff distances of A_{t_k} covers as t_k increases to t0.

    k_star (a hull) defaults to conv of the lower transition attractor; the
    gap between conv A_{t_k} and it is tabulated too.
    """
    from .parallel import pmap
    ts = [float(t) for t in t_sequence]
    if any(b <= a for a, b in zip(ts, ts[1:])):
        raise ValueError("t_sequence must be increasing")
    trap = transition_trap(family)
    covers = pmap(lambda t: _cover_at(family, t, trap, cell, backend), ts, threads)
    dist = [hausdorff(covers[k], covers[k + 1]) for k in range(len(covers) - 1)]
    verdict = cauchy_verdict(dist, cell)
    if k_star is None:
        k_star = convex_hull(lower_transition_attractor(family))
    gaps = [_hull_distance(convex_hull(c), k_star, family.d) for c in covers]
    ev = UpperEvidence(ts, covers, dist, verdict, cell, hull_gaps=gaps)
    if verdict == "inconclusive" and ts:
        ev.clusters = _clusters(ts, dist, cell)
    return ev


@dataclass
class TransitionReport:
    q_star: np.ndarray
    special_index: int
    t0: float
    lower_attractor: PointSample
    hull_sequence: HullSequence
    upper: UpperEvidence
    residual: float
    lower_in_upper: list = field(default_factory=list)

    @property
    def upper_estimates(self):
        return list(zip(self.upper.t, self.upper.covers))

    @property
    def cauchy_table(self):
        return self.upper.cauchy_table

    def to_dict(self):
        return {"q_star": np.asarray(self.q_star).tolist(), "special_index": self.special_index,
                "t0": self.t0, "lower_attractor_points": len(self.lower_attractor),
                "invariance_residual": self.residual,
                "lower_in_upper": [{"t": t, "distance": v} for t, v in zip(self.upper.t, self.lower_in_upper)],
                "hulls": self.hull_sequence.to_dict(), "upper": self.upper.to_dict()}


def transition_report(family: OneParamFamily, t_grid, cell: float, epsilon: Optional[float] = None,
                      max_points: int = DEFAULT_MAX_POINTS, threads=None,
                      backend=None) -> TransitionReport:
    idx, qstar = special_function(family)
    t0 = _threshold(family)
    low = lower_transition_attractor(family, epsilon, max_points)
    hulls = transition_hull(family, t_grid, cell, threads=threads, backend=backend)
    up = upper_transition_evidence(family, t_grid, cell, k_star=convex_hull(low), threads=threads,
                                   backend=backend)
    # A_* lies in A^*; per t this is only evidence, so report the distances
    inside = [directed_hausdorff(low, c) for c in up.covers]
    return TransitionReport(qstar, idx, t0, low, hulls, up, invariance_residual(low, family), inside)
