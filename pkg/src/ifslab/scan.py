"""Parameter scans: the complex tau-plane of two-map families and t-grids of a family."""

from __future__ import annotations

import cmath
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .attractor import compute_attractor, convex_hull, instance_trap, trapping_ball
from .core import AffineMap, OneParamFamily, classify, instantiate
from .errors import RegionOutsideDisk
from .families import rotation
from .interior import interior_status, measure_zero_threshold
from .jsr import t0_threshold
from .topology import CONNECTED, DISCONNECTED, UNRESOLVED, connectivity_status, instance_connectivity

OUTSIDE = "outside"
PIXEL_VALUE = {CONNECTED: 255, DISCONNECTED: 0, UNRESOLVED: 128, OUTSIDE: 128}
DEFAULT_BUDGET = 5
ANALYSES = ("connectivity", "interior", "hulls")


@dataclass(frozen=True)
class ComplexFamilySpec:
    """{tau z + c1, tau m z + c2} as real rotation-scalings; defaults to {tau z, tau z + 1}."""
    m: complex = 1.0
    c1: complex = 0.0
    c2: complex = 1.0

    def instance(self, tau: complex) -> list:
        tau = complex(tau)
        r, phi = abs(tau), cmath.phase(tau)
        mz = complex(self.m)
        c1, c2 = complex(self.c1), complex(self.c2)
        return [AffineMap(r * rotation(phi), [c1.real, c1.imag]),
                AffineMap(r * abs(mz) * rotation(phi + cmath.phase(mz)), [c2.real, c2.imag])]

    def to_dict(self):
        return {"m": [complex(self.m).real, complex(self.m).imag],
                "c1": [complex(self.c1).real, complex(self.c1).imag],
                "c2": [complex(self.c2).real, complex(self.c2).imag]}


def pixel_centers(region, resolution):
    """tau at pixel centres; row 0 is the top (largest imaginary part)."""
    x0, y0, x1, y1 = map(float, region)
    W, H = resolution
    xs = x0 + (np.arange(W) + 0.5) * (x1 - x0) / W
    ys = y1 - (np.arange(H) + 0.5) * (y1 - y0) / H
    return xs[None, :] + 1j * ys[:, None]


def pixel_status(spec: ComplexFamilySpec, tau: complex, budget: int = DEFAULT_BUDGET,
                 backend=None) -> str:
    """Connectivity status of A_tau; 'outside' when |tau| >= 1."""
    if not abs(tau) < 1.0:
        return OUTSIDE
    inst = spec.instance(tau)
    if abs(complex(spec.m)) * abs(tau) >= 1.0:
        return OUTSIDE
    trap = instance_trap(inst)
    return instance_connectivity(inst, trap, None, budget, backend=backend).status


@dataclass
class PlaneScan:
    region: tuple
    resolution: tuple
    budget: int
    status: np.ndarray            # (H, W) array of status strings
    spec: ComplexFamilySpec = field(default_factory=ComplexFamilySpec)

    def __post_init__(self):
        W, H = self.resolution
        if self.status.shape != (H, W):
            raise ValueError("status grid does not match the resolution")

    def image(self) -> np.ndarray:
        out = np.full(self.status.shape, 128, dtype=np.uint8)
        for k, v in PIXEL_VALUE.items():
            out[self.status == k] = v
        return out

    def counts(self) -> dict:
        keys, n = np.unique(self.status, return_counts=True)
        return {str(k): int(c) for k, c in zip(keys, n)}

    def resolved_fraction(self) -> float:
        """Share of in-disk pixels that are connected-evidence or disconnected-certified."""
        inside = self.status != OUTSIDE
        if not inside.any():
            return 0.0
        done = (self.status == CONNECTED) | (self.status == DISCONNECTED)
        return float(done.sum() / inside.sum())

    def to_dict(self):
        return {"region": list(self.region), "resolution": list(self.resolution),
                "budget": self.budget, "spec": self.spec.to_dict(), "counts": self.counts(),
                "resolved_fraction": self.resolved_fraction()}


def mandelbrot_scan(spec: Optional[ComplexFamilySpec] = None, region=(0.0, 0.0, 1.0, 1.0),
                    resolution=(128, 128), budget: int = DEFAULT_BUDGET, threads=None,
                    strict: bool = False, backend=None) -> PlaneScan:
    """Per-pixel connectivity status over a rectangle of the tau-plane.

    Pixels with |tau| >= 1 are marked 'outside' (rendered gray); strict=True
    raises RegionOutsideDisk for them instead. A region with no pixel inside
    the disk always raises.
    """
    from .parallel import pmap
    spec = ComplexFamilySpec() if spec is None else spec
    W, H = int(resolution[0]), int(resolution[1])
    if W < 1 or H < 1:
        raise ValueError("resolution must be positive")
    if budget < 0:
        raise ValueError("budget must be non-negative")
    taus = pixel_centers(region, (W, H))
    inside = np.abs(taus) < 1.0
    if not inside.any() or (strict and not inside.all()):
        raise RegionOutsideDisk(f"region {tuple(region)} leaves the unit disk")
    flat = taus.reshape(-1)
    sts = pmap(lambda z: pixel_status(spec, z, budget, backend), flat, threads)
    status = np.array(sts, dtype=object).reshape(H, W)
    return PlaneScan(tuple(float(v) for v in region), (W, H), int(budget), status, spec)


# ---------------------------------------------------------------- t-grid scans

@dataclass
class FamilyScan:
    family: OneParamFamily
    t: list
    analyses: tuple
    rows: list
    thresholds: dict
    cell: Optional[float] = None
    seed: int = 0

    def to_dict(self):
        return {"family": self.family.name, "analyses": list(self.analyses), "cell": self.cell,
                "seed": self.seed, "thresholds": self.thresholds, "rows": self.rows}


def _row(family, t, analyses, cell, t_m, backend):
    row = {"t": t}
    if "connectivity" in analyses:
        row["connectivity"] = connectivity_status(family, t, cell, backend=backend).to_dict()
    if "interior" in analyses:
        row["interior"] = interior_status(family, t, cell, t_m=t_m, backend=backend).to_dict()
    if "hulls" in analyses:
        cover = compute_attractor(instantiate(family, t), trapping_ball(family, t),
                                  cell if cell is not None else _default_cell(family, t), backend=backend)
        row["hull"] = np.asarray(convex_hull(cover)).tolist()
    return row


def _default_cell(family, t):
    from .topology import hull_diameter
    inst = instantiate(family, t)
    diam = hull_diameter(inst, trapping_ball(family, t))
    return (diam if diam > 0 else 1.0) / 128.0


def family_scan(family: OneParamFamily, t_grid, analyses=ANALYSES, cell: Optional[float] = None,
                threads=None, seed: int = 0, backend=None) -> FamilyScan:
    """One row per t with the requested statuses; independent of the thread count."""
    from .parallel import pmap
    req = set(analyses)
    if req - set(ANALYSES):
        raise ValueError(f"unknown analyses {sorted(req - set(ANALYSES))}")
    analyses = tuple(a for a in ANALYSES if a in req)
    ts = [float(t) for t in t_grid]
    thresholds = {}
    if analyses:
        t0 = t0_threshold(family)
        thresholds["t0"] = t0.to_dict()
        bad = [t for t in ts if not 0.0 <= t < t0.lo]
        if bad:
            raise ValueError(f"t values {bad} outside [0, t0) with t0 >= {t0.lo}")
    t_m = None
    if "interior" in analyses:
        t_m = measure_zero_threshold(family)
        thresholds["measure"] = {"value": t_m, "kind": "bound"}
    if "connectivity" in analyses and classify(family).is_similarity:
        from .topology import connectivity_lower_bound
        thresholds["connectivity"] = {"value": connectivity_lower_bound(family), "kind": "bound"}
    rows = pmap(lambda t: _row(family, t, analyses, cell, t_m, backend), ts, threads)
    return FamilyScan(family, ts, analyses, rows, thresholds, cell, seed)
