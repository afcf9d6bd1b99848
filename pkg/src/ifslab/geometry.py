"""Planar convex geometry: hulls, half-plane polygons, distances."""

import numpy as np
from scipy.spatial import ConvexHull, QhullError


def _cross(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def monotone_chain(points, tol=1e-12):
    """Convex hull, counterclockwise, starting at the lowest-then-leftmost vertex.

    Points whose removal changes the hull by at most tol (relative to the point
    scale) are dropped, so no three returned vertices are collinear.
    """
    P = np.unique(np.asarray(points, dtype=float).reshape(-1, 2), axis=0)
    if len(P) <= 2:
        return P
    scale = max(1.0, float(np.abs(P).max()))
    eps = tol * scale
    pts = [tuple(p) for p in P]  # sorted by x then y

    def drop(o, m, p):
        # m goes if it turns right, or sits within eps of the segment o-p
        c = _cross(o, m, p)
        if c <= 0.0:
            return True
        dx, dy = p[0] - o[0], p[1] - o[1]
        L2 = dx * dx + dy * dy
        if c > eps * np.sqrt(L2):
            return False
        w = ((m[0] - o[0]) * dx + (m[1] - o[1]) * dy) / L2
        return 0.0 <= w <= 1.0

    def half(seq):
        out = []
        for p in seq:
            while len(out) >= 2 and drop(out[-2], out[-1], p):
                out.pop()
            out.append(p)
        return out

    lower = half(pts)
    upper = half(reversed(pts))
    hull = np.array(lower[:-1] + upper[:-1])
    if len(hull) < 3:
        return hull
    # start at the lowest y (then lowest x) vertex
    k = int(np.lexsort((hull[:, 0], hull[:, 1]))[0])
    return np.roll(hull, -k, axis=0)


def polygon_area(poly):
    poly = np.asarray(poly, dtype=float)
    if len(poly) < 3:
        return 0.0
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def _meet(l1, l2):
    (a1, b1, c1), (a2, b2, c2) = l1, l2
    det = a1 * b2 - a2 * b1
    return ((c1 * b2 - c2 * b1) / det, (a1 * c2 - a2 * c1) / det)


def _outside(line, p, eps):
    a, b, c = line
    return a * p[0] + b * p[1] > c + eps


def _polar_polygon(U, H, p):
    """Half-plane intersection through the polar dual, p strictly inside."""
    slack = H - U @ p
    try:
        hull = ConvexHull(U / slack[:, None])
    except QhullError:
        return None
    k = hull.vertices  # counterclockwise in 2-D
    a, b = U[k], slack[k]
    a2, b2 = np.roll(a, -1, axis=0), np.roll(b, -1)
    det = a[:, 0] * a2[:, 1] - a[:, 1] * a2[:, 0]
    if (det <= 0).any():
        return None
    x = (b * a2[:, 1] - b2 * a[:, 1]) / det
    y = (a[:, 0] * b2 - a2[:, 0] * b) / det
    return np.stack([x, y], axis=1) + p


def halfplane_polygon(dirs, h, box, interior=None):
    """Convex polygon {x : x.u_j <= h_j for all j}, clipped to box=(xmin,ymin,xmax,ymax).

    Counterclockwise vertices; empty (0, 2) array if the region is empty.
    With a point `interior` strictly inside, the polygon comes from the convex
    hull of the polar dual; otherwise a deque sweep over the constraints sorted
    by angle.
    """
    x0, y0, x1, y1 = box
    U = np.asarray(dirs, dtype=float)
    H = np.asarray(h, dtype=float)
    U = np.vstack([U, [[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]]])
    H = np.concatenate([H, [x1, y1, -x0, -y0]])
    scale = max(abs(x0), abs(x1), abs(y0), abs(y1), 1.0)
    if interior is not None:
        p = np.asarray(interior, dtype=float)
        if (H - U @ p).min() > 1e-12 * scale:
            pts = _polar_polygon(U, H, p)
            if pts is not None:
                return pts
    ang = np.arctan2(U[:, 1], U[:, 0])
    order = np.lexsort((H, np.round(ang, 13)))
    lines = []
    last = None
    for k in order:
        a_ = round(float(ang[k]), 13)
        if a_ == last:
            continue  # same direction, the tighter one came first
        last = a_
        lines.append((float(U[k, 0]), float(U[k, 1]), float(H[k])))
    eps = 1e-12 * scale
    dq = []
    for ln in lines:
        while len(dq) >= 2 and _outside(ln, _meet(dq[-2], dq[-1]), eps):
            dq.pop()
        while len(dq) >= 2 and _outside(ln, _meet(dq[0], dq[1]), eps):
            dq.pop(0)
        if dq:
            a1, b1, _ = dq[-1]
            if a1 * ln[1] - b1 * ln[0] <= 0:
                # consecutive normals turn by pi or more: unbounded or empty
                if a1 * ln[0] + b1 * ln[1] < 0 and ln[2] + dq[-1][2] < 0:
                    return np.zeros((0, 2))
        dq.append(ln)
    while len(dq) >= 3 and _outside(dq[0], _meet(dq[-2], dq[-1]), eps):
        dq.pop()
    while len(dq) >= 3 and _outside(dq[-1], _meet(dq[0], dq[1]), eps):
        dq.pop(0)
    if len(dq) < 3:
        return np.zeros((0, 2))
    pts = np.array([_meet(dq[i], dq[(i + 1) % len(dq)]) for i in range(len(dq))])
    # every vertex must satisfy all constraints, else the region is empty
    viol = pts @ U.T - H[None, :]
    if viol.max() > 1e-9 * scale:
        return np.zeros((0, 2))
    # drop vertices repeated where several lines meet at one point
    step = np.abs(pts - np.roll(pts, 1, axis=0)).max(axis=1)
    keep = step > 1e-12 * scale
    if keep.sum() >= 3:
        pts = pts[keep]
    return pts


def _walk(V, i, j):
    """Vertices from index i to j going forward (cyclically)."""
    n = len(V)
    idx = [(i + k) % n for k in range(((j - i) % n) + 1)]
    return V[idx]


def slab_ranges(poly, y_edges):
    """For each slab [y_edges[k], y_edges[k+1]] the x-range of a convex polygon.

    Returns (xmin, xmax) arrays; empty slabs get xmin = +inf, xmax = -inf.
    """
    y_edges = np.asarray(y_edges, dtype=float)
    ns = len(y_edges) - 1
    xmin = np.full(ns, np.inf)
    xmax = np.full(ns, -np.inf)
    if len(poly) == 0:
        return xmin, xmax
    V = np.asarray(poly, dtype=float)
    if len(V) >= 3 and polygon_area(V) < 0:
        V = V[::-1]
    # vertices inside each slab; one on a slab edge belongs to both slabs
    for side in ("left", "right"):
        k = np.searchsorted(y_edges, V[:, 1], side=side) - 1
        ok = (k >= 0) & (k < ns)
        np.minimum.at(xmin, k[ok], V[ok, 0])
        np.maximum.at(xmax, k[ok], V[ok, 0])
    y, x = V[:, 1], V[:, 0]
    ylo, yhi = y.min(), y.max()
    if len(V) < 3 or ylo == yhi:
        return xmin, xmax
    low, top = y == ylo, y == yhi
    br = int(np.flatnonzero(low)[np.argmax(x[low])])
    bl = int(np.flatnonzero(low)[np.argmin(x[low])])
    tr = int(np.flatnonzero(top)[np.argmax(x[top])])
    tl = int(np.flatnonzero(top)[np.argmin(x[top])])
    right = _walk(V, br, tr)           # counterclockwise: y increases
    left = _walk(V, tl, bl)[::-1]      # reversed so y increases
    s0 = np.maximum(y_edges[:-1], ylo)
    s1 = np.minimum(y_edges[1:], yhi)
    hit = s0 <= s1
    for chain, out, red in ((right, xmax, np.maximum), (left, xmin, np.minimum)):
        for yy in (s0[hit], s1[hit]):
            out[hit] = red(out[hit], np.interp(yy, chain[:, 1], chain[:, 0]))
    return xmin, xmax


def point_polygon_distance(points, poly):
    """Euclidean distance from points to a convex polygon (0 inside)."""
    P = np.atleast_2d(np.asarray(points, dtype=float))
    V = np.asarray(poly, dtype=float)
    if len(V) == 1:
        return np.linalg.norm(P - V[0], axis=1)
    A = V
    B = np.roll(V, -1, axis=0) if len(V) > 2 else V[[1, 0]]
    E = B - A
    L2 = np.maximum((E ** 2).sum(axis=1), 1e-300)
    D = P[:, None, :] - A[None, :, :]
    w = np.clip((D * E[None]).sum(axis=2) / L2[None], 0.0, 1.0)
    C = A[None] + w[..., None] * E[None]
    dist = np.linalg.norm(P[:, None, :] - C, axis=2).min(axis=1)
    if len(V) >= 3:
        cr = E[None, :, 0] * D[..., 1] - E[None, :, 1] * D[..., 0]
        tiny = L2 <= 1e-24 * max(1.0, float(np.abs(V).max())) ** 2
        inside = ((cr >= 0) | tiny[None, :]).all(axis=1)
        dist = np.where(inside, 0.0, dist)
    return dist


def polygon_hausdorff(P, Q):
    """Hausdorff distance between two convex polygons (as filled sets)."""
    P = np.atleast_2d(np.asarray(P, dtype=float))
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    # for convex bodies the farthest point lies at a vertex
    return float(max(point_polygon_distance(P, Q).max(), point_polygon_distance(Q, P).max()))


def unit_directions(k):
    ang = 2.0 * np.pi * np.arange(k) / k
    return np.stack([np.cos(ang), np.sin(ang)], axis=1)
