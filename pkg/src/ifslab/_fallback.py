"""Pure numpy versions of the compiled kernels (same float expressions)."""

import numpy as np

_MULT = 6364136223846793005
_INC = 1442695040888963407
_MASK = (1 << 64) - 1


def _centers(n, hh):
    return (2 * np.arange(n, dtype=np.int64) + 1 - n).astype(float) * hh


def _range(p, R, hh, n, clamp=True):
    # candidate index range; the overlap test decides, 1e-6 guards rounding
    a = np.floor(((p - R) / hh + (n - 1)) / 2.0 - 1e-6)
    b = np.ceil(((p + R) / hh + (n - 1)) / 2.0 + 1e-6)
    if not clamp:
        return a.astype(np.int64), b.astype(np.int64)
    return np.clip(a, 0, n - 1).astype(np.int64), np.clip(b, 0, n - 1).astype(np.int64)


def _targets(src_i, src_j, P, hh, nx, ny, sx, sy, mask=None, clamp=True):
    """(source index, target i, target j) for one map.

    sx, sy: grid shape of the source array; nx, ny: grid shape of targets.
    With clamp=False target indices may fall outside the grid.
    """
    x = (2 * src_i + 1 - sx).astype(float) * hh
    y = (2 * src_j + 1 - sy).astype(float) * hh
    px = P[0] * x + P[1] * y + P[4]
    py = P[2] * x + P[3] * y + P[5]
    ilo, ihi = _range(px, P[6], hh, nx, clamp)
    jlo, jhi = _range(py, P[7], hh, ny, clamp)
    wx = int((ihi - ilo).max(initial=-1)) + 1
    wy = int((jhi - jlo).max(initial=-1)) + 1
    out_s, out_i, out_j = [], [], []
    src = np.arange(src_i.size)
    for oi in range(wx):
        ti = ilo + oi
        vi = ti <= ihi
        for oj in range(wy):
            tj = jlo + oj
            v = vi & (tj <= jhi)
            if not v.any():
                continue
            s = src[v]
            a_i = ti[v]
            a_j = tj[v]
            if mask is not None:
                m = mask[a_i, a_j].astype(bool)
                s, a_i, a_j = s[m], a_i[m], a_j[m]
            cx = (2 * a_i + 1 - nx).astype(float) * hh
            cy = (2 * a_j + 1 - ny).astype(float) * hh
            dx = px[s] - cx
            dy = py[s] - cy
            hit = ((np.abs(dx) < P[6]) & (np.abs(dy) < P[7])
                   & (np.abs(dx * P[8] + dy * P[9]) < P[10])
                   & (np.abs(dx * P[11] + dy * P[12]) < P[13]))
            out_s.append(s[hit])
            out_i.append(a_i[hit])
            out_j.append(a_j[hit])
    if not out_s:
        e = np.zeros(0, dtype=np.int64)
        return e, e, e
    return np.concatenate(out_s), np.concatenate(out_i), np.concatenate(out_j)


def _hits(src_i, src_j, occ, params, hh):
    """Flat target indices hit from the given sources, one array per map."""
    nx, ny = occ.shape
    flat = []
    for P in params:
        _, ti, tj = _targets(src_i, src_j, P, hh, nx, ny, nx, ny, mask=occ)
        flat.append(ti * ny + tj)
    return flat


def prune(occ, params, h, max_layers, per_map=None):
    nx, ny = occ.shape
    hh = h / 2.0
    nm = len(params)
    si, sj = np.nonzero(occ)
    sup = np.stack([np.bincount(f, minlength=nx * ny) for f in _hits(si, sj, occ, params, hh)])
    support = sup.sum(axis=0)
    layer = np.flatnonzero(occ.reshape(-1).astype(bool) & (support == 0))
    layers = 0
    while layer.size:
        layers += 1
        if layers > max_layers:
            return -1
        occ.reshape(-1)[layer] = 0
        li, lj = np.divmod(layer, ny)
        dec = _hits(li, lj, occ, params, hh)
        for k in range(nm):
            np.subtract.at(sup[k], dec[k], 1)
        dec = np.concatenate(dec)
        if dec.size == 0:
            break
        np.subtract.at(support, dec, 1)
        touched = np.unique(dec)
        layer = touched[support[touched] == 0]
    if per_map is not None:
        per_map[...] = sup.reshape(nm, nx, ny)
    return layers


def close(occ, params, h):
    nx, ny = occ.shape
    hh = h / 2.0
    fi, fj = np.nonzero(occ)
    added = 0
    while fi.size:
        ti_all, tj_all = [], []
        for P in params:
            _, ti, tj = _targets(fi, fj, P, hh, nx, ny, nx, ny, clamp=False)
            ti_all.append(ti)
            tj_all.append(tj)
        ti = np.concatenate(ti_all)
        tj = np.concatenate(tj_all)
        if ((ti < 0) | (ti >= nx) | (tj < 0) | (tj >= ny)).any():
            return -1
        flat = np.unique(ti * ny + tj)
        flat = flat[occ.reshape(-1)[flat] == 0]
        occ.reshape(-1)[flat] = 1
        added += flat.size
        fi, fj = np.divmod(flat, ny)
    return added


def image_mask(occ, params, h, out):
    sx, sy = occ.shape
    ox, oy = out.shape
    hh = h / 2.0
    si, sj = np.nonzero(occ)
    for P in params:
        _, ti, tj = _targets(si, sj, P, hh, ox, oy, sx, sy)
        out[ti, tj] = 1


def chaos_game(maps, cum, seed, n, burn, x0, out):
    d = x0.shape[0]
    s = int(seed) & _MASK
    nm = maps.shape[0]
    cum = [float(c) for c in cum]
    rows = [list(map(float, r)) for r in maps]
    scale = 1.0 / 9007199254740992.0
    if d == 1:
        x = float(x0[0])
        for step in range(burn + n):
            s = (s * _MULT + _INC) & _MASK
            u = (s >> 11) * scale
            k = 0
            while k < nm - 1 and not u < cum[k]:
                k += 1
            M = rows[k]
            x = M[0] * x + M[1]
            if step >= burn:
                out[step - burn, 0] = x
    else:
        x, y = float(x0[0]), float(x0[1])
        for step in range(burn + n):
            s = (s * _MULT + _INC) & _MASK
            u = (s >> 11) * scale
            k = 0
            while k < nm - 1 and not u < cum[k]:
                k += 1
            M = rows[k]
            x, y = M[0] * x + M[1] * y + M[4], M[2] * x + M[3] * y + M[5]
            if step >= burn:
                out[step - burn, 0] = x
                out[step - burn, 1] = y
    return s
