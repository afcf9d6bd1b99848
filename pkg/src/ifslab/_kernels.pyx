# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled grid Hutchinson kernels and the chaos-game loop.

Every floating-point expression mirrors ifslab._fallback term by term so both
backends take identical decisions.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, floor, ceil
from libc.stdlib cimport malloc, free

cnp.import_array()

# parameter columns, see ifslab._grid.map_params
DEF NP = 14


cdef inline bint _hit(const double* P, double px, double py, double cx, double cy) noexcept nogil:
    cdef double dx = px - cx
    cdef double dy = py - cy
    if not fabs(dx) < P[6]:
        return 0
    if not fabs(dy) < P[7]:
        return 0
    if not fabs(dx * P[8] + dy * P[9]) < P[10]:
        return 0
    if not fabs(dx * P[11] + dy * P[12]) < P[13]:
        return 0
    return 1


cdef inline void _range(double p, double R, double hh, Py_ssize_t n, Py_ssize_t* lo, Py_ssize_t* hi) noexcept nogil:
    cdef double a = floor(((p - R) / hh + (n - 1)) / 2.0 - 1e-6)
    cdef double b = ceil(((p + R) / hh + (n - 1)) / 2.0 + 1e-6)
    if a < 0:
        a = 0
    if b > n - 1:
        b = n - 1
    lo[0] = <Py_ssize_t>a
    hi[0] = <Py_ssize_t>b


cdef inline void _range_raw(double p, double R, double hh, Py_ssize_t n, Py_ssize_t* lo, Py_ssize_t* hi) noexcept nogil:
    lo[0] = <Py_ssize_t>floor(((p - R) / hh + (n - 1)) / 2.0 - 1e-6)
    hi[0] = <Py_ssize_t>ceil(((p + R) / hh + (n - 1)) / 2.0 + 1e-6)


def close(unsigned char[:, ::1] occ, double[:, ::1] params, double h):
    """Add every cell hit by the image of an occupied cell, until closed.

    Returns the number of cells added, or -1 if some image hits a cell
    outside the grid (occ is then partially updated).
    """
    cdef Py_ssize_t nx = occ.shape[0], ny = occ.shape[1], nm = params.shape[0]
    cdef Py_ssize_t ncell = nx * ny
    cdef double hh = h / 2.0
    cdef Py_ssize_t* queue
    cdef Py_ssize_t head = 0, tail = 0, added = 0
    cdef Py_ssize_t i, j, k, ti, tj, ilo, ihi, jlo, jhi, c
    cdef double x, y, px, py, cx, cy
    cdef const double* P
    cdef bint escaped = 0
    if params.shape[1] != NP:
        raise ValueError("bad parameter array")
    queue = <Py_ssize_t*>malloc((ncell + 1) * sizeof(Py_ssize_t))
    if queue == NULL:
        raise MemoryError()
    with nogil:
        for i in range(nx):
            for j in range(ny):
                if occ[i, j]:
                    queue[tail] = i * ny + j
                    tail += 1
        while head < tail and not escaped:
            c = queue[head]
            head += 1
            i = c // ny
            j = c % ny
            x = (2 * i + 1 - nx) * hh
            y = (2 * j + 1 - ny) * hh
            for k in range(nm):
                P = &params[k, 0]
                px = P[0] * x + P[1] * y + P[4]
                py = P[2] * x + P[3] * y + P[5]
                _range_raw(px, P[6], hh, nx, &ilo, &ihi)
                _range_raw(py, P[7], hh, ny, &jlo, &jhi)
                for ti in range(ilo, ihi + 1):
                    cx = (2 * ti + 1 - nx) * hh
                    for tj in range(jlo, jhi + 1):
                        cy = (2 * tj + 1 - ny) * hh
                        if not _hit(P, px, py, cx, cy):
                            continue
                        if ti < 0 or ti >= nx or tj < 0 or tj >= ny:
                            escaped = 1
                            break
                        if not occ[ti, tj]:
                            occ[ti, tj] = 1
                            queue[tail] = ti * ny + tj
                            tail += 1
                            added += 1
                    if escaped:
                        break
                if escaped:
                    break
    free(queue)
    if escaped:
        return -1
    return added


def prune(unsigned char[:, ::1] occ, double[:, ::1] params, double h, long max_layers,
          int[:, :, ::1] per_map=None):
    """Remove unsupported cells until the greatest fixpoint is reached.

    Returns the number of synchronous removal layers, or -1 once max_layers is
    exceeded (occ is then left in an intermediate state). per_map, if given
    (zeroed, shape (maps, nx, ny)), receives the support counted per map.
    """
    cdef Py_ssize_t nx = occ.shape[0], ny = occ.shape[1], nm = params.shape[0]
    cdef Py_ssize_t ncell = nx * ny
    cdef double hh = h / 2.0
    cdef int* support
    cdef Py_ssize_t* cur
    cdef Py_ssize_t* nxt
    cdef Py_ssize_t* tmp
    cdef Py_ssize_t ncur = 0, nnxt = 0
    cdef Py_ssize_t i, j, k, ti, tj, ilo, ihi, jlo, jhi, c, idx
    cdef double x, y, px, py, cx, cy
    cdef const double* P
    cdef long layers = 0
    cdef bint exceeded = 0
    cdef bint track = per_map is not None

    if params.shape[1] != NP:
        raise ValueError("bad parameter array")
    if track and (per_map.shape[0] != nm or per_map.shape[1] != nx or per_map.shape[2] != ny):
        raise ValueError("per_map has the wrong shape")
    support = <int*>malloc(ncell * sizeof(int))
    cur = <Py_ssize_t*>malloc((ncell + 1) * sizeof(Py_ssize_t))
    nxt = <Py_ssize_t*>malloc((ncell + 1) * sizeof(Py_ssize_t))
    if support == NULL or cur == NULL or nxt == NULL:
        free(support); free(cur); free(nxt)
        raise MemoryError()
    with nogil:
        for c in range(ncell):
            support[c] = 0
        for i in range(nx):
            x = (2 * i + 1 - nx) * hh
            for j in range(ny):
                if not occ[i, j]:
                    continue
                y = (2 * j + 1 - ny) * hh
                for k in range(nm):
                    P = &params[k, 0]
                    px = P[0] * x + P[1] * y + P[4]
                    py = P[2] * x + P[3] * y + P[5]
                    _range(px, P[6], hh, nx, &ilo, &ihi)
                    _range(py, P[7], hh, ny, &jlo, &jhi)
                    for ti in range(ilo, ihi + 1):
                        cx = (2 * ti + 1 - nx) * hh
                        for tj in range(jlo, jhi + 1):
                            if not occ[ti, tj]:
                                continue
                            cy = (2 * tj + 1 - ny) * hh
                            if _hit(P, px, py, cx, cy):
                                support[ti * ny + tj] += 1
                                if track:
                                    per_map[k, ti, tj] += 1
        for i in range(nx):
            for j in range(ny):
                if occ[i, j] and support[i * ny + j] == 0:
                    cur[ncur] = i * ny + j
                    ncur += 1
        while ncur > 0:
            layers += 1
            if layers > max_layers:
                exceeded = 1
                break
            for idx in range(ncur):
                c = cur[idx]
                occ[c // ny, c % ny] = 0
            nnxt = 0
            for idx in range(ncur):
                c = cur[idx]
                i = c // ny
                j = c % ny
                x = (2 * i + 1 - nx) * hh
                y = (2 * j + 1 - ny) * hh
                for k in range(nm):
                    P = &params[k, 0]
                    px = P[0] * x + P[1] * y + P[4]
                    py = P[2] * x + P[3] * y + P[5]
                    _range(px, P[6], hh, nx, &ilo, &ihi)
                    _range(py, P[7], hh, ny, &jlo, &jhi)
                    for ti in range(ilo, ihi + 1):
                        cx = (2 * ti + 1 - nx) * hh
                        for tj in range(jlo, jhi + 1):
                            if not occ[ti, tj]:
                                continue
                            cy = (2 * tj + 1 - ny) * hh
                            if _hit(P, px, py, cx, cy):
                                support[ti * ny + tj] -= 1
                                if track:
                                    per_map[k, ti, tj] -= 1
                                if support[ti * ny + tj] == 0:
                                    nxt[nnxt] = ti * ny + tj
                                    nnxt += 1
            tmp = cur
            cur = nxt
            nxt = tmp
            ncur = nnxt
    free(support)
    free(cur)
    free(nxt)
    if exceeded:
        return -1
    return layers


def image_mask(const unsigned char[:, ::1] occ, double[:, ::1] params, double h,
               unsigned char[:, ::1] out):
    """Mark in out every cell hit by the image of an occupied cell."""
    cdef Py_ssize_t nx = occ.shape[0], ny = occ.shape[1], nm = params.shape[0]
    cdef Py_ssize_t ox = out.shape[0], oy = out.shape[1]
    cdef double hh = h / 2.0
    cdef Py_ssize_t i, j, k, ti, tj, ilo, ihi, jlo, jhi
    cdef double x, y, px, py, cx, cy
    cdef const double* P
    if params.shape[1] != NP:
        raise ValueError("bad parameter array")
    with nogil:
        for i in range(nx):
            x = (2 * i + 1 - nx) * hh
            for j in range(ny):
                if not occ[i, j]:
                    continue
                y = (2 * j + 1 - ny) * hh
                for k in range(nm):
                    P = &params[k, 0]
                    px = P[0] * x + P[1] * y + P[4]
                    py = P[2] * x + P[3] * y + P[5]
                    _range(px, P[6], hh, ox, &ilo, &ihi)
                    _range(py, P[7], hh, oy, &jlo, &jhi)
                    for ti in range(ilo, ihi + 1):
                        cx = (2 * ti + 1 - ox) * hh
                        for tj in range(jlo, jhi + 1):
                            cy = (2 * tj + 1 - oy) * hh
                            if _hit(P, px, py, cx, cy):
                                out[ti, tj] = 1


def chaos_game(double[:, ::1] maps, double[::1] cum, unsigned long long seed,
               long n, long burn, double[::1] x0, double[:, ::1] out):
    """Weighted random orbit; maps rows hold L (row-major) then a."""
    cdef Py_ssize_t d = x0.shape[0], nm = maps.shape[0]
    cdef unsigned long long s = seed
    cdef double u, x, y, nx_, ny_
    cdef Py_ssize_t step, k
    cdef const double* M
    if d == 1:
        x = x0[0]
        with nogil:
            for step in range(burn + n):
                s = s * 6364136223846793005ULL + 1442695040888963407ULL
                u = <double>(s >> 11) * (1.0 / 9007199254740992.0)
                k = 0
                while k < nm - 1 and not u < cum[k]:
                    k += 1
                M = &maps[k, 0]
                x = M[0] * x + M[1]
                if step >= burn:
                    out[step - burn, 0] = x
    else:
        x = x0[0]
        y = x0[1]
        with nogil:
            for step in range(burn + n):
                s = s * 6364136223846793005ULL + 1442695040888963407ULL
                u = <double>(s >> 11) * (1.0 / 9007199254740992.0)
                k = 0
                while k < nm - 1 and not u < cum[k]:
                    k += 1
                M = &maps[k, 0]
                nx_ = M[0] * x + M[1] * y + M[4]
                ny_ = M[2] * x + M[3] * y + M[5]
                x = nx_
                y = ny_
                if step >= burn:
                    out[step - burn, 0] = x
                    out[step - burn, 1] = y
    return s
