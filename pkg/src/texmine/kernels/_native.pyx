# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: cell histograms, Jensen-Shannon distances, region search.

Semantics mirror texmine.kernels.numpy_backend; see the docstrings there.
Histogram bucketing casts to double before scaling by ``bins`` so both
backends place every value in the same bucket.
"""

from libc.math cimport log2, sqrt

import numpy as np


def cell_histograms(const float[:, :, ::1] planes, int cell_px, int bins):
    cdef Py_ssize_t h = planes.shape[0]
    cdef Py_ssize_t w = planes.shape[1]
    cdef Py_ssize_t nch = planes.shape[2]
    cdef Py_ssize_t ch = h // cell_px
    cdef Py_ssize_t cw = w // cell_px
    out = np.zeros((ch, cw, nch, bins), dtype=np.float64)
    if ch == 0 or cw == 0 or nch == 0:
        return out
    cdef double[:, :, :, ::1] hist = out
    cdef Py_ssize_t y, x, c, cy, cx, b
    cdef double v
    for y in range(ch * cell_px):
        cy = y // cell_px
        for x in range(cw * cell_px):
            cx = x // cell_px
            for c in range(nch):
                v = <double> planes[y, x, c]
                b = <Py_ssize_t> (v * bins)
                if b >= bins:
                    b = bins - 1
                hist[cy, cx, c, b] += 1.0
    # divide (not multiply by reciprocal) so results match the fallback bitwise
    cdef double area = <double> cell_px * <double> cell_px
    cdef Py_ssize_t i
    cdef double * flat = &hist[0, 0, 0, 0]
    for i in range(ch * cw * nch * bins):
        flat[i] /= area
    return out


def pair_distances(const double[:, :, ::1] hists,
                   const long long[::1] ia,
                   const long long[::1] ib):
    cdef Py_ssize_t npairs = ia.shape[0]
    cdef Py_ssize_t nch = hists.shape[1]
    cdef Py_ssize_t bins = hists.shape[2]
    cdef Py_ssize_t nrows = hists.shape[0]
    out = np.empty(npairs, dtype=np.float64)
    cdef double[::1] res = out
    # JSD = H(M) - (H(P) + H(Q)) / 2 with H(X) = -sum x*log2(x); the
    # per-row terms E(X) = sum x*log2(x) are precomputed once, halving
    # the log2 work per pair. For P == Q the M-sum repeats the same
    # terms in the same order, so the result is exactly 0.
    ent_arr = np.zeros((nrows, nch), dtype=np.float64)
    cdef double[:, ::1] ent = ent_arr
    cdef Py_ssize_t k, c, b, i, j
    cdef double p, q, m, acc, jsd, total
    cdef const double * pr
    cdef const double * qr
    with nogil:
        for i in range(nrows):
            pr = &hists[i, 0, 0]
            for c in range(nch):
                acc = 0.0
                for b in range(c * bins, (c + 1) * bins):
                    p = pr[b]
                    if p > 0.0:
                        acc += p * log2(p)
                ent[i, c] = acc
        for k in range(npairs):
            i = <Py_ssize_t> ia[k]
            j = <Py_ssize_t> ib[k]
            pr = &hists[i, 0, 0]
            qr = &hists[j, 0, 0]
            total = 0.0
            for c in range(nch):
                acc = 0.0
                for b in range(c * bins, (c + 1) * bins):
                    m = 0.5 * (pr[b] + qr[b])
                    if m > 0.0:
                        acc += m * log2(m)
                jsd = 0.5 * (ent[i, c] + ent[j, c]) - acc
                if jsd < 0.0:
                    jsd = 0.0
                elif jsd > 1.0:
                    jsd = 1.0
                total += sqrt(jsd)
            res[k] = total / nch
    return out


cdef inline double _pair(const double[:, :, :, ::1] t, Py_ssize_t off,
                         Py_ssize_t y1, Py_ssize_t x1,
                         Py_ssize_t y2, Py_ssize_t x2) noexcept nogil:
    # canonical storage: anchored at the lexicographically smaller cell
    cdef Py_ssize_t dy = y2 - y1
    cdef Py_ssize_t dx = x2 - x1
    if dy < 0 or (dy == 0 and dx < 0):
        return t[y2, x2, -dy, off - dx]
    return t[y1, x1, dy, off + dx]


def region_search(const double[:, :, :, ::1] table,
                  int min_cells, int max_cells, double threshold):
    cdef Py_ssize_t ch = table.shape[0]
    cdef Py_ssize_t cw = table.shape[1]
    cdef Py_ssize_t mw = table.shape[2]
    cdef Py_ssize_t off = mw - 1
    sides_arr = np.zeros((ch, cw), dtype=np.int32)
    dists_arr = np.zeros((ch, cw), dtype=np.float64)
    cdef int[:, ::1] sides = sides_arr
    cdef double[:, ::1] dists = dists_arr
    cdef Py_ssize_t y0, x0, s, limit, yb, xr, x, y, x2, y2
    cdef double cur, d
    with nogil:
        for y0 in range(ch - min_cells + 1):
            for x0 in range(cw - min_cells + 1):
                limit = max_cells
                if ch - y0 < limit:
                    limit = ch - y0
                if cw - x0 < limit:
                    limit = cw - x0
                if mw < limit:
                    limit = mw
                # grow the window one ring at a time; the max over pairs is
                # monotone in the side, so the first failure is final
                cur = 0.0
                for s in range(2, limit + 1):
                    yb = y0 + s - 1
                    xr = x0 + s - 1
                    # new bottom row vs rows above, and within itself
                    for x in range(x0, x0 + s):
                        for y in range(y0, yb):
                            for x2 in range(x0, x0 + s):
                                d = table[y, x2, yb - y, off + x - x2]
                                if d > cur:
                                    cur = d
                        for x2 in range(x + 1, x0 + s):
                            d = table[yb, x, 0, off + x2 - x]
                            if d > cur:
                                cur = d
                        if cur > threshold:
                            break
                    # new right column (above the bottom row) vs older cells
                    if cur <= threshold:
                        for y in range(y0, yb):
                            for y2 in range(y0, yb):
                                for x in range(x0, xr):
                                    d = _pair(table, off, y2, x, y, xr)
                                    if d > cur:
                                        cur = d
                            for y2 in range(y + 1, yb):
                                d = table[y, xr, y2 - y, off]
                                if d > cur:
                                    cur = d
                            if cur > threshold:
                                break
                    if cur > threshold:
                        break
                    if s >= min_cells:
                        sides[y0, x0] = <int> s
                        dists[y0, x0] = cur
    return sides_arr, dists_arr
